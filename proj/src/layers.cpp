#include "cedi/layers.hpp"

#include <algorithm>

namespace cedi::layers {

namespace {
constexpr const char* kGateNames[4] = {"i", "f", "g", "o"};
}

LstmParams LstmParams::init(int input_dim, int hidden_dim, Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  for (int g = 0; g < 4; ++g) {
    p.w_in[g] = num::Tensor::glorot(hidden_dim, input_dim, rng);
    p.w_rec[g] = num::Tensor::glorot(hidden_dim, hidden_dim, rng);
    p.bias[g] = num::Tensor::zeros({hidden_dim}, true);
  }
  return p;
}

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  for (int g = 0; g < 4; ++g) {
    p.w_in[g] = num::Tensor::zeros({hidden_dim, input_dim}, true);
    p.w_rec[g] = num::Tensor::zeros({hidden_dim, hidden_dim}, true);
    p.bias[g] = num::Tensor::zeros({hidden_dim}, true);
  }
  return p;
}

void LstmParams::collect(std::vector<std::pair<std::string, TensorPtr>>& out,
                         const std::string& prefix) const {
  for (int g = 0; g < 4; ++g) {
    out.emplace_back(prefix + ".w_in." + kGateNames[g], w_in[g]);
    out.emplace_back(prefix + ".w_rec." + kGateNames[g], w_rec[g]);
    out.emplace_back(prefix + ".bias." + kGateNames[g], bias[g]);
  }
}

LstmParams LstmParams::clone() const {
  LstmParams p = *this;
  for (int g = 0; g < 4; ++g) {
    p.w_in[g] = w_in[g]->clone();
    p.w_rec[g] = w_rec[g]->clone();
    p.bias[g] = bias[g]->clone();
  }
  return p;
}

std::pair<TensorPtr, TensorPtr> lstm_cell(Tape& tape, const TensorPtr& x,
                                          const TensorPtr& h_prev,
                                          const TensorPtr& c_prev,
                                          const LstmParams& params) {
  if (x->shape[0] != params.input_dim ||
      h_prev->shape[0] != params.hidden_dim ||
      c_prev->shape[0] != params.hidden_dim) {
    throw DimensionError(
        "lstm_cell: x " + num::shape_string(*x) + ", h " +
        num::shape_string(*h_prev) + " vs params (" +
        std::to_string(params.input_dim) + " -> " +
        std::to_string(params.hidden_dim) + ")");
  }
  auto gate = [&](int g) {
    auto pre = num::add(tape, num::affine(tape, params.w_in[g], x, params.bias[g]),
                        num::matvec(tape, params.w_rec[g], h_prev));
    return g == 2 ? num::tanh(tape, pre) : num::sigmoid(tape, pre);
  };
  auto i = gate(0);
  auto f = gate(1);
  auto g = gate(2);
  auto o = gate(3);
  auto c = num::add(tape, num::mul(tape, f, c_prev), num::mul(tape, i, g));
  auto h = num::mul(tape, o, num::tanh(tape, c));
  return {h, c};
}

std::vector<TensorPtr> run_lstm(Tape& tape, const std::vector<TensorPtr>& seq,
                                const LstmParams& params, bool reversed) {
  if (seq.empty()) throw DomainError("run_lstm: empty sequence");
  std::vector<TensorPtr> states(seq.size());
  auto h = num::Tensor::zeros({params.hidden_dim});
  auto c = num::Tensor::zeros({params.hidden_dim});
  const int n = static_cast<int>(seq.size());
  for (int step = 0; step < n; ++step) {
    const int t = reversed ? n - 1 - step : step;
    std::tie(h, c) = lstm_cell(tape, seq[t], h, c, params);
    states[t] = h;
  }
  return states;
}

std::vector<TensorPtr> bilstm(Tape& tape, const std::vector<TensorPtr>& seq,
                              const LstmParams& fwd, const LstmParams& bwd) {
  auto f = run_lstm(tape, seq, fwd, false);
  auto b = run_lstm(tape, seq, bwd, true);
  std::vector<TensorPtr> out(seq.size());
  for (size_t t = 0; t < seq.size(); ++t) {
    out[t] = num::concat(tape, {f[t], b[t]});
  }
  return out;
}

TensorPtr char_encode(Tape& tape, const corpus::Token& token,
                      const corpus::Vocabulary& vocab,
                      const corpus::EmbeddingTable& char_table,
                      const LstmParams& fwd, const LstmParams& bwd) {
  if (token.surface.empty()) throw DomainError("char_encode: empty token");
  std::vector<TensorPtr> embedded;
  embedded.reserve(token.surface.size());
  for (char c : token.surface) {
    embedded.push_back(
        char_table.lookup(tape, vocab.char_id(static_cast<unsigned char>(c))));
  }
  auto f = run_lstm(tape, embedded, fwd, false);
  auto b = run_lstm(tape, embedded, bwd, true);
  return num::concat(tape, {f.back(), b.front()});
}

AttentionParams AttentionParams::init(int attn_dim, int state_dim, int out_dim,
                                      Rng& rng) {
  AttentionParams p;
  p.attn_dim = attn_dim;
  p.query_proj = num::Tensor::glorot(attn_dim, state_dim, rng);
  p.key_proj = num::Tensor::glorot(attn_dim, state_dim, rng);
  {
    const double bound = std::sqrt(6.0 / (attn_dim + 1));
    p.score_vec = num::Tensor::uniform({attn_dim}, -bound, bound, rng);
  }
  p.output_proj = num::Tensor::glorot(out_dim, 2 * state_dim, rng);
  return p;
}

void AttentionParams::collect(
    std::vector<std::pair<std::string, TensorPtr>>& out,
    const std::string& prefix) const {
  out.emplace_back(prefix + ".query_proj", query_proj);
  out.emplace_back(prefix + ".key_proj", key_proj);
  out.emplace_back(prefix + ".score_vec", score_vec);
  out.emplace_back(prefix + ".output_proj", output_proj);
}

AttentionParams AttentionParams::clone() const {
  AttentionParams p = *this;
  p.query_proj = query_proj->clone();
  p.key_proj = key_proj->clone();
  p.score_vec = score_vec->clone();
  p.output_proj = output_proj->clone();
  return p;
}

AttentionResult attention(Tape& tape, const std::vector<TensorPtr>& states,
                          int t, int window, const AttentionParams& params) {
  if (t < 0 || t >= static_cast<int>(states.size())) {
    throw IndexError("attention: focus " + std::to_string(t) +
                     " out of range for " + std::to_string(states.size()) +
                     " states");
  }
  if (window < 1) throw DomainError("attention: window must be >= 1");
  const int begin = std::max(0, t - window);
  const int end = std::min(static_cast<int>(states.size()) - 1, t + window);

  auto query = num::matvec(tape, params.query_proj, states[t]);
  std::vector<TensorPtr> scores;
  std::vector<TensorPtr> keys;
  scores.reserve(end - begin + 1);
  for (int j = begin; j <= end; ++j) {
    auto merged = num::tanh(
        tape, num::add(tape, query, num::matvec(tape, params.key_proj, states[j])));
    scores.push_back(num::dot(tape, params.score_vec, merged));
    keys.push_back(states[j]);
  }
  AttentionResult r;
  r.weights = num::softmax(tape, num::stack(tape, scores));
  r.context = num::weighted_sum(tape, r.weights, keys);
  r.window_begin = begin;
  return r;
}

TensorPtr attention_pool(Tape& tape, const std::vector<TensorPtr>& states,
                         const TensorPtr& query, const AttentionParams& params) {
  auto q = num::matvec(tape, params.query_proj, query);
  std::vector<TensorPtr> scores;
  scores.reserve(states.size());
  for (const auto& s : states) {
    auto merged =
        num::tanh(tape, num::add(tape, q, num::matvec(tape, params.key_proj, s)));
    scores.push_back(num::dot(tape, params.score_vec, merged));
  }
  auto weights = num::softmax(tape, num::stack(tape, scores));
  auto context = num::weighted_sum(tape, weights, states);
  return num::matvec(tape, params.output_proj,
                     num::concat(tape, {query, context}));
}

}  // namespace cedi::layers
