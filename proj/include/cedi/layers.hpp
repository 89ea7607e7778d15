#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cedi/corpus.hpp"
#include "cedi/tensor.hpp"

namespace cedi::layers {

using num::Tape;
using num::TensorPtr;

// Gate order: input, forget, cell candidate, output.
struct LstmParams {
  std::array<TensorPtr, 4> w_in;   // each [hidden x input]
  std::array<TensorPtr, 4> w_rec;  // each [hidden x hidden]
  std::array<TensorPtr, 4> bias;   // each [hidden]
  int input_dim = 0;
  int hidden_dim = 0;

  static LstmParams init(int input_dim, int hidden_dim, Rng& rng);
  static LstmParams zeros(int input_dim, int hidden_dim);
  void collect(std::vector<std::pair<std::string, TensorPtr>>& out,
               const std::string& prefix) const;
  LstmParams clone() const;
};

// c = f*c_prev + i*g, h = o*tanh(c) with sigmoid gates and tanh candidate.
std::pair<TensorPtr, TensorPtr> lstm_cell(Tape& tape, const TensorPtr& x,
                                          const TensorPtr& h_prev,
                                          const TensorPtr& c_prev,
                                          const LstmParams& params);

// Hidden states per step, in input order (reversed runs are re-reversed).
std::vector<TensorPtr> run_lstm(Tape& tape, const std::vector<TensorPtr>& seq,
                                const LstmParams& params, bool reversed);

// Position t output = [forward state at t ; backward state at t].
std::vector<TensorPtr> bilstm(Tape& tape, const std::vector<TensorPtr>& seq,
                              const LstmParams& fwd, const LstmParams& bwd);

// Character biLSTM over a token; concat of the two final states (2 x hidden).
TensorPtr char_encode(Tape& tape, const corpus::Token& token,
                      const corpus::Vocabulary& vocab,
                      const corpus::EmbeddingTable& char_table,
                      const LstmParams& fwd, const LstmParams& bwd);

// Additive attention: e_j = score_vec . tanh(Wq h_t + Wk h_j).
struct AttentionParams {
  TensorPtr query_proj;  // [attn_dim x state_dim]
  TensorPtr key_proj;    // [attn_dim x state_dim]
  TensorPtr score_vec;   // [attn_dim]
  TensorPtr output_proj; // [out_dim x 2*state_dim], the merge applied by callers
  int attn_dim = 0;

  static AttentionParams init(int attn_dim, int state_dim, int out_dim,
                              Rng& rng);
  void collect(std::vector<std::pair<std::string, TensorPtr>>& out,
               const std::string& prefix) const;
  AttentionParams clone() const;
};

struct AttentionResult {
  TensorPtr context;
  TensorPtr weights;  // over the clipped window, sums to 1
  int window_begin = 0;
};

// Scores over j in [t-window, t+window] clipped to the sequence.
AttentionResult attention(Tape& tape, const std::vector<TensorPtr>& states,
                          int t, int window, const AttentionParams& params);

// Pools `states` against a query vector and merges: output_proj * [query ; context].
TensorPtr attention_pool(Tape& tape, const std::vector<TensorPtr>& states,
                         const TensorPtr& query, const AttentionParams& params);

}  // namespace cedi::layers
