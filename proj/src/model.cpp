#include "cedi/model.hpp"

#include <algorithm>
#include <cmath>

namespace cedi::model {

int CediConfig::feature_width() const {
  int w = 0;
  if (features.chars) w += 2 * char_hidden;
  if (features.token) w += token_dim;
  if (features.prefix) w += prefix_dim;
  if (features.suffix) w += prefix_dim;
  if (features.context) w += 2 * context_hidden;
  return w;
}

void CediConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) {
      throw ConfigError(std::string(name) + " must be >= 1, got " +
                        std::to_string(v));
    }
  };
  positive(ngram_size, "ngram_size");
  positive(char_dim, "char_dim");
  positive(prefix_dim, "prefix_dim");
  positive(affix_length, "affix_length");
  positive(token_dim, "token_dim");
  positive(char_hidden, "char_hidden");
  positive(context_hidden, "context_hidden");
  positive(main_hidden, "main_hidden");
  positive(attention_dim, "attention_dim");
  positive(chunk_length, "chunk_length");
  positive(max_epochs, "max_epochs");
  if (prefix_threshold < 0) throw ConfigError("prefix_threshold must be >= 0");
  if (patience < 0 || patience > max_epochs) {
    throw ConfigError("patience must lie in [0, max_epochs]");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must be in [0, 1)");
  }
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (!features.any_input()) {
    throw ConfigError("no input features enabled; the model has no signal");
  }
  if (features.attention && window() < 1) {
    throw ConfigError("attention_window must be >= 1");
  }
  if (attention_over_chars && !features.chars) {
    throw ConfigError("attention_over_chars requires the char feature");
  }
  if (attention_over_ngrams && !features.context) {
    throw ConfigError("attention_over_ngrams requires the context feature");
  }
}

std::vector<std::pair<std::string, TensorPtr>> CediModel::named_parameters()
    const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  if (config.features.chars) {
    out.emplace_back("char_table", char_table.weights);
    char_fwd.collect(out, "char_fwd");
    char_bwd.collect(out, "char_bwd");
    if (config.attention_over_chars) {
      char_attention.collect(out, "char_attention");
    }
  }
  if (config.features.token) out.emplace_back("token_table", token_table.weights);
  if (config.features.prefix) {
    out.emplace_back("prefix_table", prefix_table.weights);
  }
  if (config.features.suffix) {
    out.emplace_back("suffix_table", suffix_table.weights);
  }
  if (config.features.context) {
    context.collect(out);
    if (config.attention_over_ngrams) {
      ngram_attention.collect(out, "ngram_attention");
    }
  }
  main_fwd.collect(out, "main_fwd");
  main_bwd.collect(out, "main_bwd");
  if (config.features.attention) attention.collect(out, "attention");
  out.emplace_back("emission_w", emission_w);
  out.emplace_back("emission_b", emission_b);
  crf_params.collect(out);
  return out;
}

std::vector<TensorPtr> CediModel::parameters() const {
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

CediModel CediModel::clone() const {
  CediModel m;
  m.config = config;
  m.vocab = vocab;
  const auto& f = config.features;
  if (f.chars) {
    m.char_table = char_table.clone();
    m.char_fwd = char_fwd.clone();
    m.char_bwd = char_bwd.clone();
    if (config.attention_over_chars) m.char_attention = char_attention.clone();
  }
  if (f.token) m.token_table = token_table.clone();
  if (f.prefix) m.prefix_table = prefix_table.clone();
  if (f.suffix) m.suffix_table = suffix_table.clone();
  if (f.context) {
    m.context = context.clone();
    if (config.attention_over_ngrams) {
      m.ngram_attention = ngram_attention.clone();
    }
  }
  m.main_fwd = main_fwd.clone();
  m.main_bwd = main_bwd.clone();
  if (f.attention) m.attention = attention.clone();
  m.emission_w = emission_w->clone();
  m.emission_b = emission_b->clone();
  m.crf_params = crf_params.clone();
  return m;
}

int CediModel::crf_tag_of(const std::string& tag) const {
  return vocab.tags.id_of(tag) - 1;
}

const std::string& CediModel::tag_of_crf(int crf_index) const {
  return vocab.tags.str_of(crf_index + 1);
}

CediModel build(const CediConfig& config, const corpus::Vocabulary& vocab,
                const corpus::EmbeddingTable* pretrained) {
  config.validate();
  if (vocab.tags.size() < 2) {
    throw ConfigError("vocabulary has no tags");
  }
  CediModel m;
  m.config = config;
  m.vocab = vocab;
  Rng rng(Rng::derive(config.seed, 0xB01D));
  const auto& f = config.features;

  if (f.chars) {
    m.char_table = corpus::EmbeddingTable::random(
        vocab.chars.size(), config.char_dim,
        std::sqrt(3.0 / config.char_dim), rng);
    m.char_fwd = layers::LstmParams::init(config.char_dim, config.char_hidden, rng);
    m.char_bwd = layers::LstmParams::init(config.char_dim, config.char_hidden, rng);
    if (config.attention_over_chars) {
      m.char_attention = layers::AttentionParams::init(
          config.attention_dim, 2 * config.char_hidden,
          2 * config.char_hidden, rng);
    }
  }
  if (f.token) {
    if (pretrained) {
      if (pretrained->dim != config.token_dim) {
        throw ConfigError("pretrained dim " + std::to_string(pretrained->dim) +
                          " != token_dim " + std::to_string(config.token_dim));
      }
      if (pretrained->rows() != vocab.tokens.size()) {
        throw ConfigError("pretrained table rows do not match the vocabulary");
      }
      m.token_table = pretrained->clone();
    } else {
      m.token_table = corpus::EmbeddingTable::random(
          vocab.tokens.size(), config.token_dim,
          std::sqrt(3.0 / config.token_dim), rng);
    }
  }
  if (f.prefix) {
    m.prefix_table = corpus::EmbeddingTable::random(
        vocab.prefixes.size(), config.prefix_dim,
        std::sqrt(3.0 / config.prefix_dim), rng);
  }
  if (f.suffix) {
    m.suffix_table = corpus::EmbeddingTable::random(
        vocab.suffixes.size(), config.prefix_dim,
        std::sqrt(3.0 / config.prefix_dim), rng);
  }
  if (f.context) {
    m.context = context::ContextTables::init(
        vocab.tokens.size(), config.token_dim, config.context_hidden, rng);
    if (config.attention_over_ngrams) {
      m.ngram_attention = layers::AttentionParams::init(
          config.attention_dim, config.context_hidden, config.context_hidden,
          rng);
    }
  }
  m.main_fwd =
      layers::LstmParams::init(config.feature_width(), config.main_hidden, rng);
  m.main_bwd =
      layers::LstmParams::init(config.feature_width(), config.main_hidden, rng);
  if (f.attention) {
    m.attention = layers::AttentionParams::init(
        config.attention_dim, 2 * config.main_hidden, 2 * config.main_hidden,
        rng);
  }
  const int num_tags = vocab.tags.size() - 1;  // PAD never scored
  m.emission_w = num::Tensor::glorot(num_tags, 2 * config.main_hidden, rng);
  m.emission_b = num::Tensor::zeros({num_tags}, true);
  m.crf_params = crf::CrfParams::init(num_tags);
  return m;
}

namespace {

TensorPtr char_feature(Tape& tape, const CediModel& m, const corpus::Token& tok) {
  if (!m.config.attention_over_chars) {
    return layers::char_encode(tape, tok, m.vocab, m.char_table, m.char_fwd,
                               m.char_bwd);
  }
  std::vector<TensorPtr> embedded;
  embedded.reserve(tok.surface.size());
  for (char c : tok.surface) {
    embedded.push_back(m.char_table.lookup(
        tape, m.vocab.char_id(static_cast<unsigned char>(c))));
  }
  auto fstates = layers::run_lstm(tape, embedded, m.char_fwd, false);
  auto bstates = layers::run_lstm(tape, embedded, m.char_bwd, true);
  std::vector<TensorPtr> states(embedded.size());
  for (size_t i = 0; i < embedded.size(); ++i) {
    states[i] = num::concat(tape, {fstates[i], bstates[i]});
  }
  auto query = num::concat(tape, {fstates.back(), bstates.front()});
  return layers::attention_pool(tape, states, query, m.char_attention);
}

TensorPtr context_feature(Tape& tape, const CediModel& m,
                          const corpus::Document& doc, int t) {
  const auto window =
      context::extract_window(doc, t, m.config.ngram_size, m.vocab);
  if (!m.config.attention_over_ngrams) {
    return num::concat(tape,
                       {context::forward_context(tape, window, m.context),
                        context::backward_context(tape, window, m.context)});
  }
  auto pool = [&](const std::vector<int>& ids, const layers::LstmParams& lstm) {
    auto states = context::direction_states(tape, ids, m.context.table, lstm);
    return layers::attention_pool(tape, states, states.back(),
                                  m.ngram_attention);
  };
  return num::concat(tape, {pool(window.forward_ids, m.context.fwd),
                            pool(window.backward_ids, m.context.bwd)});
}

std::vector<std::pair<int, int>> chunk_ranges(int total, int chunk_length) {
  std::vector<std::pair<int, int>> ranges;
  for (int begin = 0; begin < total; begin += chunk_length) {
    ranges.emplace_back(begin, std::min(total, begin + chunk_length));
  }
  return ranges;
}

}  // namespace

TensorPtr featurize(Tape& tape, const CediModel& model,
                    const corpus::Document& doc, int t, bool training,
                    Rng& rng) {
  if (t < 0 || t >= static_cast<int>(doc.tokens.size())) {
    throw IndexError("featurize: token " + std::to_string(t) + " out of range");
  }
  const corpus::Token& tok = doc.tokens[t];
  const auto& f = model.config.features;
  std::vector<TensorPtr> parts;
  if (f.chars) parts.push_back(char_feature(tape, model, tok));
  if (f.token) {
    parts.push_back(model.token_table.lookup(tape, model.vocab.token_id(tok.lower)));
  }
  if (f.prefix || f.suffix) {
    auto [pre, suf] = corpus::extract_affixes(tok, model.config.affix_length);
    if (f.prefix) {
      parts.push_back(
          model.prefix_table.lookup(tape, model.vocab.prefixes.id_of(pre)));
    }
    if (f.suffix) {
      parts.push_back(
          model.suffix_table.lookup(tape, model.vocab.suffixes.id_of(suf)));
    }
  }
  if (f.context) parts.push_back(context_feature(tape, model, doc, t));
  auto e = num::concat(tape, parts);
  return num::dropout(tape, e, model.config.dropout, training, rng);
}

std::vector<TensorPtr> forward(Tape& tape, const CediModel& model,
                               const corpus::Document& doc, bool training,
                               Rng& rng) {
  const int total = static_cast<int>(doc.tokens.size());
  if (total == 0) throw DomainError("forward: empty document");
  std::vector<TensorPtr> features;
  features.reserve(total);
  for (int t = 0; t < total; ++t) {
    features.push_back(featurize(tape, model, doc, t, training, rng));
  }
  std::vector<TensorPtr> emissions;
  emissions.reserve(total);
  for (auto [begin, end] : chunk_ranges(total, model.config.chunk_length)) {
    std::vector<TensorPtr> chunk(features.begin() + begin,
                                 features.begin() + end);
    auto hidden = layers::bilstm(tape, chunk, model.main_fwd, model.main_bwd);
    for (int i = 0; i < static_cast<int>(hidden.size()); ++i) {
      TensorPtr d = hidden[i];
      if (model.config.features.attention) {
        auto att = layers::attention(tape, hidden, i, model.config.window(),
                                     model.attention);
        d = num::matvec(tape, model.attention.output_proj,
                        num::concat(tape, {hidden[i], att.context}));
      }
      emissions.push_back(num::affine(tape, model.emission_w, d,
                                      model.emission_b));
    }
  }
  return emissions;
}

std::vector<std::string> predict_tags(const CediModel& model,
                                      const corpus::Document& doc) {
  Tape tape(false);
  Rng rng(0);  // inference never draws
  auto emissions = forward(tape, model, doc, false, rng);
  std::vector<std::string> tags;
  tags.reserve(emissions.size());
  const int total = static_cast<int>(emissions.size());
  for (auto [begin, end] : chunk_ranges(total, model.config.chunk_length)) {
    std::vector<TensorPtr> chunk(emissions.begin() + begin,
                                 emissions.begin() + end);
    auto [path, score] = crf::viterbi(crf::to_matrix(chunk), model.crf_params);
    for (int id : path) tags.push_back(model.tag_of_crf(id));
  }
  return tags;
}

std::vector<corpus::EntitySpan> predict(const CediModel& model,
                                        const corpus::Document& doc) {
  if (doc.tokens.empty()) return {};
  return corpus::tags_to_spans(predict_tags(model, doc), model.config.scheme,
                               &doc);
}

TensorPtr loss(Tape& tape, const CediModel& model, const corpus::Document& doc,
               bool training, Rng& rng) {
  const auto tag_strings = corpus::spans_to_tags(doc, model.config.scheme);
  std::vector<int> gold;
  gold.reserve(tag_strings.size());
  for (const auto& tag : tag_strings) gold.push_back(model.crf_tag_of(tag));

  auto emissions = forward(tape, model, doc, training, rng);
  TensorPtr total;
  const int n = static_cast<int>(emissions.size());
  for (auto [begin, end] : chunk_ranges(n, model.config.chunk_length)) {
    std::vector<TensorPtr> chunk(emissions.begin() + begin,
                                 emissions.begin() + end);
    std::vector<int> chunk_gold(gold.begin() + begin, gold.begin() + end);
    auto piece = crf::nll(tape, chunk, model.crf_params, chunk_gold);
    total = total ? num::add(tape, total, piece) : piece;
  }
  return total;
}

}  // namespace cedi::model
