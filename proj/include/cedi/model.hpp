#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cedi/context.hpp"
#include "cedi/corpus.hpp"
#include "cedi/crf.hpp"
#include "cedi/layers.hpp"
#include "cedi/tensor.hpp"

namespace cedi::model {

using num::Tape;
using num::TensorPtr;

struct FeatureFlags {
  bool chars = true;
  bool token = true;
  bool prefix = true;
  bool suffix = false;  // implemented but off: prefixes helped, suffixes did not
  bool context = true;
  bool attention = true;

  bool any_input() const { return chars || token || prefix || suffix || context; }
};

struct CediConfig {
  int ngram_size = 10;
  int char_dim = 25;
  int prefix_dim = 25;
  int prefix_threshold = 20;
  int affix_length = 3;
  int token_dim = 100;
  int char_hidden = 25;
  int prefix_hidden = 25;  // accepted for config parity; prefix features are a lookup
  int context_hidden = 256;
  int main_hidden = 100;   // per direction
  int attention_dim = 50;
  int attention_window = -1;  // -1: same half-width as the context n-grams
  int chunk_length = 500;
  int max_epochs = 100;
  int patience = 15;
  double dropout = 0.5;
  double lr = 0.02;
  double clip_norm = 5.0;
  corpus::TagScheme scheme = corpus::TagScheme::kBioes;
  uint64_t seed = 42;
  FeatureFlags features;
  bool attention_over_chars = false;
  bool attention_over_ngrams = false;

  int window() const { return attention_window >= 0 ? attention_window : ngram_size; }
  int feature_width() const;
  void validate() const;
};

struct CediModel {
  CediConfig config;
  corpus::Vocabulary vocab;

  corpus::EmbeddingTable char_table;    // V_C
  corpus::EmbeddingTable token_table;   // V_T, pretrained-initialized
  corpus::EmbeddingTable prefix_table;
  corpus::EmbeddingTable suffix_table;
  context::ContextTables context;

  layers::LstmParams char_fwd, char_bwd;
  layers::LstmParams main_fwd, main_bwd;
  layers::AttentionParams attention;        // over the concatenated embeddings
  layers::AttentionParams char_attention;   // optional placements
  layers::AttentionParams ngram_attention;

  TensorPtr emission_w;  // [K x 2*main_hidden]
  TensorPtr emission_b;  // [K]
  crf::CrfParams crf_params;

  int num_tags() const { return crf_params.num_tags; }
  // Enabled parameter blocks in a stable order; the registry behind
  // sgd_step, gradient checks, and the checkpoint format.
  std::vector<std::pair<std::string, TensorPtr>> named_parameters() const;
  std::vector<TensorPtr> parameters() const;
  CediModel clone() const;

  // Tag ids offset by 1: CRF index = vocab tag id - 1 (PAD excluded).
  int crf_tag_of(const std::string& tag) const;
  const std::string& tag_of_crf(int crf_index) const;
};

// All trainable tables drawn from the seeded generator; pretrained rows (when
// given) seed V_T. PAD rows are zero and frozen.
CediModel build(const CediConfig& config, const corpus::Vocabulary& vocab,
                const corpus::EmbeddingTable* pretrained = nullptr);

// e_t: concat of the enabled per-token features, dropout-regularized when
// training.
TensorPtr featurize(Tape& tape, const CediModel& model,
                    const corpus::Document& doc, int t, bool training,
                    Rng& rng);

// Emission rows a_t for every token, document-level main biLSTM with optional
// fixed-length chunking.
std::vector<TensorPtr> forward(Tape& tape, const CediModel& model,
                               const corpus::Document& doc, bool training,
                               Rng& rng);

std::vector<std::string> predict_tags(const CediModel& model,
                                      const corpus::Document& doc);
std::vector<corpus::EntitySpan> predict(const CediModel& model,
                                        const corpus::Document& doc);

TensorPtr loss(Tape& tape, const CediModel& model, const corpus::Document& doc,
               bool training, Rng& rng);

// Versioned self-describing checkpoint; load(save(m)) is bit-exact.
void save(const CediModel& model, const std::string& path);
void save(const CediModel& model, std::ostream& out);
CediModel load(const std::string& path);
CediModel load(std::istream& in);

}  // namespace cedi::model
