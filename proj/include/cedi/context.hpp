#pragma once

#include <vector>

#include "cedi/corpus.hpp"
#include "cedi/layers.hpp"
#include "cedi/tensor.hpp"

namespace cedi::context {

using num::Tape;
using num::TensorPtr;

// Token-id windows around x_t. Both lists hold exactly n+1 ids and end with
// x_t itself: forward_ids = (x_{t-n}, ..., x_{t-1}, x_t), backward_ids =
// (x_{t+n}, ..., x_{t+1}, x_t). Positions outside the document are PAD.
struct NgramWindow {
  std::vector<int> forward_ids;
  std::vector<int> backward_ids;
};

// One shared input embedding table feeds both direction LSTMs.
struct ContextTables {
  corpus::EmbeddingTable table;
  layers::LstmParams fwd;
  layers::LstmParams bwd;

  static ContextTables init(int vocab_size, int input_dim, int hidden_dim,
                            Rng& rng);
  void collect(std::vector<std::pair<std::string, TensorPtr>>& out) const;
  ContextTables clone() const;
};

// Ids resolved through the (lowercased) token vocabulary; UNK for unseen.
// Sentence and line structure is never consulted.
NgramWindow extract_window(const corpus::Document& doc, int t, int n,
                           const corpus::Vocabulary& vocab);

// Runs the direction LSTM over the window from a zero state and returns the
// final hidden state (the unit whose input was x_t).
TensorPtr forward_context(Tape& tape, const NgramWindow& window,
                          const ContextTables& tables);
TensorPtr backward_context(Tape& tape, const NgramWindow& window,
                           const ContextTables& tables);

// All per-step states of one direction, for attention pooling over n-grams.
std::vector<TensorPtr> direction_states(Tape& tape,
                                        const std::vector<int>& ids,
                                        const corpus::EmbeddingTable& table,
                                        const layers::LstmParams& lstm);

// concat(forward, backward); a pure function of the token ids in [t-n, t+n].
TensorPtr context_embedding(Tape& tape, const corpus::Document& doc, int t,
                            int n, const ContextTables& tables,
                            const corpus::Vocabulary& vocab);

}  // namespace cedi::context
