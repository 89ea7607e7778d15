#include "cedi/context.hpp"

#include <cmath>

namespace cedi::context {

ContextTables ContextTables::init(int vocab_size, int input_dim,
                                  int hidden_dim, Rng& rng) {
  ContextTables t;
  t.table = corpus::EmbeddingTable::random(vocab_size, input_dim,
                                           std::sqrt(3.0 / input_dim), rng);
  t.fwd = layers::LstmParams::init(input_dim, hidden_dim, rng);
  t.bwd = layers::LstmParams::init(input_dim, hidden_dim, rng);
  return t;
}

void ContextTables::collect(
    std::vector<std::pair<std::string, TensorPtr>>& out) const {
  out.emplace_back("context.table", table.weights);
  fwd.collect(out, "context.fwd");
  bwd.collect(out, "context.bwd");
}

ContextTables ContextTables::clone() const {
  ContextTables t;
  t.table = table.clone();
  t.fwd = fwd.clone();
  t.bwd = bwd.clone();
  return t;
}

NgramWindow extract_window(const corpus::Document& doc, int t, int n,
                           const corpus::Vocabulary& vocab) {
  const int size = static_cast<int>(doc.tokens.size());
  if (t < 0 || t >= size) {
    throw IndexError("extract_window: token " + std::to_string(t) +
                     " out of range for " + std::to_string(size) + " tokens");
  }
  auto id_at = [&](int pos) {
    if (pos < 0 || pos >= size) return corpus::Vocabulary::kPad;
    return vocab.token_id(doc.tokens[pos].lower);
  };
  NgramWindow w;
  w.forward_ids.reserve(n + 1);
  w.backward_ids.reserve(n + 1);
  for (int d = n; d >= 1; --d) w.forward_ids.push_back(id_at(t - d));
  w.forward_ids.push_back(id_at(t));
  for (int d = n; d >= 1; --d) w.backward_ids.push_back(id_at(t + d));
  w.backward_ids.push_back(id_at(t));
  return w;
}

std::vector<TensorPtr> direction_states(Tape& tape,
                                        const std::vector<int>& ids,
                                        const corpus::EmbeddingTable& table,
                                        const layers::LstmParams& lstm) {
  std::vector<TensorPtr> inputs;
  inputs.reserve(ids.size());
  for (int id : ids) inputs.push_back(table.lookup(tape, id));
  return layers::run_lstm(tape, inputs, lstm, false);
}

TensorPtr forward_context(Tape& tape, const NgramWindow& window,
                          const ContextTables& tables) {
  return direction_states(tape, window.forward_ids, tables.table, tables.fwd)
      .back();
}

TensorPtr backward_context(Tape& tape, const NgramWindow& window,
                           const ContextTables& tables) {
  return direction_states(tape, window.backward_ids, tables.table, tables.bwd)
      .back();
}

TensorPtr context_embedding(Tape& tape, const corpus::Document& doc, int t,
                            int n, const ContextTables& tables,
                            const corpus::Vocabulary& vocab) {
  const NgramWindow w = extract_window(doc, t, n, vocab);
  return num::concat(tape, {forward_context(tape, w, tables),
                            backward_context(tape, w, tables)});
}

}  // namespace cedi::context
