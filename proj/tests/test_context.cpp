#include <doctest.h>

#include "cedi/context.hpp"
#include "cedi/synthetic.hpp"
#include "gradcheck.hpp"

using namespace cedi;
using namespace cedi::context;
using num::Tape;
using num::Tensor;
using num::TensorPtr;

namespace {

corpus::Vocabulary tiny_vocab(const std::vector<std::string>& words) {
  std::string text;
  for (const auto& w : words) text += w + " ";
  std::vector<corpus::Document> docs = {corpus::make_document("v", text)};
  return corpus::build_vocab(docs, 1, 3, corpus::TagScheme::kBioes);
}

}  // namespace

TEST_CASE("extract_window pads past the edges and orders per the n-gram layout") {
  auto vocab = tiny_vocab({"a", "b", "c", "d", "e"});
  auto doc = corpus::make_document("d", "a b c d e");

  auto first = extract_window(doc, 0, 3, vocab);
  REQUIRE(first.forward_ids.size() == 4);
  CHECK(first.forward_ids[0] == corpus::Vocabulary::kPad);
  CHECK(first.forward_ids[1] == corpus::Vocabulary::kPad);
  CHECK(first.forward_ids[2] == corpus::Vocabulary::kPad);
  CHECK(first.forward_ids[3] == vocab.token_id("a"));

  auto last = extract_window(doc, 4, 3, vocab);
  CHECK(last.backward_ids ==
        std::vector<int>{corpus::Vocabulary::kPad, corpus::Vocabulary::kPad,
                         corpus::Vocabulary::kPad, vocab.token_id("e")});

  auto mid = extract_window(doc, 2, 2, vocab);
  CHECK(mid.forward_ids == std::vector<int>{vocab.token_id("a"),
                                            vocab.token_id("b"),
                                            vocab.token_id("c")});
  CHECK(mid.backward_ids == std::vector<int>{vocab.token_id("e"),
                                             vocab.token_id("d"),
                                             vocab.token_id("c")});

  CHECK_THROWS_AS(extract_window(doc, 5, 3, vocab), IndexError);
}

TEST_CASE("forward_context is zero under zero weights and 256 wide by default") {
  auto vocab = tiny_vocab({"a", "b", "c"});
  auto doc = corpus::make_document("d", "a");
  Rng rng(1);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 8, 256, rng);
  tables.fwd = layers::LstmParams::zeros(8, 256);

  Tape tape(false);
  auto w = extract_window(doc, 0, 2, vocab);
  auto out = forward_context(tape, w, tables);
  REQUIRE(out->shape[0] == 256);
  for (double v : out->values) CHECK(v == doctest::Approx(0.0));

  auto bwd = backward_context(tape, w, tables);
  CHECK(bwd->shape[0] == 256);

  auto full = context_embedding(tape, doc, 0, 2, tables, vocab);
  CHECK(full->shape[0] == 512);
}

TEST_CASE("context embedding sees exactly the [t-n, t+n] neighborhood") {
  auto vocab = tiny_vocab({"a", "b", "c", "d", "e", "f", "g", "h", "i"});
  Rng rng(5);
  const int n = 2;
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 6, 7, rng);

  auto doc = corpus::make_document("d", "a b c d e f g h i");
  Tape tape(false);
  auto base = context_embedding(tape, doc, 4, n, tables, vocab);

  // outside the window: bit-identical
  auto outside = corpus::make_document("d", "i b c d e f g h a");
  CHECK(context_embedding(tape, outside, 4, n, tables, vocab)->values ==
        base->values);

  // inside the window: changes
  auto inside = corpus::make_document("d", "a b c i e f g h d");
  CHECK(context_embedding(tape, inside, 4, n, tables, vocab)->values !=
        base->values);
}

TEST_CASE("identical neighborhoods in different documents give identical embeddings") {
  auto vocab = tiny_vocab({"a", "b", "c", "x", "y", "z"});
  Rng rng(7);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 5, 6, rng);
  Tape tape(false);

  auto doc1 = corpus::make_document("1", "x a b c y z");
  auto doc2 = corpus::make_document("2", "z z a b c x");
  // neighborhood of width 1 around "b": (a, b, c) in both documents
  auto e1 = context_embedding(tape, doc1, 2, 1, tables, vocab);
  auto e2 = context_embedding(tape, doc2, 3, 1, tables, vocab);
  CHECK(e1->values == e2->values);
}

TEST_CASE("line breaks never reach the context computation") {
  auto vocab = tiny_vocab({"alpha", "beta", "gamma", "delta"});
  Rng rng(9);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 5, 6, rng);
  Tape tape(false);

  auto flat = corpus::make_document("1", "alpha beta gamma delta");
  auto broken = corpus::make_document("2", "alpha\nbeta\n\ngamma delta");
  for (int t = 0; t < 4; ++t) {
    CHECK(context_embedding(tape, flat, t, 2, tables, vocab)->values ==
          context_embedding(tape, broken, t, 2, tables, vocab)->values);
  }
}

TEST_CASE("palindromic ids with tied direction parameters meet at the center") {
  auto vocab = tiny_vocab({"a", "b", "c"});
  Rng rng(11);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 4, 5, rng);
  tables.bwd = tables.fwd;  // tie the directions

  auto doc = corpus::make_document("d", "a b c b a");
  Tape tape(false);
  auto w = extract_window(doc, 2, 2, vocab);
  CHECK(w.forward_ids == w.backward_ids);
  auto f = forward_context(tape, w, tables);
  auto b = backward_context(tape, w, tables);
  CHECK(f->values == b->values);
}

TEST_CASE("single-token document: both directions run on PAD history plus x_t") {
  auto vocab = tiny_vocab({"lone", "filler"});
  Rng rng(13);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 4, 5, rng);
  auto doc = corpus::make_document("d", "lone");
  Tape tape(false);
  auto e = context_embedding(tape, doc, 0, 3, tables, vocab);
  CHECK(e->shape[0] == 10);
  CHECK(num::all_finite(*e));
}

TEST_CASE("PAD input rows stay frozen while the rest of the table trains") {
  auto vocab = tiny_vocab({"a", "b"});
  Rng rng(15);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 3, 4, rng);
  auto doc = corpus::make_document("d", "a b");

  Tape tape;
  auto loss =
      num::sum(tape, context_embedding(tape, doc, 0, 2, tables, vocab));
  num::backward(tape, loss);
  const auto& grad = tables.table.weights->grad;
  REQUIRE_FALSE(grad.empty());
  for (int c = 0; c < 3; ++c) {
    CHECK(grad[corpus::Vocabulary::kPad * 3 + c] == 0.0);  // frozen PAD row
  }
  // the participating row received gradient
  const int a_row = vocab.token_id("a");
  bool any = false;
  for (int c = 0; c < 3; ++c) any = any || grad[a_row * 3 + c] != 0.0;
  CHECK(any);
}

TEST_CASE("context gradients match finite differences") {
  auto vocab = tiny_vocab({"a", "b", "c"});
  Rng rng(17);
  ContextTables tables = ContextTables::init(vocab.tokens.size(), 3, 3, rng);
  auto doc = corpus::make_document("d", "a b c a");

  std::vector<std::pair<std::string, TensorPtr>> named;
  tables.collect(named);
  std::vector<TensorPtr> tensors;
  for (auto& [name, t] : named) tensors.push_back(t);
  auto report = gradcheck::check(
      tensors,
      [&](Tape& tape) {
        return num::sum(tape, context_embedding(tape, doc, 1, 2, tables, vocab));
      },
      1e-5, 1e-3, gradcheck::skip_pad_rows(tensors, {tables.table.weights}));
  INFO(report.worst);
  CHECK(report.max_rel_err < 1e-4);
}
