#include <doctest.h>

#include <cmath>

#include "cedi/evaluation.hpp"
#include "cedi/synthetic.hpp"

using namespace cedi;
using namespace cedi::eval;

namespace {

corpus::EntitySpan span(int first, int last, const std::string& label) {
  corpus::EntitySpan s;
  s.first_token = first;
  s.last_token = last;
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("entity_prf matches the hand-counted example") {
  SpanLists gold = {{span(0, 1, "PATIENT"), span(5, 5, "DATE")}};
  SpanLists pred = {{span(0, 1, "PATIENT"), span(5, 6, "DATE")}};
  auto report = entity_prf(gold, pred);
  CHECK(report.counts.tp == 1);
  CHECK(report.counts.fp == 1);
  CHECK(report.counts.fn == 1);
  CHECK(report.precision == doctest::Approx(0.5));
  CHECK(report.recall == doctest::Approx(0.5));
  CHECK(report.f1 == doctest::Approx(0.5));
}

TEST_CASE("entity_prf identity and empty-prediction conventions") {
  SpanLists gold = {{span(0, 1, "A"), span(3, 3, "B")}, {span(2, 2, "A")}};
  auto perfect = entity_prf(gold, gold);
  CHECK(perfect.precision == doctest::Approx(1.0));
  CHECK(perfect.recall == doctest::Approx(1.0));
  CHECK(perfect.f1 == doctest::Approx(1.0));

  SpanLists empty = {{}, {}};
  auto none = entity_prf(gold, empty);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  CHECK_THROWS_AS(entity_prf(gold, SpanLists{{}}), DomainError);
}

TEST_CASE("token_prf gives partial credit per token") {
  SpanLists gold = {{span(5, 5, "DATE")}};
  SpanLists pred = {{span(5, 6, "DATE")}};
  auto report = token_prf(gold, pred);
  CHECK(report.counts.tp == 1);
  CHECK(report.counts.fp == 1);
  CHECK(report.counts.fn == 0);
  CHECK(report.precision == doctest::Approx(0.5));
  CHECK(report.recall == doctest::Approx(1.0));
  CHECK(report.f1 == doctest::Approx(2.0 / 3.0));

  SpanLists gold2 = {{span(0, 1, "A"), span(5, 5, "A")}};
  SpanLists pred2 = {{span(0, 1, "A"), span(5, 6, "A")}};
  auto r2 = token_prf(gold2, pred2);
  CHECK(r2.precision == doctest::Approx(0.75));
  CHECK(r2.recall == doctest::Approx(1.0));
  CHECK(r2.f1 == doctest::Approx(6.0 / 7.0));
}

TEST_CASE("token F1 dominates entity F1 when every span overlaps same-label gold") {
  Rng rng(88);
  for (int trial = 0; trial < 200; ++trial) {
    SpanLists gold(3), pred(3);
    for (int d = 0; d < 3; ++d) {
      int cursor = 0;
      for (int k = 0; k < 4; ++k) {
        const int len = 1 + static_cast<int>(rng.below(3));
        const std::string label = rng.bernoulli(0.5) ? "A" : "B";
        gold[d].push_back(span(cursor, cursor + len - 1, label));
        // every prediction overlaps its gold span, off by at most one
        // token on either side
        int pf = cursor, pl = cursor + len - 1;
        if (rng.bernoulli(0.4) && pl > pf) ++pf;      // clip left
        if (rng.bernoulli(0.4)) ++pl;                 // overshoot right
        pred[d].push_back(span(pf, pl, label));
        cursor += len + 2;
      }
    }
    const double entity = entity_prf(gold, pred).f1;
    const double token = token_prf(gold, pred).f1;
    CHECK(token >= entity - 1e-12);
  }
}

TEST_CASE("swapping gold and pred swaps precision and recall") {
  SpanLists gold = {{span(0, 1, "A"), span(4, 4, "B")}, {span(2, 3, "A")}};
  SpanLists pred = {{span(0, 1, "A"), span(6, 6, "A")}, {}};
  for (auto mode : {0, 1}) {
    auto fwd = mode == 0 ? entity_prf(gold, pred) : token_prf(gold, pred);
    auto rev = mode == 0 ? entity_prf(pred, gold) : token_prf(pred, gold);
    CHECK(fwd.precision == doctest::Approx(rev.recall));
    CHECK(fwd.recall == doctest::Approx(rev.precision));
  }
}

TEST_CASE("micro scores ignore document order and duplication") {
  SpanLists gold = {{span(0, 1, "A")}, {span(2, 2, "B"), span(5, 6, "A")}};
  SpanLists pred = {{span(0, 1, "A")}, {span(2, 3, "B"), span(5, 6, "A")}};
  auto base = entity_prf(gold, pred);

  SpanLists gold_r = {gold[1], gold[0]};
  SpanLists pred_r = {pred[1], pred[0]};
  auto reordered = entity_prf(gold_r, pred_r);
  CHECK(base.f1 == doctest::Approx(reordered.f1));

  SpanLists gold_dup = {gold[0], gold[1], gold[0], gold[1]};
  SpanLists pred_dup = {pred[0], pred[1], pred[0], pred[1]};
  auto doubled = entity_prf(gold_dup, pred_dup);
  CHECK(base.precision == doctest::Approx(doubled.precision));
  CHECK(base.recall == doctest::Approx(doubled.recall));
  CHECK(base.f1 == doctest::Approx(doubled.f1));
}

TEST_CASE("per-type rows add up to the micro row and omit absent labels") {
  SpanLists gold = {{span(0, 1, "A"), span(3, 3, "B")}, {span(2, 2, "A")}};
  SpanLists pred = {{span(0, 1, "A"), span(3, 4, "B")}, {span(2, 2, "C")}};
  auto report = entity_prf(gold, pred);
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [label, m] : report.per_type) {
    tp += m.counts.tp;
    fp += m.counts.fp;
    fn += m.counts.fn;
  }
  CHECK(tp == report.counts.tp);
  CHECK(fp == report.counts.fp);
  CHECK(fn == report.counts.fn);
  CHECK(report.per_type.count("D") == 0);
  CHECK(report.per_type.count("C") == 1);  // predicted-only label kept

  const auto machine = format_report(report, true);
  CHECK(machine.find("micro\t") != std::string::npos);
  CHECK(machine.find("A\t") != std::string::npos);
}

TEST_CASE("approx_randomization is 1.0 for identical systems and bounded") {
  SpanLists gold, pred;
  Rng rng(5);
  for (int d = 0; d < 12; ++d) {
    gold.push_back({span(0, 1, "A"), span(4, 4, "B")});
    pred.push_back(rng.bernoulli(0.5)
                       ? gold.back()
                       : std::vector<corpus::EntitySpan>{span(0, 1, "A")});
  }
  const double p_self =
      approx_randomization(entity_f1_metric, gold, pred, pred, 999, 1);
  CHECK(p_self == doctest::Approx(1.0));

  const double p = approx_randomization(entity_f1_metric, gold, gold, pred,
                                        999, 1);
  CHECK(p >= 1.0 / 1000.0);
  CHECK(p <= 1.0);

  CHECK_THROWS_AS(
      approx_randomization(entity_f1_metric, gold, gold, pred, 0, 1),
      DomainError);
}

TEST_CASE("perfect vs empty system over 20 mixed documents is significant") {
  SpanLists gold, perfect, empty;
  Rng rng(9);
  for (int d = 0; d < 20; ++d) {
    std::vector<corpus::EntitySpan> spans;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < n; ++k) {
      spans.push_back(span(3 * k, 3 * k + 1, rng.bernoulli(0.5) ? "A" : "B"));
    }
    gold.push_back(spans);
    perfect.push_back(spans);
    empty.push_back({});
  }
  const double p = approx_randomization(entity_f1_metric, gold, perfect,
                                        empty, 9999, 3);
  CHECK(p <= 0.01);
}

TEST_CASE("null p-value distribution is near-uniform at the 0.05 level") {
  // A and B are independent random corruptions of the same base output.
  SpanLists gold;
  for (int d = 0; d < 24; ++d) {
    gold.push_back({span(0, 1, "A"), span(4, 4, "B"), span(7, 8, "A")});
  }
  int reject = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(1000 + trial);
    auto corrupt = [&] {
      SpanLists out = gold;
      for (auto& doc : out) {
        for (auto& s : doc) {
          if (rng.bernoulli(0.25)) s.last_token += 1;  // boundary error
        }
      }
      return out;
    };
    SpanLists a = corrupt(), b = corrupt();
    const double p =
        approx_randomization(entity_f1_metric, gold, a, b, 299, 77 + trial);
    if (p <= 0.05) ++reject;
  }
  const double fraction = static_cast<double>(reject) / trials;
  CHECK(fraction >= 0.01);
  CHECK(fraction <= 0.10);
}
