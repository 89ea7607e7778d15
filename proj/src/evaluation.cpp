#include "cedi/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cedi::eval {

double precision_of(const Counts& c) {
  return c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
}

double recall_of(const Counts& c) {
  return c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
}

double f1_of(const Counts& c) {
  const double p = precision_of(c), r = recall_of(c);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

namespace {

void check_aligned(const SpanLists& gold, const SpanLists& pred) {
  if (gold.size() != pred.size()) {
    throw DomainError("evaluation: " + std::to_string(gold.size()) +
                      " gold documents vs " + std::to_string(pred.size()) +
                      " predictions");
  }
}

void finish(EvalReport& report) {
  for (auto& [label, m] : report.per_type) {
    report.counts.tp += m.counts.tp;
    report.counts.fp += m.counts.fp;
    report.counts.fn += m.counts.fn;
    m.precision = precision_of(m.counts);
    m.recall = recall_of(m.counts);
    m.f1 = f1_of(m.counts);
    m.support = m.counts.tp + m.counts.fn;
  }
  report.precision = precision_of(report.counts);
  report.recall = recall_of(report.counts);
  report.f1 = f1_of(report.counts);
}

using Mention = std::tuple<int, int, std::string>;

}  // namespace

EvalReport entity_prf(const SpanLists& gold, const SpanLists& pred) {
  check_aligned(gold, pred);
  EvalReport report;
  report.mode = Mode::kEntity;
  for (size_t d = 0; d < gold.size(); ++d) {
    std::map<Mention, long> open;  // multiset of unmatched gold mentions
    for (const auto& g : gold[d]) {
      ++open[{g.first_token, g.last_token, g.label}];
    }
    for (const auto& p : pred[d]) {
      auto it = open.find({p.first_token, p.last_token, p.label});
      if (it != open.end() && it->second > 0) {
        --it->second;
        ++report.per_type[p.label].counts.tp;
      } else {
        ++report.per_type[p.label].counts.fp;
      }
    }
    for (const auto& [mention, count] : open) {
      report.per_type[std::get<2>(mention)].counts.fn += count;
    }
  }
  finish(report);
  return report;
}

EvalReport token_prf(const SpanLists& gold, const SpanLists& pred) {
  check_aligned(gold, pred);
  EvalReport report;
  report.mode = Mode::kToken;
  for (size_t d = 0; d < gold.size(); ++d) {
    std::map<int, std::string> gold_at, pred_at;
    for (const auto& g : gold[d]) {
      for (int t = g.first_token; t <= g.last_token; ++t) gold_at[t] = g.label;
    }
    for (const auto& p : pred[d]) {
      for (int t = p.first_token; t <= p.last_token; ++t) pred_at[t] = p.label;
    }
    for (const auto& [t, label] : pred_at) {
      auto it = gold_at.find(t);
      if (it != gold_at.end() && it->second == label) {
        ++report.per_type[label].counts.tp;
      } else {
        ++report.per_type[label].counts.fp;
      }
    }
    for (const auto& [t, label] : gold_at) {
      auto it = pred_at.find(t);
      if (it == pred_at.end() || it->second != label) {
        ++report.per_type[label].counts.fn;
      }
    }
  }
  finish(report);
  return report;
}

double entity_f1_metric(const SpanLists& gold, const SpanLists& pred) {
  return entity_prf(gold, pred).f1;
}

double token_f1_metric(const SpanLists& gold, const SpanLists& pred) {
  return token_prf(gold, pred).f1;
}

double approx_randomization(const MetricFn& metric, const SpanLists& gold,
                            const SpanLists& pred_a, const SpanLists& pred_b,
                            int shuffles, uint64_t seed) {
  check_aligned(gold, pred_a);
  check_aligned(gold, pred_b);
  if (shuffles < 1) {
    throw DomainError("approx_randomization: shuffles must be >= 1");
  }
  const double observed = std::fabs(metric(gold, pred_a) - metric(gold, pred_b));
  SpanLists a = pred_a, b = pred_b;
  long at_least = 0;
  for (int s = 0; s < shuffles; ++s) {
    // Per-shuffle derived seed: the result is independent of how shuffles
    // are scheduled across workers.
    Rng rng(Rng::derive(seed, 0xA12, static_cast<uint64_t>(s)));
    for (size_t d = 0; d < gold.size(); ++d) {
      const bool swap_doc = rng.bernoulli(0.5);
      a[d] = swap_doc ? pred_b[d] : pred_a[d];
      b[d] = swap_doc ? pred_a[d] : pred_b[d];
    }
    const double diff = std::fabs(metric(gold, a) - metric(gold, b));
    if (diff >= observed) ++at_least;
  }
  return static_cast<double>(at_least + 1) / (shuffles + 1);
}

std::string format_report(const EvalReport& report, bool machine) {
  char buf[160];
  std::ostringstream out;
  if (machine) {
    for (const auto& [label, m] : report.per_type) {
      std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.4f\t%.4f\t%ld\n",
                    label.c_str(), m.precision, m.recall, m.f1, m.support);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "micro\t%.4f\t%.4f\t%.4f\t%ld\n",
                  report.precision, report.recall, report.f1,
                  report.counts.tp + report.counts.fn);
    out << buf;
    return out.str();
  }
  out << (report.mode == Mode::kEntity ? "entity-based" : "token-based")
      << " evaluation\n";
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s %8s\n", "label", "P", "R",
                "F1", "support");
  out << buf;
  for (const auto& [label, m] : report.per_type) {
    std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8.4f %8ld\n",
                  label.c_str(), m.precision, m.recall, m.f1, m.support);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8.4f %8ld\n", "micro",
                report.precision, report.recall, report.f1,
                report.counts.tp + report.counts.fn);
  out << buf;
  return out.str();
}

}  // namespace cedi::eval
