#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cedi/corpus.hpp"

namespace cedi::eval {

using SpanLists = std::vector<std::vector<corpus::EntitySpan>>;

enum class Mode { kEntity, kToken };

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

struct TypeMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
  Counts counts;
};

struct EvalReport {
  Mode mode = Mode::kEntity;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
  std::map<std::string, TypeMetrics> per_type;
};

// P := 0 when there are no predictions; F1 = 2PR/(P+R) or 0.
double precision_of(const Counts& c);
double recall_of(const Counts& c);
double f1_of(const Counts& c);

// Exact (first_token, last_token, label) matching.
EvalReport entity_prf(const SpanLists& gold, const SpanLists& pred);

// Per-token labeled comparison; partial span overlap earns partial credit.
EvalReport token_prf(const SpanLists& gold, const SpanLists& pred);

using MetricFn = std::function<double(const SpanLists&, const SpanLists&)>;

double entity_f1_metric(const SpanLists& gold, const SpanLists& pred);
double token_f1_metric(const SpanLists& gold, const SpanLists& pred);

// Two-sided approximate randomization over per-document output swaps;
// p = (#{shuffled |diff| >= observed |diff|} + 1) / (shuffles + 1).
double approx_randomization(const MetricFn& metric, const SpanLists& gold,
                            const SpanLists& pred_a, const SpanLists& pred_b,
                            int shuffles, uint64_t seed);

// Human-readable table or the line-oriented "label\tP\tR\tF1\tsupport" form.
std::string format_report(const EvalReport& report, bool machine);

}  // namespace cedi::eval
