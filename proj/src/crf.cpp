#include "cedi/crf.hpp"

#include <algorithm>
#include <cmath>

namespace cedi::crf {

namespace {

void check_emissions(const std::vector<TensorPtr>& emissions,
                     const CrfParams& crf) {
  if (emissions.empty()) throw DomainError("crf: empty emission sequence");
  for (const auto& e : emissions) {
    if (!e->is_vector() || e->shape[0] != crf.num_tags) {
      throw DimensionError("crf: emission row " + num::shape_string(*e) +
                           " vs " + std::to_string(crf.num_tags) + " tags");
    }
  }
}

void check_tags(const std::vector<int>& tags, int num_tags, size_t steps) {
  if (tags.size() != steps) {
    throw DomainError("crf: " + std::to_string(tags.size()) + " tags for " +
                      std::to_string(steps) + " emission rows");
  }
  for (int y : tags) {
    if (y < 0 || y >= num_tags) {
      throw DomainError("crf: tag id " + std::to_string(y) + " out of range");
    }
  }
}

double logsumexp_plain(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - m);
  return m + std::log(z);
}

}  // namespace

CrfParams CrfParams::init(int num_tags) {
  CrfParams p;
  p.num_tags = num_tags;
  // Transition scores start at zero: the untrained chain is uniform, so the
  // initial loss lands at T*log K.
  p.transitions = num::Tensor::zeros({num_tags, num_tags}, true);
  p.start_scores = num::Tensor::zeros({num_tags}, true);
  p.end_scores = num::Tensor::zeros({num_tags}, true);
  return p;
}

void CrfParams::collect(
    std::vector<std::pair<std::string, TensorPtr>>& out) const {
  out.emplace_back("crf.transitions", transitions);
  out.emplace_back("crf.start", start_scores);
  out.emplace_back("crf.end", end_scores);
}

CrfParams CrfParams::clone() const {
  CrfParams p = *this;
  p.transitions = transitions->clone();
  p.start_scores = start_scores->clone();
  p.end_scores = end_scores->clone();
  return p;
}

EmissionMatrix EmissionMatrix::zeros(int rows, int cols) {
  EmissionMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.scores.assign(static_cast<size_t>(rows) * cols, 0.0);
  return m;
}

EmissionMatrix to_matrix(const std::vector<TensorPtr>& emissions) {
  if (emissions.empty()) throw DomainError("to_matrix: empty emissions");
  EmissionMatrix m = EmissionMatrix::zeros(static_cast<int>(emissions.size()),
                                           emissions[0]->shape[0]);
  for (int t = 0; t < m.rows; ++t) {
    std::copy(emissions[t]->values.begin(), emissions[t]->values.end(),
              m.scores.begin() + static_cast<size_t>(t) * m.cols);
  }
  return m;
}

TensorPtr sequence_score(Tape& tape, const std::vector<TensorPtr>& emissions,
                         const CrfParams& crf, const std::vector<int>& tags) {
  check_emissions(emissions, crf);
  check_tags(tags, crf.num_tags, emissions.size());
  auto score = num::pick(tape, crf.start_scores, tags[0]);
  score = num::add(tape, score, num::pick(tape, emissions[0], tags[0]));
  for (size_t t = 1; t < tags.size(); ++t) {
    score = num::add(tape, score,
                     num::pick2(tape, crf.transitions, tags[t - 1], tags[t]));
    score = num::add(tape, score, num::pick(tape, emissions[t], tags[t]));
  }
  return num::add(tape, score, num::pick(tape, crf.end_scores, tags.back()));
}

TensorPtr log_partition(Tape& tape, const std::vector<TensorPtr>& emissions,
                        const CrfParams& crf) {
  check_emissions(emissions, crf);
  const int k = crf.num_tags;
  auto alpha = num::add(tape, crf.start_scores, emissions[0]);
  std::vector<TensorPtr> trans_cols(k);
  if (emissions.size() > 1) {
    for (int j = 0; j < k; ++j) trans_cols[j] = num::col(tape, crf.transitions, j);
  }
  for (size_t t = 1; t < emissions.size(); ++t) {
    std::vector<TensorPtr> next(k);
    for (int j = 0; j < k; ++j) {
      next[j] = num::logsumexp(tape, num::add(tape, alpha, trans_cols[j]));
    }
    alpha = num::add(tape, num::stack(tape, next), emissions[t]);
  }
  return num::logsumexp(tape, num::add(tape, alpha, crf.end_scores));
}

TensorPtr nll(Tape& tape, const std::vector<TensorPtr>& emissions,
              const CrfParams& crf, const std::vector<int>& tags) {
  auto lp = log_partition(tape, emissions, crf);
  auto gold = sequence_score(tape, emissions, crf, tags);
  return num::add(tape, lp, num::scale(tape, gold, -1.0));
}

double sequence_score_plain(const EmissionMatrix& emissions,
                            const CrfParams& crf, const std::vector<int>& tags) {
  check_tags(tags, crf.num_tags, static_cast<size_t>(emissions.rows));
  const int k = crf.num_tags;
  double score = crf.start_scores->values[tags[0]] + emissions.at(0, tags[0]);
  for (int t = 1; t < emissions.rows; ++t) {
    score += crf.transitions->values[static_cast<size_t>(tags[t - 1]) * k +
                                     tags[t]];
    score += emissions.at(t, tags[t]);
  }
  return score + crf.end_scores->values[tags.back()];
}

std::pair<std::vector<int>, double> viterbi(const EmissionMatrix& emissions,
                                            const CrfParams& crf) {
  if (emissions.rows < 1) throw DomainError("viterbi: empty emissions");
  if (emissions.cols != crf.num_tags) {
    throw DimensionError("viterbi: " + std::to_string(emissions.cols) +
                         " emission columns vs " +
                         std::to_string(crf.num_tags) + " tags");
  }
  const int tsteps = emissions.rows, k = crf.num_tags;
  std::vector<double> best(static_cast<size_t>(k));
  std::vector<int> backptr(static_cast<size_t>(tsteps) * k, 0);
  for (int j = 0; j < k; ++j) {
    best[j] = crf.start_scores->values[j] + emissions.at(0, j);
  }
  std::vector<double> next(static_cast<size_t>(k));
  for (int t = 1; t < tsteps; ++t) {
    for (int j = 0; j < k; ++j) {
      int argmax = 0;
      double max_score =
          best[0] + crf.transitions->values[static_cast<size_t>(0) * k + j];
      for (int i = 1; i < k; ++i) {
        const double s =
            best[i] + crf.transitions->values[static_cast<size_t>(i) * k + j];
        if (s > max_score) {  // strict: ties keep the lowest previous id
          max_score = s;
          argmax = i;
        }
      }
      next[j] = max_score + emissions.at(t, j);
      backptr[static_cast<size_t>(t) * k + j] = argmax;
    }
    best.swap(next);
  }
  int last = 0;
  double best_score = best[0] + crf.end_scores->values[0];
  for (int j = 1; j < k; ++j) {
    const double s = best[j] + crf.end_scores->values[j];
    if (s > best_score) {
      best_score = s;
      last = j;
    }
  }
  std::vector<int> path(static_cast<size_t>(tsteps));
  path[tsteps - 1] = last;
  for (int t = tsteps - 1; t > 0; --t) {
    path[t - 1] = backptr[static_cast<size_t>(t) * k + path[t]];
  }
  return {std::move(path), best_score};
}

namespace {

template <typename Fn>
void enumerate_paths(int tsteps, int k, Fn&& fn) {
  std::vector<int> tags(static_cast<size_t>(tsteps), 0);
  while (true) {
    fn(tags);
    int pos = tsteps - 1;
    while (pos >= 0 && ++tags[pos] == k) {
      tags[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

void check_brute_size(const EmissionMatrix& emissions, const CrfParams& crf) {
  double combos = 1.0;
  for (int t = 0; t < emissions.rows; ++t) {
    combos *= crf.num_tags;
    if (combos > 1e6) {
      throw DomainError("brute force: K^T exceeds 1e6");
    }
  }
}

}  // namespace

double brute_force_partition(const EmissionMatrix& emissions,
                             const CrfParams& crf) {
  if (emissions.rows < 1) throw DomainError("brute force: empty emissions");
  check_brute_size(emissions, crf);
  std::vector<double> scores;
  enumerate_paths(emissions.rows, crf.num_tags, [&](const std::vector<int>& tags) {
    scores.push_back(sequence_score_plain(emissions, crf, tags));
  });
  return logsumexp_plain(scores);
}

std::pair<std::vector<int>, double> brute_force_best(
    const EmissionMatrix& emissions, const CrfParams& crf) {
  if (emissions.rows < 1) throw DomainError("brute force: empty emissions");
  check_brute_size(emissions, crf);
  std::vector<int> best_tags;
  double best = -std::numeric_limits<double>::infinity();
  enumerate_paths(emissions.rows, crf.num_tags, [&](const std::vector<int>& tags) {
    const double s = sequence_score_plain(emissions, crf, tags);
    if (s > best) {  // enumeration order makes ties resolve to lowest ids
      best = s;
      best_tags = tags;
    }
  });
  return {std::move(best_tags), best};
}

}  // namespace cedi::crf
