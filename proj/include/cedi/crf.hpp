#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cedi/tensor.hpp"

namespace cedi::crf {

using num::Tape;
using num::TensorPtr;

// Linear-chain CRF over K tags: path score = start[y_0] + sum_t emit[t][y_t]
// + sum_t trans[y_{t-1}][y_t] + end[y_{T-1}].
struct CrfParams {
  TensorPtr transitions;  // [K x K], row = previous tag
  TensorPtr start_scores; // [K]
  TensorPtr end_scores;   // [K]
  int num_tags = 0;

  static CrfParams init(int num_tags);
  void collect(std::vector<std::pair<std::string, TensorPtr>>& out) const;
  CrfParams clone() const;
};

// Plain T x K emission scores, row t = a_t; the decode-side view of the
// per-token emission tensors.
struct EmissionMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> scores;

  double at(int t, int k) const {
    return scores[static_cast<size_t>(t) * cols + k];
  }
  double& at(int t, int k) { return scores[static_cast<size_t>(t) * cols + k]; }
  static EmissionMatrix zeros(int rows, int cols);
};

EmissionMatrix to_matrix(const std::vector<TensorPtr>& emissions);

// ---- differentiable path ---------------------------------------------------

TensorPtr sequence_score(Tape& tape, const std::vector<TensorPtr>& emissions,
                         const CrfParams& crf, const std::vector<int>& tags);

// log sum over all K^T sequences, forward algorithm in log space.
TensorPtr log_partition(Tape& tape, const std::vector<TensorPtr>& emissions,
                        const CrfParams& crf);

// log_partition - sequence_score(gold); always >= 0.
TensorPtr nll(Tape& tape, const std::vector<TensorPtr>& emissions,
              const CrfParams& crf, const std::vector<int>& tags);

// ---- decode / oracles --------------------------------------------------------

double sequence_score_plain(const EmissionMatrix& emissions,
                            const CrfParams& crf, const std::vector<int>& tags);

// Max-product decode; ties broken toward the lowest tag id.
std::pair<std::vector<int>, double> viterbi(const EmissionMatrix& emissions,
                                            const CrfParams& crf);

// Explicit enumeration over all K^T sequences (K^T <= 1e6); exported for the
// test suite.
double brute_force_partition(const EmissionMatrix& emissions,
                             const CrfParams& crf);
std::pair<std::vector<int>, double> brute_force_best(
    const EmissionMatrix& emissions, const CrfParams& crf);

}  // namespace cedi::crf
