#include <doctest.h>

#include <cmath>

#include "cedi/crf.hpp"
#include "gradcheck.hpp"

using namespace cedi;
using namespace cedi::crf;
using num::Tape;
using num::Tensor;
using num::TensorPtr;

namespace {

std::vector<TensorPtr> random_emissions(int steps, int k, Rng& rng,
                                        bool requires_grad = false) {
  std::vector<TensorPtr> rows;
  for (int t = 0; t < steps; ++t) {
    rows.push_back(Tensor::uniform({k}, -2, 2, rng, requires_grad));
  }
  return rows;
}

CrfParams random_crf(int k, Rng& rng) {
  CrfParams crf = CrfParams::init(k);
  crf.transitions = Tensor::uniform({k, k}, -1, 1, rng);
  crf.start_scores = Tensor::uniform({k}, -1, 1, rng);
  crf.end_scores = Tensor::uniform({k}, -1, 1, rng);
  return crf;
}

std::vector<int> random_tags(int steps, int k, Rng& rng) {
  std::vector<int> tags;
  for (int t = 0; t < steps; ++t) {
    tags.push_back(static_cast<int>(rng.below(k)));
  }
  return tags;
}

}  // namespace

TEST_CASE("sequence_score degenerate and hand-summed cases") {
  Tape tape(false);
  auto zero1 = CrfParams::init(3);
  auto em1 = std::vector<TensorPtr>{Tensor::zeros({3})};
  CHECK(sequence_score(tape, em1, zero1, {1})->item() == doctest::Approx(0.0));

  auto zero2 = CrfParams::init(2);
  std::vector<TensorPtr> em2 = {Tensor::vector({1.0, 2.0}),
                                Tensor::vector({3.0, 4.0})};
  CHECK(sequence_score(tape, em2, zero2, {1, 0})->item() ==
        doctest::Approx(2.0 + 3.0));

  Rng rng(3);
  const int steps = 4, k = 3;
  auto crf = random_crf(k, rng);
  auto emissions = random_emissions(steps, k, rng);
  auto tags = random_tags(steps, k, rng);
  double hand = crf.start_scores->values[tags[0]];
  for (int t = 0; t < steps; ++t) hand += emissions[t]->values[tags[t]];
  for (int t = 1; t < steps; ++t) {
    hand += crf.transitions->values[tags[t - 1] * k + tags[t]];
  }
  hand += crf.end_scores->values[tags.back()];
  CHECK(sequence_score(tape, emissions, crf, tags)->item() ==
        doctest::Approx(hand).epsilon(1e-12));

  CHECK_THROWS_AS(sequence_score(tape, emissions, crf, {0, 1, 2, 5}),
                  DomainError);
}

TEST_CASE("log_partition: uniform case, single step, brute-force agreement") {
  Tape tape(false);
  auto zeros = CrfParams::init(2);
  std::vector<TensorPtr> em = {Tensor::zeros({2}), Tensor::zeros({2}),
                               Tensor::zeros({2})};
  CHECK(log_partition(tape, em, zeros)->item() ==
        doctest::Approx(std::log(8.0)).epsilon(1e-12));

  Rng rng(5);
  auto crf1 = random_crf(3, rng);
  std::vector<TensorPtr> one = {Tensor::uniform({3}, -2, 2, rng, false)};
  double expect = 0.0;
  {
    double m = -1e300;
    std::vector<double> scores;
    for (int y = 0; y < 3; ++y) {
      scores.push_back(crf1.start_scores->values[y] + one[0]->values[y] +
                       crf1.end_scores->values[y]);
      m = std::max(m, scores.back());
    }
    double z = 0.0;
    for (double s : scores) z += std::exp(s - m);
    expect = m + std::log(z);
  }
  CHECK(log_partition(tape, one, crf1)->item() ==
        doctest::Approx(expect).epsilon(1e-12));

  for (int trial = 0; trial < 100; ++trial) {
    const int steps = 1 + static_cast<int>(rng.below(5));
    const int k = 1 + static_cast<int>(rng.below(4));
    auto crf = random_crf(k, rng);
    auto emissions = random_emissions(steps, k, rng);
    const double fast = log_partition(tape, emissions, crf)->item();
    const double brute = brute_force_partition(to_matrix(emissions), crf);
    CHECK(std::fabs(fast - brute) < 1e-9);
  }
}

TEST_CASE("nll saturates at zero, is T log K at zero parameters, and is nonnegative") {
  Tape tape(false);
  auto zeros = CrfParams::init(4);

  std::vector<TensorPtr> favoring = {Tensor::vector({1e3, 0, 0, 0}),
                                     Tensor::vector({0, 1e3, 0, 0})};
  CHECK(nll(tape, favoring, zeros, {0, 1})->item() ==
        doctest::Approx(0.0).epsilon(1e-12));

  std::vector<TensorPtr> flat(3, Tensor::zeros({4}));
  CHECK(nll(tape, flat, zeros, {0, 0, 0})->item() ==
        doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));

  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int steps = 1 + static_cast<int>(rng.below(5));
    const int k = 2 + static_cast<int>(rng.below(3));
    auto crf = random_crf(k, rng);
    auto emissions = random_emissions(steps, k, rng);
    auto tags = random_tags(steps, k, rng);
    CHECK(nll(tape, emissions, crf, tags)->item() >= 0.0);
  }
}

TEST_CASE("nll gradients match finite differences") {
  Rng rng(11);
  const int steps = 4, k = 3;
  auto crf = CrfParams::init(k);
  crf.transitions = Tensor::uniform({k, k}, -1, 1, rng, true);
  crf.start_scores = Tensor::uniform({k}, -1, 1, rng, true);
  crf.end_scores = Tensor::uniform({k}, -1, 1, rng, true);
  auto emissions = random_emissions(steps, k, rng, true);
  auto tags = random_tags(steps, k, rng);

  std::vector<TensorPtr> tensors = {crf.transitions, crf.start_scores,
                                    crf.end_scores};
  for (auto& e : emissions) tensors.push_back(e);
  auto report = gradcheck::check(tensors, [&](Tape& tape) {
    return nll(tape, emissions, crf, tags);
  });
  INFO(report.worst);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("viterbi: decoupled argmax, brute-force agreement, hard constraints") {
  Rng rng(13);
  {
    const int steps = 5, k = 4;
    auto crf = CrfParams::init(k);
    auto emissions = random_emissions(steps, k, rng);
    auto m = to_matrix(emissions);
    auto [path, score] = viterbi(m, crf);
    for (int t = 0; t < steps; ++t) {
      int argmax = 0;
      for (int j = 1; j < k; ++j) {
        if (m.at(t, j) > m.at(t, argmax)) argmax = j;
      }
      CHECK(path[t] == argmax);
    }
    CHECK(score == doctest::Approx(sequence_score_plain(m, crf, path)));
  }

  for (int trial = 0; trial < 100; ++trial) {
    const int steps = 1 + static_cast<int>(rng.below(5));
    const int k = 1 + static_cast<int>(rng.below(4));
    auto crf = random_crf(k, rng);
    auto m = to_matrix(random_emissions(steps, k, rng));
    auto [path, score] = viterbi(m, crf);
    auto [brute_path, brute_score] = brute_force_best(m, crf);
    CHECK(path == brute_path);
    CHECK(score == doctest::Approx(brute_score).epsilon(1e-12));
    CHECK(score == doctest::Approx(sequence_score_plain(m, crf, path)));
  }

  // a -1e9 transition keeps the favored bigram out of the decode
  {
    const int k = 2;  // tags: 0 = O, 1 = I-X
    auto crf = CrfParams::init(k);
    crf.transitions->values[0 * k + 1] = -1e9;  // O -> I-X forbidden
    EmissionMatrix m = EmissionMatrix::zeros(2, k);
    m.at(0, 0) = 5.0;  // favors O then I-X
    m.at(0, 1) = 0.0;
    m.at(1, 0) = 0.0;
    m.at(1, 1) = 5.0;
    auto [path, score] = viterbi(m, crf);
    const bool forbidden = path[0] == 0 && path[1] == 1;
    CHECK_FALSE(forbidden);
  }
}

TEST_CASE("brute_force_partition basics and monotonicity") {
  Rng rng(17);
  auto crf = random_crf(2, rng);
  auto emissions = random_emissions(1, 2, rng);
  auto m = to_matrix(emissions);

  std::vector<double> scores;
  for (int y = 0; y < 2; ++y) {
    scores.push_back(crf.start_scores->values[y] + m.at(0, y) +
                     crf.end_scores->values[y]);
  }
  const double mx = std::max(scores[0], scores[1]);
  const double by_hand =
      mx + std::log(std::exp(scores[0] - mx) + std::exp(scores[1] - mx));
  CHECK(brute_force_partition(m, crf) == doctest::Approx(by_hand).epsilon(1e-12));

  auto m2 = to_matrix(random_emissions(3, 2, rng));
  const double before = brute_force_partition(m2, crf);
  m2.at(1, 0) += 0.5;
  CHECK(brute_force_partition(m2, crf) > before);

  // too-large instances are rejected
  auto big = EmissionMatrix::zeros(30, 4);
  CHECK_THROWS_AS(brute_force_partition(big, CrfParams::init(4)), DomainError);
}

TEST_CASE("probabilities over all paths sum to one (small instances)") {
  Rng rng(19);
  Tape tape(false);
  for (int trial = 0; trial < 20; ++trial) {
    const int steps = 1 + static_cast<int>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(3));
    auto crf = random_crf(k, rng);
    auto emissions = random_emissions(steps, k, rng);
    const double lp = log_partition(tape, emissions, crf)->item();
    const auto m = to_matrix(emissions);

    double total = 0.0;
    std::vector<int> tags(static_cast<size_t>(steps), 0);
    while (true) {
      total += std::exp(sequence_score_plain(m, crf, tags) - lp);
      int pos = steps - 1;
      while (pos >= 0 && ++tags[pos] == k) {
        tags[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    CHECK(std::fabs(total - 1.0) < 1e-9);

    // viterbi dominates every path
    auto [best_path, best_score] = viterbi(m, crf);
    std::fill(tags.begin(), tags.end(), 0);
    while (true) {
      CHECK(best_score >= sequence_score_plain(m, crf, tags) - 1e-12);
      int pos = steps - 1;
      while (pos >= 0 && ++tags[pos] == k) {
        tags[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
}

TEST_CASE("log_partition shifts analytically when an emission row shifts") {
  Rng rng(23);
  Tape tape(false);
  auto crf = random_crf(3, rng);
  auto emissions = random_emissions(4, 3, rng);
  const double before = log_partition(tape, emissions, crf)->item();

  const double c = 0.83;
  for (double& v : emissions[2]->values) v += c;
  const double after = log_partition(tape, emissions, crf)->item();
  CHECK(after == doctest::Approx(before + c).epsilon(1e-9));
}
