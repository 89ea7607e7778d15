#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cedi {

// Error taxonomy shared by all modules. The CLI maps these onto its exit
// codes: config/usage -> 2, data -> 3, anything else -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IntegrityError : Error { using Error::Error; };
struct AnnotationError : Error { using Error::Error; };
struct CompatibilityError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator with hand-rolled distributions. std::uniform_*_distribution
// output is implementation-defined, which would break the bit-exact
// reproducibility contract; everything here is pinned to mt19937_64 output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // 53-bit uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw DomainError("Rng::below: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t u;
    do {
      u = engine_();
    } while (u >= limit);
    return u % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Derives an independent stream seed; used for per-(seed, epoch, doc)
  // generators so training can resume mid-run with identical draws.
  static uint64_t derive(uint64_t seed, uint64_t a, uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cedi
