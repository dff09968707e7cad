#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace snoh {

using NodeId = std::int32_t;
using EdgeId = std::int64_t;

// Row-major so per-node rows are contiguous for the aggregation kernels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent run/model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent dataset input; message carries file/line context.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during training.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer) : Error(what), layer_(layer) {}
  int layer() const { return layer_; }
  int epoch() const { return epoch_; }
  void set_epoch(int epoch) { epoch_ = epoch; }

 private:
  int layer_ = -1;
  int epoch_ = -1;
};

// Deterministic, stdlib-independent RNG (splitmix64). Streams derived from a
// base seed and a stream tag are independent enough for seeding, sampling and
// shuffling at the scales used here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double gaussian() {
    // Box-Muller; one value per call keeps the stream deterministic and simple.
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derived seed for an independent sub-stream (per-epoch sampling, re-inits).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return Rng::derive(seed, tag).next_u64();
}

}  // namespace snoh
