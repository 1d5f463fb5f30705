// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace privm {

// Tolerance for stop/continue indifference; ties resolve to continuing.
inline constexpr double kTieTol = 1e-9;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Malformed input files / JSON. CLI exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Semantically invalid data (grids, kernels, rules). CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Request exceeds the supported desk scale. CLI exit code 3.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense [t][v][bin] table used for value functions and friends.
class Table3 {
 public:
  Table3() = default;
  Table3(int nt, int nv, int nb, double init = 0.0)
      : nt_(nt), nv_(nv), nb_(nb),
        data_(static_cast<std::size_t>(nt) * nv * nb, init) {}

  double& at(int t, int v, int b) { return data_[index(t, v, b)]; }
  double at(int t, int v, int b) const { return data_[index(t, v, b)]; }

  int periods() const { return nt_; }
  int values() const { return nv_; }
  int bins() const { return nb_; }
  bool empty() const { return data_.empty(); }

 private:
  std::size_t index(int t, int v, int b) const {
    return (static_cast<std::size_t>(t) * nv_ + v) * nb_ + b;
  }
  int nt_ = 0, nv_ = 0, nb_ = 0;
  std::vector<double> data_;
};

// Deterministic cross-platform generator. std::mt19937 would do, but the
// distributions are not portable; we draw doubles from the raw stream instead.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

/// Derives an independent stream for (seed, trial, owner) so trial-level
/// parallelism cannot change results.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial,
                                 std::uint64_t owner) {
  SplitMix64 h(seed ^ (0x5851f42d4c957f2dULL * (trial + 1)) ^
               (0x14057b7ef767814fULL * (owner + 1)));
  h.next();
  return h.next();
}

/// Left-to-right pairwise summation with a binary-counter stack; the result is
/// independent of how the inputs were batched, which keeps parallel and serial
/// aggregation bit-identical.
class PairwiseSum {
 public:
  void add(double x) {
    std::uint64_t slot = count_++;
    for (; slot & 1; slot >>= 1) {
      x += stack_.back();
      stack_.pop_back();
    }
    stack_.push_back(x);
  }
  double total() const {
    double s = 0.0;
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) s += *it;
    return s;
  }
  std::uint64_t count() const { return count_; }

 private:
  std::vector<double> stack_;
  std::uint64_t count_ = 0;
};

}  // namespace privm
