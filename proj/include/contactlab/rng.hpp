#pragma once

#include <cstdint>

#include "contactlab/linalg.hpp"

namespace contactlab {

/// Counter-based generator: draw i of stream s under seed k is a pure
/// function of (k, s, i), so splitting work across threads never changes
/// the values drawn.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child generator keyed by (this key, stream).
  CounterRng split(std::uint64_t stream) const;

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  Vec uniform_vec(int n, double lo, double hi);
  Vec normal_vec(int n);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace contactlab
