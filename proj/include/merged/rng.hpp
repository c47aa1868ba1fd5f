#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace merged {

/// Counter-based random stream (Philox4x32-10).
///
/// The key is the master seed and the high half of the 128-bit counter is the
/// stream index, so two streams with different indices walk disjoint counter
/// ranges and can never overlap. A stream is a UniformRandomBitGenerator and
/// can be handed to <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  bool bernoulli(double p);

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return index_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Stream `index` of the family keyed by `master_seed`.
inline RngStream substream(std::uint64_t master_seed, std::uint64_t index) {
  return RngStream(master_seed, index);
}

/// Mixes a tag into a seed so that independent experiments sharing a user
/// seed draw from unrelated stream families.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t tag);

}  // namespace merged
