#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace mni {

// Philox 4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

// Derives a 64-bit seed from (master, a, b). Used for per-trial substreams:
// the result only depends on the three inputs, never on execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

// Counter-based random stream. (seed, stream) identifies the stream: seed is
// the Philox key, stream occupies the upper half of the 128-bit counter, and
// the block index occupies the lower half, so distinct streams never overlap.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // N(0, 1)

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Sum/mean with a fixed pairwise reduction tree so the result does not depend
// on accumulation order or thread count.
double pairwise_sum(const std::vector<double>& v);
double pairwise_mean(const std::vector<double>& v);

}  // namespace mni
