#pragma once

#include <array>
#include <cstdint>

namespace stabledom {

/// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// Random stream of one Monte Carlo path.
///
/// The key is the master seed and the counter holds (block index, path
/// index), so every path draws from its own stream regardless of which
/// worker runs it.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path);

  std::uint32_t next_u32();
  /// Uniform double in (0, 1) with 53 random bits.
  double uniform();
  /// Poisson(lambda): inversion below 10, PTRS (Hormann 1993) above.
  std::uint64_t poisson(double lambda);

  std::uint64_t blocks_used() const { return block_; }

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t path_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
};

}  // namespace stabledom
