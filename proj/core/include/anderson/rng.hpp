#pragma once

#include <cstdint>
#include <random>

namespace anderson {

/// splitmix64 finalizer; used to derive well-separated stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Named stream families so independent consumers never collide on stream ids.
namespace streams {
inline constexpr std::uint64_t kDisorder = 0;
inline constexpr std::uint64_t kJitter = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kRpse = std::uint64_t{2} << 40;
inline constexpr std::uint64_t kRpseShowcase = std::uint64_t{3} << 40;
inline constexpr std::uint64_t kTest = std::uint64_t{4} << 40;
}  // namespace streams

/// Deterministic random stream: (master_seed, stream_id) fully determines the
/// sequence, and distinct stream ids give statistically independent streams.
///
/// The Gaussian transform is the Marsaglia polar method on top of 53-bit
/// uniforms; it is fixed here, in one place, so that every build reproduces
/// the same realizations bit for bit.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1), 53 random bits.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal (mean 0, sd 1).
  double gaussian();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace anderson
