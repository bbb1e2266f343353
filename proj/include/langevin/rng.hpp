#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace langevin {

/// Philox4x32-10 counter-based generator, one independent stream per
/// (seed, stream) pair. The seed is the 64-bit key; the stream index fills
/// the upper two counter words, the lower two count blocks.
///
/// Draw primitives are fixed so traces are reproducible across platforms:
///   uniform()  = (next_u64() >> 11) * 2^-53            in [0, 1)
///   normal()   = sqrt(-2 log(1 - u1)) * cos(2 pi u2)   two uniforms per normal
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  double uniform();
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                    std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace langevin
