#pragma once

#include <cstdint>
#include <cmath>

namespace brwp {

// Counter-based random streams. Every variate is a pure function of
// (seed, stream, iteration, particle id, draw index), so values never depend
// on evaluation order, thread count, or how many draws other particles made.
// Keying by stable particle ids (not row positions) is what makes sampler
// steps equivariant under row permutations.
enum class RngStream : std::uint64_t {
  init = 1,
  ula_noise,
  mala_noise,
  mala_accept,
  normalizer,
  subsample,
  covariates,
  labels,
};

namespace detail {

// Stafford mix 13 finalizer; full 64-bit avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t bits(RngStream stream, std::uint64_t iteration, std::uint64_t particle,
                     std::uint64_t draw) const {
    std::uint64_t h = detail::mix64(seed);
    h = detail::mix64(h ^ static_cast<std::uint64_t>(stream));
    h = detail::mix64(h ^ iteration);
    h = detail::mix64(h ^ particle);
    return detail::mix64(h ^ draw);
  }

  // Uniform on the open interval (0, 1); never returns an endpoint, so logs
  // of uniforms are always finite.
  double uniform(RngStream stream, std::uint64_t iteration, std::uint64_t particle,
                 std::uint64_t draw) const {
    const std::uint64_t b = bits(stream, iteration, particle, draw) >> 11;
    return (static_cast<double>(b) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // Standard normal via Box-Muller; consumes the draw pair (2*draw, 2*draw+1)
  // of the underlying uniform counter space.
  double normal(RngStream stream, std::uint64_t iteration, std::uint64_t particle,
                std::uint64_t draw) const {
    const double u1 = uniform(stream, iteration, particle, 2 * draw);
    const double u2 = uniform(stream, iteration, particle, 2 * draw + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform index in [0, bound) via the multiply-shift map; bias is
  // bound / 2^64 and irrelevant at these sizes.
  std::uint64_t index(std::uint64_t bound, RngStream stream, std::uint64_t iteration,
                      std::uint64_t particle, std::uint64_t draw) const {
    const std::uint64_t b = bits(stream, iteration, particle, draw);
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(b) * static_cast<unsigned __int128>(bound)) >> 64);
  }
};

}  // namespace brwp
