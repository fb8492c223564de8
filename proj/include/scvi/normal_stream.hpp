#pragma once

#include <cstdint>

namespace scvi {

/// Stateless, counter-addressed standard-normal draws.
///
/// Every draw is keyed by (seed, level, step, component); distinct keys map to
/// distinct stream positions, so path generation, Brownian-bridge refinement,
/// and parallel ensemble runs are order-independent and exactly replayable.
///
/// Algorithm (fixed; part of the file-format/reproducibility contract):
///   1. absorb the four key words through a SplitMix64-style avalanche chain,
///   2. take the top 53 bits as a uniform in the open interval (0,1),
///   3. map through the inverse normal CDF (rational approximation polished by
///      one Halley step against erfc; accurate to a few ulp).
double normal_draw(std::uint64_t seed, std::uint64_t level, std::uint64_t step,
                   std::uint64_t component) noexcept;

/// Raw 64-bit stream word for a key.
std::uint64_t stream_bits(std::uint64_t seed, std::uint64_t level, std::uint64_t step,
                          std::uint64_t component) noexcept;

/// 53-bit uniform in (0,1) from a stream word.
double uniform_from_bits(std::uint64_t bits) noexcept;

/// Inverse CDF of the standard normal; u must lie in (0,1).
double inverse_normal_cdf(double u) noexcept;

/// CDF of the standard normal (via erfc).
double normal_cdf(double x) noexcept;

}  // namespace scvi
