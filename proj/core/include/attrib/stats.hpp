#pragma once

#include <cstdint>
#include <random>

namespace attrib {

/// Quantile of the standard normal distribution (Wichura's AS 241 algorithm,
/// double precision). p must be in (0, 1).
double normal_quantile(double p);

/// Normal CDF.
double normal_cdf(double x);

/// Mixes a base seed with a stream index into an independent 64-bit seed.
/// Used to give Monte Carlo draws per-draw seeds so that aggregation is
/// deterministic regardless of how draws are scheduled across workers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

using Rng = std::mt19937_64;

/// Samples from a hypergeometric distribution: number of marked items in a
/// draw of `n_draw` from a population of `n_total` containing `n_marked`
/// marked items. Inverse-CDF walk starting from the mode.
int hypergeometric(Rng& rng, int n_total, int n_marked, int n_draw);

}  // namespace attrib
