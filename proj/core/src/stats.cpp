#include "attrib/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace attrib {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  }
  // Wichura (1988), algorithm AS 241, PPND16.
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -x : x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined state.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

double log_hyper_pmf(int k, int n_total, int n_marked, int n_draw) {
  auto lchoose = [](int n, int r) {
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
  };
  return lchoose(n_marked, k) + lchoose(n_total - n_marked, n_draw - k) -
         lchoose(n_total, n_draw);
}

}  // namespace

int hypergeometric(Rng& rng, int n_total, int n_marked, int n_draw) {
  if (n_draw < 0 || n_marked < 0 || n_draw > n_total || n_marked > n_total) {
    throw std::invalid_argument("hypergeometric: invalid parameters");
  }
  const int lo = std::max(0, n_draw + n_marked - n_total);
  const int hi = std::min(n_draw, n_marked);
  if (lo == hi) return lo;

  const int mode = std::clamp(
      static_cast<int>((static_cast<double>(n_draw + 1) * (n_marked + 1)) /
                       (n_total + 2)),
      lo, hi);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  // Walk outward from the mode, accumulating probability mass until u is
  // covered. Expected number of steps is O(stddev).
  double p_mode = std::exp(log_hyper_pmf(mode, n_total, n_marked, n_draw));
  double acc = p_mode;
  if (u <= acc) return mode;
  double p_up = p_mode, p_dn = p_mode;
  int up = mode, dn = mode;
  while (up < hi || dn > lo) {
    if (up < hi) {
      // pmf(k+1)/pmf(k) = (n_marked-k)(n_draw-k) / ((k+1)(n_total-n_marked-n_draw+k+1))
      p_up *= static_cast<double>(n_marked - up) * (n_draw - up) /
              (static_cast<double>(up + 1) * (n_total - n_marked - n_draw + up + 1));
      ++up;
      acc += p_up;
      if (u <= acc) return up;
    }
    if (dn > lo) {
      p_dn *= static_cast<double>(dn) * (n_total - n_marked - n_draw + dn) /
              (static_cast<double>(n_marked - dn + 1) * (n_draw - dn + 1));
      --dn;
      acc += p_dn;
      if (u <= acc) return dn;
    }
  }
  return hi;  // numerical leftover mass
}

}  // namespace attrib
