#include "trav/speed_pmf.hpp"

#include <cmath>

namespace trav {

SpeedPmf::SpeedPmf(std::vector<double> probs, double s_max)
    : probs_(std::move(probs)), s_max_(s_max) {
  if (probs_.empty()) throw std::invalid_argument("SpeedPmf: no bins");
  if (!(s_max_ > 0.0)) throw std::invalid_argument("SpeedPmf: s_max must be > 0");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("SpeedPmf: negative or NaN mass");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("SpeedPmf: mass does not sum to 1");
}

SpeedPmf SpeedPmf::delta(int bin, int n_bins, double s_max) {
  if (bin < 0 || bin >= n_bins) throw std::invalid_argument("delta: bin out of range");
  std::vector<double> p(n_bins, 0.0);
  p[bin] = 1.0;
  return SpeedPmf(std::move(p), s_max);
}

double pmf_mean(const SpeedPmf& pmf) {
  double m = 0.0;
  for (int k = 0; k < pmf.bins(); ++k) m += pmf.prob(k) * pmf.bin_center(k);
  return m;
}

double value_at_risk(const SpeedPmf& pmf, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("value_at_risk: alpha must be in (0, 1]");
  double cum = 0.0;
  double result = 0.0;
  for (int k = 0; k < pmf.bins(); ++k) {
    const double p = pmf.prob(k);
    if (p <= 0.0) continue;
    if (cum + p >= alpha) {
      const double frac = (alpha - cum) / p;
      return pmf.bin_lo(k) + frac * pmf.bin_width();
    }
    cum += p;
    result = pmf.bin_hi(k);
  }
  // alpha beyond accumulated mass (rounding): top of highest nonzero bin.
  return result;
}

double cvar(const SpeedPmf& pmf, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("cvar: alpha must be in (0, 1]");
  // Integrate the piecewise-linear quantile over [0, alpha] segment by segment.
  double integral = 0.0;
  double cum = 0.0;
  for (int k = 0; k < pmf.bins() && cum < alpha; ++k) {
    const double p = pmf.prob(k);
    if (p <= 0.0) continue;
    const double seg = std::min(p, alpha - cum);
    // q(tau) = lo + (tau - cum)/p * w over this segment
    integral += seg * pmf.bin_lo(k) + pmf.bin_width() / p * seg * seg * 0.5;
    cum += p;
  }
  return integral / alpha;
}

double risk_adjusted_speed(const SpeedPmf& pmf, const RiskParams& params) {
  params.validate();
  return params.beta * cvar(pmf, params.alpha) +
         (1.0 - params.beta) * pmf_mean(pmf);
}

}  // namespace trav
