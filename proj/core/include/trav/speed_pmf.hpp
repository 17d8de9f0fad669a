#pragma once

#include <stdexcept>
#include <vector>

namespace trav {

// Discrete distribution over realized-speed bins spanning [0, s_max].
// Bin k (0-indexed) covers [k*w, (k+1)*w) with w = s_max / bins().
// For quantile and tail statistics the mass of each bin is spread
// uniformly over the bin (rectangular model), so the quantile function
// is continuous and piecewise linear.
class SpeedPmf {
 public:
  SpeedPmf(std::vector<double> probs, double s_max);

  int bins() const { return static_cast<int>(probs_.size()); }
  double s_max() const { return s_max_; }
  double bin_width() const { return s_max_ / bins(); }
  double bin_lo(int k) const { return k * bin_width(); }
  double bin_hi(int k) const { return (k + 1) * bin_width(); }
  double bin_center(int k) const { return (k + 0.5) * bin_width(); }
  double prob(int k) const { return probs_[k]; }
  const std::vector<double>& probs() const { return probs_; }

  // All mass in a single bin.
  static SpeedPmf delta(int bin, int n_bins, double s_max);

 private:
  std::vector<double> probs_;
  double s_max_;
};

struct RiskParams {
  double alpha = 0.1;  // CVaR level, in (0, 1]
  double beta = 0.5;   // risk weight, in [0, 1]

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("alpha must be in (0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0))
      throw std::invalid_argument("beta must be in [0, 1]");
  }
};

// Mean speed under the rectangular model (= bin-center weighted sum).
double pmf_mean(const SpeedPmf& pmf);

// alpha-quantile q(alpha) of the piecewise-linear CDF, lower tail.
double value_at_risk(const SpeedPmf& pmf, double alpha);

// Lower-tail average (1/alpha) * integral_0^alpha q(tau) dtau, closed form.
// Equals pmf_mean at alpha = 1.
double cvar(const SpeedPmf& pmf, double alpha);

// beta * cvar + (1 - beta) * mean.
double risk_adjusted_speed(const SpeedPmf& pmf, const RiskParams& params);

}  // namespace trav
