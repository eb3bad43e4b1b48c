#pragma once

#include <cstddef>
#include <cstdint>

namespace ecusum {

// Which law generates a path: the nominal one (no change ever), or the
// alternative with the drift active from time zero.
enum class Regime { pre_change, post_change };

// Brownian observation model. The observations pick up drift mu after the
// change; instants at which the change can be triggered arrive as a Poisson
// stream with rate lambda, independent of the observations.
//
// mu must be nonzero. The closed-form module requires lambda > 0; the
// simulator also accepts lambda == 0 (no trigger ever arrives).
struct DriftChangeSpec {
  double mu = 1.0;
  double lambda = 1.0;
};

// Alarm level for the detector statistic. Always >= 0.
class Threshold {
 public:
  explicit Threshold(double nu);
  double nu() const noexcept { return nu_; }

 private:
  double nu_;
};

// Drift/diffusion/start of a statistic process u_t = y0 + a*t + b*w_t.
struct GeneralizedDrift {
  double a = 0.0;
  double b = 1.0;
  double y0 = 0.0;
};

// Monte Carlo summary of a stopping-time sample.
struct RunLengthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

// Drift of the log-likelihood process of the observations under the given
// regime: -mu^2/2 with no change, +mu^2/2 with the change active. The
// diffusion coefficient of that process is mu itself.
double loglik_drift(Regime regime, double mu);

void require_nonzero_mu(double mu);
void require_analytic_params(const DriftChangeSpec& spec);    // lambda > 0
void require_simulation_params(const DriftChangeSpec& spec);  // lambda >= 0

}  // namespace ecusum
