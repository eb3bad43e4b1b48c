#include "ecusum/core_types.hpp"

#include <cmath>
#include <stdexcept>

namespace ecusum {

Threshold::Threshold(double nu) : nu_(nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu))
    throw std::invalid_argument("threshold nu must be finite and >= 0");
}

void require_nonzero_mu(double mu) {
  if (mu == 0.0 || !std::isfinite(mu))
    throw std::invalid_argument(
        "mu must be finite and nonzero (a zero drift change is undetectable)");
}

void require_analytic_params(const DriftChangeSpec& spec) {
  require_nonzero_mu(spec.mu);
  if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda))
    throw std::invalid_argument(
        "lambda must be finite and > 0 for closed-form run lengths");
}

void require_simulation_params(const DriftChangeSpec& spec) {
  require_nonzero_mu(spec.mu);
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
    throw std::invalid_argument("lambda must be finite and >= 0");
}

double loglik_drift(Regime regime, double mu) {
  require_nonzero_mu(mu);
  const double half = 0.5 * mu * mu;
  return regime == Regime::post_change ? half : -half;
}

}  // namespace ecusum
