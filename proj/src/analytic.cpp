#include "ecusum/analytic.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "ecusum/num_format.hpp"

namespace ecusum {

namespace {

// Root of an increasing function by bracket doubling + bisection. The
// functions calibrated here grow like e^nu, so the bracket stays small.
double solve_increasing(const std::function<double(double)>& f, double target) {
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (f(hi) < target) {
    hi *= 2.0;
    if (++guard > 4096) throw std::runtime_error("calibration bracket failed");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double val = f(mid);
    if (std::abs(val - target) <= 1e-12 * std::max(1.0, target)) return mid;
    if (val < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

void require_rate_params(double a, double b, double lambda) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(lambda))
    throw std::invalid_argument("rate constants require finite parameters");
  if (b == 0.0) throw std::invalid_argument("diffusion coefficient b must be nonzero");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (a == 0.0)
    throw std::invalid_argument("drift a must be nonzero (no detectable change)");
}

}  // namespace

RateConstants rate_constants(double a, double b, double lambda) {
  require_rate_params(a, b, lambda);
  const double b2 = b * b;
  const double s = std::sqrt(a * a + 2.0 * lambda * b2);
  // Rationalized form for a > 0 avoids cancellation when lambda*b^2 << a^2.
  const double r = a > 0.0 ? 2.0 * lambda / (a + s) : (s - a) / b2;
  const double A = (b2 / (2.0 * a)) * (a * r / lambda - 1.0);
  return {r, A};
}

SpecializedRates specialized_rates(const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  const double half = 0.5 * spec.mu * spec.mu;
  const RateConstants post = rate_constants(half, spec.mu, spec.lambda);
  const RateConstants pre = rate_constants(-half, spec.mu, spec.lambda);
  return {post.r, pre.r, post.A, pre.A};
}

RunLengthDerivatives expected_run_length_derivatives(double y, Threshold nu,
                                                     double a, double b,
                                                     double lambda) {
  const auto [r, A] = rate_constants(a, b, lambda);
  const double v = nu.nu();
  if (!(y <= v))
    throw std::domain_error("start value y must not exceed the threshold nu");
  const double c = 2.0 * a / (b * b);
  if (y >= 0.0) {
    const double ecy = std::exp(-c * y);
    // A (e^{-cy} - e^{-c nu}), factored so f(nu) is exactly zero.
    const double diff = -ecy * std::expm1(-c * (v - y));
    return {(v - y + A * diff) / a,
            (-1.0 - c * A * ecy) / a,
            (c * c * A * ecy) / a};
  }
  const double ery = std::exp(r * y);
  const double base = (v - A * std::expm1(-c * v)) / a;
  return {base - std::expm1(r * y) / lambda,
          -(r / lambda) * ery,
          -(r * r / lambda) * ery};
}

double expected_run_length(double y, Threshold nu, double a, double b,
                           double lambda) {
  return expected_run_length_derivatives(y, nu, a, b, lambda).f;
}

double delay_g(double y, Threshold nu, const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  return expected_run_length(y, nu, loglik_drift(Regime::post_change, spec.mu),
                             spec.mu, spec.lambda);
}

double false_alarm_h(double y, Threshold nu, const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  return expected_run_length(y, nu, loglik_drift(Regime::pre_change, spec.mu),
                             spec.mu, spec.lambda);
}

double delay_g_derivative(double y, Threshold nu, const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  return expected_run_length_derivatives(
             y, nu, loglik_drift(Regime::post_change, spec.mu), spec.mu,
             spec.lambda)
      .f1;
}

double false_alarm_h_derivative(double y, Threshold nu,
                                const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  return expected_run_length_derivatives(
             y, nu, loglik_drift(Regime::pre_change, spec.mu), spec.mu,
             spec.lambda)
      .f1;
}

OperatingPoint ecusum_operating_point(Threshold nu,
                                      const DriftChangeSpec& spec) {
  const SpecializedRates sr = specialized_rates(spec);
  const double v = nu.nu();
  // expm1 keeps the small-nu evaluation from cancelling.
  const double em = std::expm1(-v);  // e^-v - 1
  const double ep = std::expm1(v);   // e^v - 1
  const double delay_norm = (v + em) - em / sr.r_inf;
  const double fa_norm = (ep - v) + ep / sr.r0;
  const double inv = 2.0 / (spec.mu * spec.mu);
  return {inv * delay_norm, inv * fa_norm, v, delay_norm, fa_norm};
}

OperatingPoint cusum_operating_point(Threshold nu, double mu) {
  require_nonzero_mu(mu);
  const double v = nu.nu();
  const double delay_norm = v + std::expm1(-v);
  const double fa_norm = std::expm1(v) - v;
  const double inv = 2.0 / (mu * mu);
  return {inv * delay_norm, inv * fa_norm, v, delay_norm, fa_norm};
}

Threshold calibrate_threshold(double gamma, const DriftChangeSpec& spec) {
  require_analytic_params(spec);
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be finite and >= 0");
  if (gamma == 0.0) return Threshold(0.0);
  return Threshold(solve_increasing(
      [&](double v) {
        return ecusum_operating_point(Threshold(v), spec).false_alarm_period;
      },
      gamma));
}

Threshold calibrate_cusum_threshold(double gamma, double mu) {
  require_nonzero_mu(mu);
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be finite and >= 0");
  if (gamma == 0.0) return Threshold(0.0);
  return Threshold(solve_increasing(
      [&](double v) {
        return cusum_operating_point(Threshold(v), mu).false_alarm_period;
      },
      gamma));
}

double run_length_ode_residual(double y, Threshold nu, double a, double b,
                               double lambda) {
  const RunLengthDerivatives d =
      expected_run_length_derivatives(y, nu, a, b, lambda);
  double jump = 0.0;  // f(max(y,0)) - f(y); zero on the upper branch
  if (y < 0.0) {
    const double f0 = expected_run_length_derivatives(0.0, nu, a, b, lambda).f;
    jump = f0 - d.f;
  }
  return a * d.f1 + 0.5 * b * b * d.f2 + lambda * jump + 1.0;
}

double optimality_potential(double y, Threshold nu,
                            const DriftChangeSpec& spec) {
  const SpecializedRates sr = specialized_rates(spec);
  return std::exp(y) * delay_g(y, nu, spec) -
         (sr.r0 / sr.r_inf) * false_alarm_h(y, nu, spec);
}

std::vector<CurvePoint> curve_table(std::span<const double> ratios,
                                    std::span<const double> gamma_norm_grid) {
  if (ratios.empty() || gamma_norm_grid.empty())
    throw std::invalid_argument("curve grids must be nonempty");
  for (double rho : ratios)
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw std::invalid_argument("ratio mu^2/lambda must be finite and > 0");
  for (double gn : gamma_norm_grid)
    if (!(gn >= 0.0) || !std::isfinite(gn))
      throw std::invalid_argument("gamma grid values must be finite and >= 0");

  std::vector<CurvePoint> out;
  out.reserve(ratios.size() * gamma_norm_grid.size());
  for (double rho : ratios) {
    // Normalized quantities depend on (nu, mu^2/lambda) only, so mu = 1 is a
    // free choice.
    const DriftChangeSpec spec{1.0, 1.0 / rho};
    for (double gn : gamma_norm_grid) {
      const double gamma = 2.0 * gn;
      const Threshold nu_e = calibrate_threshold(gamma, spec);
      const Threshold nu_c = calibrate_cusum_threshold(gamma, 1.0);
      out.push_back({rho, gn, ecusum_operating_point(nu_e, spec).normalized_delay,
                     cusum_operating_point(nu_c, 1.0).normalized_delay});
    }
  }
  return out;
}

void write_curve_csv(std::ostream& os, std::span<const CurvePoint> rows) {
  os << "ratio,gamma_norm,ecusum_delay_norm,cusum_delay_norm\n";
  for (const CurvePoint& p : rows) {
    os << format_double(p.ratio) << ',' << format_double(p.gamma_norm) << ','
       << format_double(p.ecusum_delay_norm) << ','
       << format_double(p.cusum_delay_norm) << '\n';
  }
}

}  // namespace ecusum
