#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ecusum/core_types.hpp"

namespace ecusum {

// Constants of the closed-form expected run length of the detector driven by
// u_t = y + a*t + b*w_t with Poisson(lambda) reset opportunities:
//   r is the positive root of (b^2/2) r^2 + a r - lambda = 0,
//   A = (b^2 / 2a) (a r / lambda - 1).
struct RateConstants {
  double r = 0.0;
  double A = 0.0;
};

RateConstants rate_constants(double a, double b, double lambda);

// The two specializations of the rate constants for a drift-change model:
// post-change (a = +mu^2/2) and pre-change (a = -mu^2/2), both with b = mu.
// They satisfy r0 * r_inf = 2 lambda / mu^2, r_inf - r0 = 1,
// A0 = -r0/r_inf and A_inf = r_inf/r0.
struct SpecializedRates {
  double r0 = 0.0;
  double r_inf = 0.0;
  double A0 = 0.0;
  double A_inf = 0.0;
};

SpecializedRates specialized_rates(const DriftChangeSpec& spec);

// Expected time for the detector statistic started at y <= nu to reach nu.
// Piecewise in y with a branch point at 0 (resets act only below 0); the two
// branches join twice continuously differentiably.
double expected_run_length(double y, Threshold nu, double a, double b,
                           double lambda);

struct RunLengthDerivatives {
  double f = 0.0;   // value
  double f1 = 0.0;  // d/dy
  double f2 = 0.0;  // d2/dy2
};

// Value and first two derivatives of expected_run_length, evaluated on the
// branch selected by the sign of y (y >= 0: upper branch).
RunLengthDerivatives expected_run_length_derivatives(double y, Threshold nu,
                                                     double a, double b,
                                                     double lambda);

// Expected detection delay: run length under the post-change law.
double delay_g(double y, Threshold nu, const DriftChangeSpec& spec);
// Expected period between false alarms: run length under the pre-change law.
double false_alarm_h(double y, Threshold nu, const DriftChangeSpec& spec);

double delay_g_derivative(double y, Threshold nu, const DriftChangeSpec& spec);
double false_alarm_h_derivative(double y, Threshold nu,
                                const DriftChangeSpec& spec);

// (delay, mean time between false alarms) of a detector at threshold nu,
// plus the dimensionless forms mu^2 * value / 2.
struct OperatingPoint {
  double delay = 0.0;
  double false_alarm_period = 0.0;
  double nu = 0.0;
  double normalized_delay = 0.0;
  double normalized_fa = 0.0;
};

OperatingPoint ecusum_operating_point(Threshold nu,
                                      const DriftChangeSpec& spec);

// Classical CUSUM operating point (the lambda -> infinity limit; the reset
// acts continuously instead of only at occurrence instants).
OperatingPoint cusum_operating_point(Threshold nu, double mu);

// Smallest threshold whose mean false-alarm period equals gamma. The map
// nu -> false_alarm_h(0, nu) is strictly increasing from 0, so the root is
// unique; solved by bracketing bisection.
Threshold calibrate_threshold(double gamma, const DriftChangeSpec& spec);
Threshold calibrate_cusum_threshold(double gamma, double mu);

// a f'(y) + (b^2/2) f''(y) + lambda [f(max(y,0)) - f(y)] + 1 for the
// closed-form f. Identically zero up to rounding; exposed for validation.
double run_length_ode_residual(double y, Threshold nu, double a, double b,
                               double lambda);

// e^y * delay_g(y) - (r0/r_inf) * false_alarm_h(y). Nonpositive on
// (-inf, nu] with a global maximum of 0 at y = nu; the shape certifies that
// the calibrated threshold cannot be beaten at the same false-alarm period.
double optimality_potential(double y, Threshold nu, const DriftChangeSpec& spec);

// One row of the delay-versus-false-alarm comparison between the
// occurrence-aware detector and classical CUSUM, in normalized units.
struct CurvePoint {
  double ratio = 0.0;              // mu^2 / lambda
  double gamma_norm = 0.0;         // mu^2 * gamma / 2
  double ecusum_delay_norm = 0.0;  // mu^2 * delay / 2 at the calibrated nu
  double cusum_delay_norm = 0.0;
};

// Calibrates both detectors to every (ratio, normalized gamma) pair.
std::vector<CurvePoint> curve_table(std::span<const double> ratios,
                                    std::span<const double> gamma_norm_grid);

// Header: ratio,gamma_norm,ecusum_delay_norm,cusum_delay_norm
void write_curve_csv(std::ostream& os, std::span<const CurvePoint> rows);

}  // namespace ecusum
