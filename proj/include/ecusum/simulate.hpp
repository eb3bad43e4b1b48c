#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecusum/core_types.hpp"

namespace ecusum::sim {

// Increment of the log-likelihood statistic over a segment of length h
// carrying observation increment dxi. Shared with the stream detector so a
// recorded path replays bit-identically.
inline double loglik_increment(double mu, double h, double dxi) {
  return -0.5 * mu * mu * h + mu * dxi;
}

// Detector state advanced one increment at a time. The statistic y may go
// negative; it is lifted back to zero only at occurrence instants (or at
// every step for the classical variant). Stopping happens at the first
// y >= nu.
struct EcusumState {
  double y = 0.0;
  bool stopped = false;
  double elapsed = 0.0;
};

// y += du, then reset to max(y, 0) if this step carries an occurrence.
// Equivalent to tracking u minus its running minimum sampled at {0} and the
// occurrence times. Throws std::logic_error if already stopped.
EcusumState step_ecusum(EcusumState state, double du, bool occurrence,
                        Threshold nu, double dt = 0.0);

// Classical variant: y = max(y + du, 0) at every step.
EcusumState step_cusum(EcusumState state, double du, Threshold nu,
                       double dt = 0.0);

struct SimConfig {
  double dt = 0.0;          // <= 0: min(1e-3, 0.01 * 2/mu^2)
  std::size_t n_paths = 10000;
  std::uint64_t seed = 42;
  double max_time = 0.0;    // <= 0: 50x the closed-form mean, or 1e4 if lambda == 0
  bool bridge_correction = false;
  double max_truncated_fraction = 1e-3;
  unsigned n_workers = 0;   // 0: hardware concurrency
};

// Config with dt / max_time / n_workers defaults filled in for a concrete run.
SimConfig resolve_sim_config(SimConfig cfg, Regime regime,
                             const DriftChangeSpec& spec, Threshold nu,
                             double y0);

// Per-path stream split: path i draws from a generator seeded by a counter
// mix of (seed, i), so results do not depend on how paths are distributed
// over workers.
std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index);

// One simulated observation segment: timestamp, observation increment over
// the segment, occurrence flag at the segment end.
struct PathRecord {
  double t = 0.0;
  double dxi = 0.0;
  bool occ = false;
};

struct PathSample {
  double stop_time = 0.0;
  double y_at_stop = 0.0;       // clamped to nu when the path crossed
  bool truncated = false;       // hit max_time without crossing
  double first_reset_time = 0.0;  // first occurrence that lifted y to 0; NaN if none
};

// Simulates one path of the detector statistic until it reaches nu or
// cfg.max_time. Steps have length cfg.dt but are split exactly at the
// Poisson arrival instants so resets happen at the true occurrence times.
// If record is non-null, every segment is appended to it; a recorded path
// replayed through the stream detector reproduces the same statistic values
// bit for bit.
PathSample simulate_run_length(Regime regime, const DriftChangeSpec& spec,
                               Threshold nu, double y0, const SimConfig& cfg,
                               std::uint64_t path_index,
                               std::vector<PathRecord>* record = nullptr);

// Same path dynamics but with the reset applied at every step (the
// classical detector). lambda is ignored.
PathSample simulate_cusum_run_length(Regime regime, const DriftChangeSpec& spec,
                                     Threshold nu, double y0,
                                     const SimConfig& cfg,
                                     std::uint64_t path_index);

class TruncationLimitError : public std::runtime_error {
 public:
  TruncationLimitError(std::size_t truncated, std::size_t total);
  std::size_t truncated() const noexcept { return truncated_; }
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t truncated_;
  std::size_t total_;
};

struct McRunReport {
  Regime regime = Regime::post_change;
  DriftChangeSpec spec;
  double nu = 0.0;
  double y0 = 0.0;
  std::uint64_t seed = 0;
  RunLengthEstimate estimate;
  std::size_t truncated = 0;
};

// Mean and standard error over cfg.n_paths independent paths. Deterministic
// for a given (seed, cfg) no matter how many workers run. Truncated paths
// contribute max_time; throws TruncationLimitError when their fraction
// exceeds cfg.max_truncated_fraction.
McRunReport monte_carlo_run_length(Regime regime, const DriftChangeSpec& spec,
                                   Threshold nu, double y0, SimConfig cfg);

// Sample mean / standard error (ddof 1) of a run-length sample.
RunLengthEstimate summarize_samples(std::span<const double> samples, double dt);

std::string mc_csv_header();  // regime,mu,lambda,nu,y0,dt,n_paths,seed,mean,stderr,truncated
std::string mc_csv_row(const McRunReport& report);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

// Monte Carlo estimate of E[exp(y)] at the earlier of the fixed horizon and
// the alarm, under the pre-change law started at y = 0. The value is never
// below 1 in expectation; used to validate the exponential-moment bound the
// calibration argument rests on.
McEstimate estimate_exp_moment_at_stop(double horizon,
                                       const DriftChangeSpec& spec,
                                       Threshold nu, SimConfig cfg);

}  // namespace ecusum::sim
