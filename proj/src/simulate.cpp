#include "ecusum/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "ecusum/analytic.hpp"
#include "ecusum/num_format.hpp"

namespace ecusum::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double draw_exponential(std::mt19937_64& rng, double lambda) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u;
  do {
    u = u01(rng);
  } while (u <= 0.0);  // keeps the inter-arrival strictly positive
  return -std::log(u) / lambda;
}

template <typename Fn>
void parallel_paths(std::size_t n, unsigned workers, const Fn& fn) {
  if (n == 0) return;
  workers = std::min<unsigned>(std::max(1u, workers),
                               static_cast<unsigned>(std::min<std::size_t>(n, 256)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

PathSample run_path(Regime regime, const DriftChangeSpec& spec, Threshold nu,
                    double y0, const SimConfig& cfg, std::uint64_t path_index,
                    bool reflect_every_step, std::vector<PathRecord>* record) {
  const double mu = spec.mu;
  const double nu_v = nu.nu();
  PathSample out;
  out.first_reset_time = kNaN;
  if (y0 >= nu_v) {
    out.stop_time = 0.0;
    out.y_at_stop = nu_v;
    return out;
  }

  std::mt19937_64 rng(path_stream_seed(cfg.seed, path_index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const double xi_drift = regime == Regime::post_change ? mu : 0.0;
  const double lambda = reflect_every_step ? 0.0 : spec.lambda;
  const double dt = cfg.dt;
  const double max_time = cfg.max_time;

  double t = 0.0;
  double y = y0;
  double next_arrival = lambda > 0.0 ? draw_exponential(rng, lambda) : kInf;

  while (true) {
    double t_next = t + dt;
    bool arrival = false;
    if (next_arrival <= t_next) {
      t_next = next_arrival;
      arrival = true;
    }
    bool final_step = false;
    if (t_next >= max_time) {
      if (t_next > max_time) {
        t_next = max_time;
        arrival = false;
      }
      final_step = true;
    }

    const double h = t_next - t;
    const double z = normal(rng);
    const double dxi = xi_drift * h + std::sqrt(h) * z;
    const double du = loglik_increment(mu, h, dxi);
    const double y_prev = y;
    y = y_prev + du;
    bool crossed = y >= nu_v;
    if (cfg.bridge_correction) {
      // The uniform is drawn on every segment so paths with different nu stay
      // coupled on the same stream.
      const double u = u01(rng);
      if (!crossed && h > 0.0) {
        const double p =
            std::exp(-2.0 * (nu_v - y_prev) * (nu_v - y) / (mu * mu * h));
        if (u < p) crossed = true;
      }
    }
    if (record) record->push_back({t_next, dxi, arrival});
    t = t_next;
    if (crossed) {
      out.stop_time = t;
      out.y_at_stop = nu_v;
      return out;
    }
    if (arrival || reflect_every_step) {
      if (y < 0.0) {
        y = 0.0;
        if (arrival && std::isnan(out.first_reset_time)) out.first_reset_time = t;
      }
      if (y >= nu_v) {  // only reachable when nu == 0
        out.stop_time = t;
        out.y_at_stop = nu_v;
        return out;
      }
      if (arrival) next_arrival = t + draw_exponential(rng, lambda);
    }
    if (final_step) {
      out.stop_time = max_time;
      out.y_at_stop = y;
      out.truncated = true;
      return out;
    }
  }
}

const char* regime_name(Regime regime) {
  return regime == Regime::post_change ? "post" : "pre";
}

}  // namespace

EcusumState step_ecusum(EcusumState state, double du, bool occurrence,
                        Threshold nu, double dt) {
  if (state.stopped) throw std::logic_error("detector already stopped");
  state.y += du;
  if (occurrence) state.y = std::max(state.y, 0.0);
  state.elapsed += dt;
  if (state.y >= nu.nu()) state.stopped = true;
  return state;
}

EcusumState step_cusum(EcusumState state, double du, Threshold nu, double dt) {
  return step_ecusum(state, du, true, nu, dt);
}

std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index) {
  // splitmix64 output for counter (path_index + 1) on top of the master seed
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (path_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SimConfig resolve_sim_config(SimConfig cfg, Regime regime,
                             const DriftChangeSpec& spec, Threshold nu,
                             double y0) {
  require_simulation_params(spec);
  if (y0 > nu.nu()) throw std::invalid_argument("y0 must not exceed nu");
  if (!(cfg.dt > 0.0))
    cfg.dt = std::min(1e-3, 0.01 * 2.0 / (spec.mu * spec.mu));
  if (!(cfg.max_time > 0.0)) {
    if (spec.lambda > 0.0) {
      const double mean = regime == Regime::post_change
                              ? delay_g(y0, nu, spec)
                              : false_alarm_h(y0, nu, spec);
      cfg.max_time = std::max(50.0 * mean, 1.0);
    } else {
      cfg.max_time = 1e4;
    }
  }
  if (cfg.n_workers == 0)
    cfg.n_workers = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

PathSample simulate_run_length(Regime regime, const DriftChangeSpec& spec,
                               Threshold nu, double y0, const SimConfig& cfg,
                               std::uint64_t path_index,
                               std::vector<PathRecord>* record) {
  require_simulation_params(spec);
  if (y0 > nu.nu()) throw std::invalid_argument("y0 must not exceed nu");
  if (!(cfg.dt > 0.0) || !(cfg.max_time > 0.0))
    throw std::invalid_argument(
        "simulate_run_length needs a resolved config (dt and max_time > 0)");
  return run_path(regime, spec, nu, y0, cfg, path_index, false, record);
}

PathSample simulate_cusum_run_length(Regime regime, const DriftChangeSpec& spec,
                                     Threshold nu, double y0,
                                     const SimConfig& cfg,
                                     std::uint64_t path_index) {
  require_simulation_params(spec);
  if (y0 > nu.nu()) throw std::invalid_argument("y0 must not exceed nu");
  if (!(cfg.dt > 0.0) || !(cfg.max_time > 0.0))
    throw std::invalid_argument(
        "simulate_cusum_run_length needs a resolved config");
  return run_path(regime, spec, nu, y0, cfg, path_index, true, nullptr);
}

TruncationLimitError::TruncationLimitError(std::size_t truncated,
                                           std::size_t total)
    : std::runtime_error("truncation policy tripped: " +
                         std::to_string(truncated) + " of " +
                         std::to_string(total) +
                         " paths hit max_time before crossing"),
      truncated_(truncated),
      total_(total) {}

RunLengthEstimate summarize_samples(std::span<const double> samples,
                                    double dt) {
  if (samples.empty())
    throw std::invalid_argument("cannot summarize an empty sample");
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const std::size_t n = samples.size();
  const double std_error =
      n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
            : 0.0;
  return {mean, std_error, n, dt};
}

McRunReport monte_carlo_run_length(Regime regime, const DriftChangeSpec& spec,
                                   Threshold nu, double y0, SimConfig cfg) {
  if (cfg.n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  cfg = resolve_sim_config(cfg, regime, spec, nu, y0);

  std::vector<double> samples(cfg.n_paths);
  std::vector<unsigned char> truncated(cfg.n_paths, 0);
  parallel_paths(cfg.n_paths, cfg.n_workers, [&](std::size_t i) {
    const PathSample s = run_path(regime, spec, nu, y0, cfg, i, false, nullptr);
    samples[i] = s.stop_time;
    truncated[i] = s.truncated ? 1 : 0;
  });

  std::size_t n_trunc = 0;
  for (unsigned char f : truncated) n_trunc += f;
  if (static_cast<double>(n_trunc) >
      cfg.max_truncated_fraction * static_cast<double>(cfg.n_paths))
    throw TruncationLimitError(n_trunc, cfg.n_paths);

  McRunReport report;
  report.regime = regime;
  report.spec = spec;
  report.nu = nu.nu();
  report.y0 = y0;
  report.seed = cfg.seed;
  report.estimate = summarize_samples(samples, cfg.dt);
  report.truncated = n_trunc;
  return report;
}

std::string mc_csv_header() {
  return "regime,mu,lambda,nu,y0,dt,n_paths,seed,mean,stderr,truncated";
}

std::string mc_csv_row(const McRunReport& r) {
  std::ostringstream os;
  os << regime_name(r.regime) << ',' << format_double(r.spec.mu) << ','
     << format_double(r.spec.lambda) << ',' << format_double(r.nu) << ','
     << format_double(r.y0) << ',' << format_double(r.estimate.dt) << ','
     << r.estimate.n_paths << ',' << r.seed << ','
     << format_double(r.estimate.mean) << ','
     << format_double(r.estimate.std_error) << ',' << r.truncated;
  return os.str();
}

McEstimate estimate_exp_moment_at_stop(double horizon,
                                       const DriftChangeSpec& spec,
                                       Threshold nu, SimConfig cfg) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be finite and > 0");
  if (cfg.n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  cfg.max_time = horizon;
  cfg.max_truncated_fraction = 1.0;  // stopping at the horizon is the point
  cfg = resolve_sim_config(cfg, Regime::pre_change, spec, nu, 0.0);

  std::vector<double> samples(cfg.n_paths);
  parallel_paths(cfg.n_paths, cfg.n_workers, [&](std::size_t i) {
    const PathSample s =
        run_path(Regime::pre_change, spec, nu, 0.0, cfg, i, false, nullptr);
    samples[i] = std::exp(s.y_at_stop);
  });

  const RunLengthEstimate est = summarize_samples(samples, cfg.dt);
  return {est.mean, est.std_error, est.n_paths};
}

}  // namespace ecusum::sim
