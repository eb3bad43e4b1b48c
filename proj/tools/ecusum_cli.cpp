// Command line front end: threshold calibration, delay/false-alarm curve
// generation, Monte Carlo verification of the closed forms, online stream
// detection, and exact evaluation of the discrete change-time measures.
//
// Exit codes: 0 success, 2 parameter or problem-document error, 3 malformed
// input stream, 4 simulation truncation policy tripped.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecusum/analytic.hpp"
#include "ecusum/framework.hpp"
#include "ecusum/num_format.hpp"
#include "ecusum/simulate.hpp"
#include "ecusum/stream_detect.hpp"

namespace {

using namespace ecusum;

constexpr std::uint64_t kDefaultSeed = 42;

struct Emitter {
  std::string format = "csv";  // csv | text
  std::vector<std::pair<std::string, std::string>> config;
  std::ostringstream body;

  void kv(const std::string& key, const std::string& value) {
    config.emplace_back(key, value);
  }
  void kv(const std::string& key, double value) { kv(key, format_double(value)); }
  void kv(const std::string& key, std::uint64_t value) {
    kv(key, std::to_string(value));
  }

  std::string str() const {
    std::ostringstream out;
    for (const auto& [k, v] : config)
      out << (format == "csv" ? "# " : "") << k << (format == "csv" ? "=" : " = ")
          << v << '\n';
    out << body.str();
    return out.str();
  }
};

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file '" + path + "'");
  out << content;
}

std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value,
                           std::string* source) {
  if (flag_given) {
    *source = "flag";
    return flag_value;
  }
  if (const char* env = std::getenv("ECUSUM_SEED")) {
    std::size_t used = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(env, &used);
    } catch (...) {
      throw std::invalid_argument("ECUSUM_SEED must be an unsigned integer");
    }
    if (used != std::string(env).size())
      throw std::invalid_argument("ECUSUM_SEED must be an unsigned integer");
    *source = "env";
    return value;
  }
  *source = "default";
  return kDefaultSeed;
}

std::vector<double> parse_value_list(const std::string& text, const char* name) {
  std::vector<double> out;
  if (text.rfind("logspace:", 0) == 0) {
    // logspace:<lo>:<hi>:<n> - n log-spaced points from lo to hi inclusive
    double lo = 0.0, hi = 0.0;
    long n = 0;
    char colon1 = 0, colon2 = 0;
    std::istringstream is(text.substr(9));
    if (!(is >> lo >> colon1 >> hi >> colon2 >> n) || colon1 != ':' ||
        colon2 != ':' || !is.eof() || !(lo > 0.0) || !(hi > lo) || n < 2)
      throw std::invalid_argument(std::string("malformed logspace grid for ") +
                                  name);
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(n - 1);
    for (long i = 0; i < n; ++i)
      out.push_back(std::exp(std::log(lo) + step * static_cast<double>(i)));
    return out;
  }
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (...) {
      throw std::invalid_argument(std::string("malformed value '") + item +
                                  "' in " + name);
    }
  }
  if (out.empty())
    throw std::invalid_argument(std::string(name) + " must be nonempty");
  return out;
}

// ---- calibrate ----

int cmd_calibrate(double gamma, double mu, double lambda,
                  const std::string& format, const std::string& out_path) {
  const DriftChangeSpec spec{mu, lambda};
  const Threshold nu_star = calibrate_threshold(gamma, spec);
  const OperatingPoint op = ecusum_operating_point(nu_star, spec);

  Emitter em;
  em.format = format;
  em.kv("subcommand", "calibrate");
  em.kv("gamma", gamma);
  em.kv("mu", mu);
  em.kv("lambda", lambda);
  if (format == "text") {
    em.body << "nu_star = " << format_double(nu_star.nu()) << '\n'
            << "delay = " << format_double(op.delay) << '\n'
            << "false_alarm_period = " << format_double(op.false_alarm_period)
            << '\n'
            << "delay_norm = " << format_double(op.normalized_delay) << '\n'
            << "false_alarm_norm = " << format_double(op.normalized_fa) << '\n';
  } else {
    em.body << "gamma,mu,lambda,nu_star,delay,false_alarm_period,delay_norm,"
               "false_alarm_norm\n"
            << format_double(gamma) << ',' << format_double(mu) << ','
            << format_double(lambda) << ',' << format_double(nu_star.nu()) << ','
            << format_double(op.delay) << ','
            << format_double(op.false_alarm_period) << ','
            << format_double(op.normalized_delay) << ','
            << format_double(op.normalized_fa) << '\n';
  }
  write_output(out_path, em.str());
  return 0;
}

// ---- curves ----

int cmd_curves(const std::string& ratios_text, const std::string& grid_text,
               const std::string& format, const std::string& out_path) {
  const std::vector<double> ratios = parse_value_list(ratios_text, "--ratios");
  const std::vector<double> grid = parse_value_list(grid_text, "--gamma-grid");
  const std::vector<CurvePoint> rows = curve_table(ratios, grid);

  Emitter em;
  em.format = format;
  em.kv("subcommand", "curves");
  em.kv("ratios", ratios_text);
  em.kv("gamma_grid", grid_text);
  em.kv("rows", static_cast<std::uint64_t>(rows.size()));
  if (format == "text") {
    for (const CurvePoint& p : rows)
      em.body << "ratio " << format_double(p.ratio) << "  gamma_norm "
              << format_double(p.gamma_norm) << "  ecusum "
              << format_double(p.ecusum_delay_norm) << "  cusum "
              << format_double(p.cusum_delay_norm) << '\n';
  } else {
    write_curve_csv(em.body, rows);
  }
  write_output(out_path, em.str());
  return 0;
}

// ---- mc ----

int cmd_mc(const std::string& regime_text, double mu, double lambda, double nu,
           double y0, std::size_t paths, double dt, bool seed_given,
           std::uint64_t seed_flag, bool bridge, double max_time,
           unsigned workers, const std::string& format,
           const std::string& out_path) {
  const Regime regime =
      regime_text == "post" ? Regime::post_change : Regime::pre_change;
  const DriftChangeSpec spec{mu, lambda};
  const Threshold threshold(nu);

  std::string seed_source;
  sim::SimConfig cfg;
  cfg.dt = dt;
  cfg.n_paths = paths;
  cfg.seed = resolve_seed(seed_given, seed_flag, &seed_source);
  cfg.max_time = max_time;
  cfg.bridge_correction = bridge;
  cfg.n_workers = workers;
  cfg = sim::resolve_sim_config(cfg, regime, spec, threshold, y0);

  const sim::McRunReport report =
      sim::monte_carlo_run_length(regime, spec, threshold, y0, cfg);

  double analytic = std::numeric_limits<double>::quiet_NaN();
  if (lambda > 0.0)
    analytic = regime == Regime::post_change
                   ? delay_g(y0, threshold, spec)
                   : false_alarm_h(y0, threshold, spec);
  const double diff = std::abs(report.estimate.mean - analytic);
  double z = std::numeric_limits<double>::quiet_NaN();
  if (std::isfinite(diff))
    z = diff == 0.0 ? 0.0 : diff / report.estimate.std_error;

  Emitter em;
  em.format = format;
  em.kv("subcommand", "mc");
  em.kv("regime", regime_text);
  em.kv("mu", mu);
  em.kv("lambda", lambda);
  em.kv("nu", nu);
  em.kv("y0", y0);
  em.kv("paths", static_cast<std::uint64_t>(cfg.n_paths));
  em.kv("dt", cfg.dt);
  em.kv("max_time", cfg.max_time);
  em.kv("bridge", bridge ? "1" : "0");
  em.kv("workers", static_cast<std::uint64_t>(cfg.n_workers));
  em.kv("seed", cfg.seed);
  em.kv("seed_source", seed_source);
  if (format == "text") {
    em.body << "mean = " << format_double(report.estimate.mean) << '\n'
            << "stderr = " << format_double(report.estimate.std_error) << '\n'
            << "truncated = " << report.truncated << '\n'
            << "analytic = " << format_double(analytic) << '\n'
            << "abs_z = " << format_double(z) << '\n';
  } else {
    em.body << sim::mc_csv_header() << ",analytic,abs_z\n"
            << sim::mc_csv_row(report) << ',' << format_double(analytic) << ','
            << format_double(z) << '\n';
  }
  write_output(out_path, em.str());
  return 0;
}

// ---- detect ----

int cmd_detect(const std::string& input, double mu, double nu,
               const std::string& variant_text, bool levels,
               const std::string& format, const std::string& out_path) {
  const stream::Variant variant = variant_text == "cusum"
                                      ? stream::Variant::cusum
                                      : stream::Variant::ecusum;
  stream::AlarmReport report;
  if (input.empty() || input == "-") {
    report = stream::run_detector_csv(std::cin, mu, Threshold(nu), variant, levels);
  } else {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open input file '" + input + "'");
    report = stream::run_detector_csv(in, mu, Threshold(nu), variant, levels);
  }

  Emitter em;
  em.format = format;
  em.kv("subcommand", "detect");
  em.kv("input", input.empty() ? "-" : input);
  em.kv("mu", mu);
  em.kv("nu", nu);
  em.kv("variant", variant_text);
  em.kv("levels", levels ? "1" : "0");
  if (format == "text") {
    em.body << "alarmed = " << (report.alarm_time ? "yes" : "no") << '\n';
    if (report.alarm_time)
      em.body << "alarm_time = " << format_double(*report.alarm_time) << '\n';
    em.body << "final_y = " << format_double(report.final_y) << '\n'
            << "records = " << report.n_records << '\n'
            << "occurrences = " << report.n_occurrences << '\n';
  } else {
    em.body << stream::alarm_csv_header() << '\n'
            << stream::alarm_csv_row(report) << '\n';
  }
  write_output(out_path, em.str());
  return 0;
}

// ---- framework ----

void framework_row(Emitter& em, const std::string& format,
                   const std::string& name, const framework::MeasureReport& r,
                   const framework::DiscreteChangeModel& model) {
  std::string arg_t = r.arg_t ? std::to_string(*r.arg_t) : "";
  std::string arg_prefix;
  if (r.arg_prefix) {
    std::size_t code = 0;
    for (std::size_t s : *r.arg_prefix) code = code * model.n_symbols() + s;
    arg_prefix = framework::decode_prefix(model, code, r.arg_prefix->size());
  }
  if (format == "text") {
    em.body << name << " = " << format_double(r.value);
    if (r.arg_t) em.body << "  (at t=" << arg_t;
    if (r.arg_prefix) em.body << ", history '" << arg_prefix << "'";
    if (r.arg_t) em.body << ")";
    em.body << "  cap_error_pre=" << format_double(r.cap_error_pre)
            << " cap_error_post=" << format_double(r.cap_error_post) << '\n';
  } else {
    em.body << name << ',' << format_double(r.value) << ',' << arg_t << ','
            << arg_prefix << ',' << format_double(r.cap_error_pre) << ','
            << format_double(r.cap_error_post) << '\n';
  }
}

int cmd_framework(const std::string& spec_path, const std::string& format,
                  const std::string& out_path) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("cannot open problem document '" + spec_path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const framework::FrameworkProblem problem =
      framework::parse_problem_json(buffer.str());

  Emitter em;
  em.format = format;
  em.kv("subcommand", "framework");
  em.kv("spec", spec_path);
  em.kv("horizon", static_cast<std::uint64_t>(problem.model.horizon));
  em.kv("alphabet_size", static_cast<std::uint64_t>(problem.model.n_symbols()));
  em.kv("rule", problem.rule.description);

  if (format != "text")
    em.body << "measure,value,arg_t,arg_prefix,cap_error_pre,cap_error_post\n";

  const auto guarded = [&](const std::string& name, auto&& compute) {
    try {
      framework_row(em, format, name, compute(), problem.model);
    } catch (const framework::UndefinedMeasureError& e) {
      framework::MeasureReport nan_report;
      nan_report.value = std::numeric_limits<double>::quiet_NaN();
      framework_row(em, format, name, nan_report, problem.model);
      em.kv("note", name + " undefined: " + e.what());
    }
  };

  guarded("J", [&] {
    return framework::measure_j(problem.model, problem.prior, problem.rule);
  });
  guarded("J_S", [&] {
    return framework::measure_shiryaev(problem.model, problem.prior.varpi,
                                       problem.rule);
  });
  guarded("J_P",
          [&] { return framework::measure_pollak(problem.model, problem.rule); });
  guarded("J_L",
          [&] { return framework::measure_lorden(problem.model, problem.rule); });
  guarded("J_EL", [&] {
    return framework::measure_extended_lorden(problem.model, problem.rule,
                                              problem.el_times);
  });
  write_output(out_path, em.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sequential drift-change detection tools: calibration and run-length "
      "analytics, Monte Carlo verification, streaming detection, and exact "
      "discrete change-time performance measures"};
  app.require_subcommand(1);

  std::string format = "csv";
  std::string out_path;
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "text"}))
      ->capture_default_str();
  app.add_option("--out", out_path, "Output file ('-' or empty for stdout)");

  // calibrate
  auto* calibrate = app.add_subcommand(
      "calibrate",
      "Solve for the threshold whose mean false-alarm period equals gamma; "
      "prints the threshold and its (delay, false-alarm) operating point");
  double gamma = 0.0, mu = 1.0, lambda = 1.0;
  calibrate->add_option("--gamma", gamma, "Target mean false-alarm period")
      ->required();
  calibrate->add_option("--mu", mu, "Post-change drift (nonzero)")->required();
  calibrate->add_option("--lambda", lambda, "Occurrence rate (> 0)")->required();

  // curves
  auto* curves = app.add_subcommand(
      "curves",
      "Normalized delay of the occurrence-aware detector and of classical "
      "CUSUM, both calibrated to the same normalized false-alarm period, for "
      "each mu^2/lambda ratio");
  std::string ratios_text, grid_text;
  curves
      ->add_option("--ratios", ratios_text,
                   "Comma-separated mu^2/lambda values (or logspace:lo:hi:n)")
      ->required();
  curves
      ->add_option("--gamma-grid", grid_text,
                   "Normalized false-alarm grid, mu^2*gamma/2 "
                   "(comma list or logspace:lo:hi:n)")
      ->required();

  // mc
  auto* mc = app.add_subcommand(
      "mc",
      "Monte Carlo run-length estimate with its standard error, the "
      "closed-form reference, and |mc - analytic| / stderr");
  std::string regime_text = "post";
  double nu = 1.0, y0 = 0.0, dt = 0.0, max_time = 0.0;
  std::size_t paths = 10000;
  std::uint64_t seed_flag = kDefaultSeed;
  unsigned workers = 0;
  bool bridge = false;
  mc->add_option("--regime", regime_text, "Which law drives the observations")
      ->check(CLI::IsMember({"pre", "post"}))
      ->capture_default_str();
  mc->add_option("--mu", mu, "Post-change drift (nonzero)")->required();
  mc->add_option("--lambda", lambda, "Occurrence rate (>= 0)")->required();
  mc->add_option("--nu", nu, "Detector threshold (>= 0)")->required();
  mc->add_option("--y0", y0, "Start value of the statistic (<= nu)")
      ->capture_default_str();
  mc->add_option("--paths", paths, "Number of independent paths")
      ->capture_default_str();
  mc->add_option("--dt", dt, "Step size (0: auto)")->capture_default_str();
  auto* seed_opt = mc->add_option("--seed", seed_flag,
                                  "Master seed (env ECUSUM_SEED overrides the "
                                  "default; this flag overrides both)");
  mc->add_flag("--bridge", bridge,
               "Apply the within-step crossing probability correction");
  mc->add_option("--max-time", max_time, "Truncation horizon (0: auto)")
      ->capture_default_str();
  mc->add_option("--workers", workers, "Worker threads (0: hardware)")
      ->capture_default_str();

  // detect
  auto* detect = app.add_subcommand(
      "detect",
      "Run the online detector over a recorded or live CSV stream "
      "(header t,dxi,occ) and report the alarm time, if any");
  std::string input;
  std::string variant_text = "ecusum";
  bool levels = false;
  detect->add_option("--input", input, "Input file ('-' for stdin)")->required();
  detect->add_option("--mu", mu, "Post-change drift (nonzero)")->required();
  detect->add_option("--nu", nu, "Detector threshold (>= 0)")->required();
  detect->add_option("--variant", variant_text,
                     "ecusum resets only at occurrences; cusum at every record")
      ->check(CLI::IsMember({"ecusum", "cusum"}))
      ->capture_default_str();
  detect->add_flag("--levels", levels,
                   "Input column holds observation levels (header t,xi,occ); "
                   "differenced on the fly");

  // framework
  auto* fw = app.add_subcommand(
      "framework",
      "Evaluate the exact discrete change-time performance measures (mean "
      "delay J for the supplied prior, its history-independent version J_S, "
      "worst-case-over-time J_P, worst-case-over-histories J_L, and J_EL "
      "restricted to admissible change times) for a JSON problem document");
  std::string spec_path;
  fw->add_option("--spec", spec_path, "Problem document (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(gamma, mu, lambda, format, out_path);
    if (*curves) return cmd_curves(ratios_text, grid_text, format, out_path);
    if (*mc)
      return cmd_mc(regime_text, mu, lambda, nu, y0, paths, dt,
                    seed_opt->count() > 0, seed_flag, bridge, max_time, workers,
                    format, out_path);
    if (*detect)
      return cmd_detect(input, mu, nu, variant_text, levels, format, out_path);
    if (*fw) return cmd_framework(spec_path, format, out_path);
  } catch (const stream::StreamFormatError& e) {
    std::cerr << "error: malformed stream: " << e.what() << '\n';
    return 3;
  } catch (const sim::TruncationLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const framework::SpecValidationError& e) {
    std::cerr << "error: invalid problem document: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
