#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecusum::framework {

// Hard cap on |alphabet|^horizon. This module is an exact enumeration
// oracle, not a production estimator.
inline constexpr std::size_t kMaxEnumerationPaths = std::size_t{1} << 20;

class SpecValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedMeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finite-horizon i.i.d. observation model over a finite alphabet, with one
// per-step distribution before the change and one after. A change at time t
// means observations 1..t follow pre_dist and t+1.. follow post_dist.
struct DiscreteChangeModel {
  std::size_t horizon = 1;
  std::vector<std::string> alphabet;
  std::vector<double> pre_dist;
  std::vector<double> post_dist;

  std::size_t n_symbols() const { return alphabet.size(); }
  std::size_t n_paths() const;  // |alphabet|^horizon
  void validate() const;        // throws SpecValidationError

  // Probability of a prefix (encoded base |alphabet|, first symbol most
  // significant) of the given length under the pre/post per-step law.
  double pre_prefix_prob(std::size_t code, std::size_t length) const;
  double post_prefix_prob(std::size_t code, std::size_t length) const;
};

// Change-time randomization split into the aggregate weight varpi_t of a
// change at t and the history-dependent tilt p_t (mean 1 under the
// pre-change law). An empty table for some t means p_t is identically 1.
struct ChangeTimePrior {
  std::vector<double> varpi;                  // size horizon + 1
  std::vector<std::vector<double>> p_tables;  // size horizon + 1; entry t has
                                              // |alphabet|^t values or is empty

  static ChangeTimePrior history_independent(std::vector<double> varpi);
  static ChangeTimePrior delta(std::size_t t, std::size_t horizon);
  // varpi_t proportional to (1 - decay) * decay^t, renormalized to the horizon.
  static ChangeTimePrior geometric(double decay, std::size_t horizon);

  void validate(const DiscreteChangeModel& model) const;
  double p_value(std::size_t t, std::size_t prefix_code) const;
};

// A sequential test: stops_at is consulted on prefixes of length 0..H-1 in
// order (so it is never asked about extensions of a stopped prefix); every
// length-H prefix stops regardless.
struct StoppingRule {
  std::function<bool(std::span<const std::size_t>)> stops_at;
  std::string description;
};

StoppingRule fixed_time_rule(std::size_t t);
StoppingRule first_symbol_rule(std::size_t symbol_index);
// Stops when the likelihood ratio of the whole prefix (product of
// post/pre per-symbol ratios) reaches c.
StoppingRule likelihood_ratio_rule(double c, const DiscreteChangeModel& model);
StoppingRule prefix_table_rule(std::vector<std::vector<std::size_t>> stop_prefixes);

// Nonnegative functional of (change time, full observation path).
using PathFunctional =
    std::function<double(std::size_t t, std::span<const std::size_t> path)>;

// Exact expectation of X_tau under the randomized change time: sum over t of
// varpi_t E_pre[ p_t E_post[ X_t | prefix ] ], by full enumeration.
double randomized_expectation(const DiscreteChangeModel& model,
                              const ChangeTimePrior& prior,
                              const PathFunctional& functional);

struct MeasureReport {
  double value = 0.0;
  std::optional<std::size_t> arg_t;
  std::optional<std::vector<std::size_t>> arg_prefix;
  // Probability that the horizon forced the stop, under each law. All
  // measures on a finite horizon carry this truncation error.
  double cap_error_pre = 0.0;
  double cap_error_post = 0.0;
};

// Mean detection delay conditioned on stopping after the change, for the
// supplied prior. Undefined (throws) when the rule never stops after the
// change time.
MeasureReport measure_j(const DiscreteChangeModel& model,
                        const ChangeTimePrior& prior, const StoppingRule& rule);

// Same with history-independent triggering (p identically 1).
MeasureReport measure_shiryaev(const DiscreteChangeModel& model,
                               std::vector<double> varpi,
                               const StoppingRule& rule);

// Worst case over the change time of the conditional mean delay;
// arg_t reports the maximizer. Times with P[T > t] = 0 are skipped.
MeasureReport measure_pollak(const DiscreteChangeModel& model,
                             const StoppingRule& rule);

// Worst case over the change time and over every positive-probability
// pre-change history; arg_t/arg_prefix report the maximizer.
MeasureReport measure_lorden(const DiscreteChangeModel& model,
                             const StoppingRule& rule);

// Lorden-type worst case with the change restricted to the given times.
MeasureReport measure_extended_lorden(const DiscreteChangeModel& model,
                                      const StoppingRule& rule,
                                      std::span<const std::size_t> times);

struct RatioResult {
  double value = 0.0;
  std::size_t arg_index = 0;
};

// max_t a_t / b_t over two nonnegative vectors with the convention 0/0 = 0.
// This equals the supremum of (sum w a)/(sum w b) over probability weights w.
// Throws std::domain_error when some b_t = 0 < a_t (the supremum is infinite).
RatioResult max_ratio(std::span<const double> a, std::span<const double> b);

// ---- structured problem document (JSON) ----

struct FrameworkProblem {
  DiscreteChangeModel model;
  ChangeTimePrior prior;
  StoppingRule rule;
  std::vector<std::size_t> el_times;  // restriction for the extended measure
};

// Parses and fully validates a problem document; throws SpecValidationError
// with the violated invariant named.
FrameworkProblem parse_problem_json(const std::string& text);

// Decodes a prefix code back to symbol names, joined by '|'.
std::string decode_prefix(const DiscreteChangeModel& model, std::size_t code,
                          std::size_t length);

}  // namespace ecusum::framework
