#include "ecusum/framework.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "json.hpp"

namespace ecusum::framework {

namespace {

constexpr double kSumTol = 1e-12;

std::size_t checked_pow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > kMaxEnumerationPaths) return kMaxEnumerationPaths + 1;
    out *= base;
  }
  return out;
}

void check_distribution(const std::vector<double>& dist, std::size_t n_symbols,
                        const char* name) {
  if (dist.size() != n_symbols)
    throw SpecValidationError(std::string(name) +
                              " must have one probability per alphabet symbol");
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw SpecValidationError(std::string(name) + " entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw SpecValidationError(std::string(name) + " must sum to 1");
}

double prefix_prob(const std::vector<double>& dist, std::size_t n_symbols,
                   std::size_t code, std::size_t length) {
  double prob = 1.0;
  for (std::size_t i = 0; i < length; ++i) {
    prob *= dist[code % n_symbols];
    code /= n_symbols;
  }
  return prob;
}

// Per-change-time aggregates produced by one pass over the prefix tree.
// D(prefix) is the expected number of further observations until the rule
// stops, with every observation after the prefix drawn from the post-change
// law; it exists for surviving prefixes only.
struct Tables {
  std::vector<double> pre_mass;        // sum of pre-law prefix probabilities
  std::vector<double> pre_delay;       // sum of pre-prob * D
  std::vector<double> weighted_mass;   // with the p_t tilt applied
  std::vector<double> weighted_delay;
  std::vector<double> max_delay;       // over surviving positive-probability prefixes
  std::vector<std::size_t> argmax_code;
  std::vector<unsigned char> any_surviving;
  double cap_pre = 0.0;   // P_pre[stop forced by the horizon]
  double cap_post = 0.0;  // P_post[same]
};

class Enumerator {
 public:
  Enumerator(const DiscreteChangeModel& model, const StoppingRule& rule,
             const ChangeTimePrior* prior)
      : model_(model), rule_(rule), prior_(prior) {
    const std::size_t n = model.horizon + 1;
    tables_.pre_mass.assign(n, 0.0);
    tables_.pre_delay.assign(n, 0.0);
    tables_.weighted_mass.assign(n, 0.0);
    tables_.weighted_delay.assign(n, 0.0);
    tables_.max_delay.assign(n, 0.0);
    tables_.argmax_code.assign(n, 0);
    tables_.any_surviving.assign(n, 0);
  }

  Tables run() {
    prefix_.clear();
    prefix_.reserve(model_.horizon);
    visit(0, 1.0, 1.0);
    return std::move(tables_);
  }

 private:
  // Returns D(prefix) when the prefix survives, nothing when the rule (or
  // the horizon) stops here.
  std::optional<double> visit(std::size_t code, double pre_p, double post_p) {
    const std::size_t len = prefix_.size();
    if (len == model_.horizon) {
      if (!rule_.stops_at(prefix_)) {
        tables_.cap_pre += pre_p;
        tables_.cap_post += post_p;
      }
      return std::nullopt;
    }
    if (rule_.stops_at(prefix_)) return std::nullopt;

    const std::size_t n_sym = model_.n_symbols();
    double d = 0.0;
    for (std::size_t s = 0; s < n_sym; ++s) {
      prefix_.push_back(s);
      const auto child = visit(code * n_sym + s, pre_p * model_.pre_dist[s],
                               post_p * model_.post_dist[s]);
      prefix_.pop_back();
      d += model_.post_dist[s] * (1.0 + child.value_or(0.0));
    }

    tables_.pre_mass[len] += pre_p;
    tables_.pre_delay[len] += pre_p * d;
    if (prior_) {
      const double p = prior_->p_value(len, code);
      tables_.weighted_mass[len] += pre_p * p;
      tables_.weighted_delay[len] += pre_p * p * d;
    }
    if (pre_p > 0.0 &&
        (!tables_.any_surviving[len] || d > tables_.max_delay[len])) {
      tables_.max_delay[len] = d;
      tables_.argmax_code[len] = code;
      tables_.any_surviving[len] = 1;
    }
    return d;
  }

  const DiscreteChangeModel& model_;
  const StoppingRule& rule_;
  const ChangeTimePrior* prior_;
  Tables tables_;
  std::vector<std::size_t> prefix_;
};

std::vector<std::size_t> decode_digits(std::size_t code, std::size_t length,
                                       std::size_t n_symbols) {
  std::vector<std::size_t> digits(length);
  for (std::size_t i = 0; i < length; ++i) {
    digits[length - 1 - i] = code % n_symbols;
    code /= n_symbols;
  }
  return digits;
}

}  // namespace

std::size_t DiscreteChangeModel::n_paths() const {
  return checked_pow(n_symbols(), horizon);
}

void DiscreteChangeModel::validate() const {
  if (horizon < 1) throw SpecValidationError("horizon must be >= 1");
  if (alphabet.empty()) throw SpecValidationError("alphabet must be nonempty");
  for (std::size_t i = 0; i < alphabet.size(); ++i)
    for (std::size_t j = i + 1; j < alphabet.size(); ++j)
      if (alphabet[i] == alphabet[j])
        throw SpecValidationError("alphabet symbols must be unique");
  check_distribution(pre_dist, n_symbols(), "pre_dist");
  check_distribution(post_dist, n_symbols(), "post_dist");
  if (n_paths() > kMaxEnumerationPaths)
    throw SpecValidationError(
        "alphabet^horizon exceeds the exact enumeration limit (2^20 paths)");
}

double DiscreteChangeModel::pre_prefix_prob(std::size_t code,
                                            std::size_t length) const {
  return prefix_prob(pre_dist, n_symbols(), code, length);
}

double DiscreteChangeModel::post_prefix_prob(std::size_t code,
                                             std::size_t length) const {
  return prefix_prob(post_dist, n_symbols(), code, length);
}

ChangeTimePrior ChangeTimePrior::history_independent(std::vector<double> varpi) {
  ChangeTimePrior prior;
  prior.p_tables.assign(varpi.size(), {});
  prior.varpi = std::move(varpi);
  return prior;
}

ChangeTimePrior ChangeTimePrior::delta(std::size_t t, std::size_t horizon) {
  std::vector<double> varpi(horizon + 1, 0.0);
  if (t > horizon)
    throw SpecValidationError("delta prior time must be within the horizon");
  varpi[t] = 1.0;
  return history_independent(std::move(varpi));
}

ChangeTimePrior ChangeTimePrior::geometric(double decay, std::size_t horizon) {
  if (!(decay > 0.0) || !(decay < 1.0))
    throw SpecValidationError("geometric prior decay must be in (0, 1)");
  std::vector<double> varpi(horizon + 1);
  double sum = 0.0;
  for (std::size_t t = 0; t <= horizon; ++t) {
    varpi[t] = (1.0 - decay) * std::pow(decay, static_cast<double>(t));
    sum += varpi[t];
  }
  for (double& w : varpi) w /= sum;
  return history_independent(std::move(varpi));
}

void ChangeTimePrior::validate(const DiscreteChangeModel& model) const {
  const std::size_t n = model.horizon + 1;
  if (varpi.size() != n)
    throw SpecValidationError("varpi must have horizon+1 entries (t = 0..horizon)");
  double sum = 0.0;
  for (double w : varpi) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw SpecValidationError("varpi entries must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTol)
    throw SpecValidationError("change-time weights varpi must sum to 1");
  if (p_tables.size() != n)
    throw SpecValidationError("p must have horizon+1 entries (t = 0..horizon)");
  const std::size_t n_sym = model.n_symbols();
  for (std::size_t t = 0; t < n; ++t) {
    const auto& table = p_tables[t];
    if (table.empty()) continue;  // identically 1
    const std::size_t expect = checked_pow(n_sym, t);
    if (table.size() != expect)
      throw SpecValidationError("p table at t=" + std::to_string(t) +
                                " must have alphabet^t entries");
    for (double v : table)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw SpecValidationError("p values must be >= 0");
    if (varpi[t] > 0.0) {
      double mean = 0.0;
      for (std::size_t code = 0; code < table.size(); ++code)
        mean += model.pre_prefix_prob(code, t) * table[code];
      if (std::abs(mean - 1.0) > kSumTol)
        throw SpecValidationError(
            "p_t must have mean 1 under the pre-change law (violated at t=" +
            std::to_string(t) + ")");
    }
  }
}

double ChangeTimePrior::p_value(std::size_t t, std::size_t prefix_code) const {
  const auto& table = p_tables[t];
  return table.empty() ? 1.0 : table[prefix_code];
}

StoppingRule fixed_time_rule(std::size_t t) {
  return {[t](std::span<const std::size_t> prefix) { return prefix.size() >= t; },
          "fixed-time(" + std::to_string(t) + ")"};
}

StoppingRule first_symbol_rule(std::size_t symbol_index) {
  return {[symbol_index](std::span<const std::size_t> prefix) {
            return !prefix.empty() && prefix.back() == symbol_index;
          },
          "first-symbol(#" + std::to_string(symbol_index) + ")"};
}

StoppingRule likelihood_ratio_rule(double c, const DiscreteChangeModel& model) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw SpecValidationError("likelihood ratio threshold c must be >= 0");
  const std::vector<double> pre = model.pre_dist;
  const std::vector<double> post = model.post_dist;
  return {[c, pre, post](std::span<const std::size_t> prefix) {
            if (prefix.empty()) return false;
            double lr = 1.0;
            for (std::size_t s : prefix) {
              if (pre[s] == 0.0)
                lr = post[s] == 0.0 ? lr : std::numeric_limits<double>::infinity();
              else
                lr *= post[s] / pre[s];
            }
            return lr >= c;
          },
          "threshold-on-likelihood-ratio(" + std::to_string(c) + ")"};
}

StoppingRule prefix_table_rule(
    std::vector<std::vector<std::size_t>> stop_prefixes) {
  auto table = std::make_shared<std::vector<std::vector<std::size_t>>>(
      std::move(stop_prefixes));
  std::sort(table->begin(), table->end());
  return {[table](std::span<const std::size_t> prefix) {
            return std::binary_search(
                table->begin(), table->end(),
                std::vector<std::size_t>(prefix.begin(), prefix.end()));
          },
          "prefix-table(" + std::to_string(table->size()) + " entries)"};
}

double randomized_expectation(const DiscreteChangeModel& model,
                              const ChangeTimePrior& prior,
                              const PathFunctional& functional) {
  model.validate();
  prior.validate(model);

  const std::size_t n_sym = model.n_symbols();
  std::vector<std::size_t> path(model.horizon, 0);

  // suffix: post-change continuation of the functional past depth `from`
  std::function<double(std::size_t, std::size_t, double)> suffix =
      [&](std::size_t t, std::size_t depth, double post_p) -> double {
    if (depth == model.horizon) {
      const double x = functional(t, path);
      if (!(x >= 0.0))
        throw std::invalid_argument("functional must be nonnegative");
      return post_p * x;
    }
    double total = 0.0;
    for (std::size_t s = 0; s < n_sym; ++s) {
      path[depth] = s;
      total += suffix(t, depth + 1, post_p * model.post_dist[s]);
    }
    return total;
  };

  std::function<double(std::size_t, std::size_t, std::size_t, double)> prefix =
      [&](std::size_t t, std::size_t depth, std::size_t code,
          double pre_p) -> double {
    if (depth == t) return pre_p * prior.p_value(t, code) * suffix(t, depth, 1.0);
    double total = 0.0;
    for (std::size_t s = 0; s < n_sym; ++s) {
      path[depth] = s;
      total += prefix(t, depth + 1, code * n_sym + s, pre_p * model.pre_dist[s]);
    }
    return total;
  };

  double total = 0.0;
  for (std::size_t t = 0; t <= model.horizon; ++t)
    if (prior.varpi[t] > 0.0) total += prior.varpi[t] * prefix(t, 0, 0, 1.0);
  return total;
}

MeasureReport measure_j(const DiscreteChangeModel& model,
                        const ChangeTimePrior& prior,
                        const StoppingRule& rule) {
  model.validate();
  prior.validate(model);
  const Tables tables = Enumerator(model, rule, &prior).run();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t <= model.horizon; ++t) {
    num += prior.varpi[t] * tables.weighted_delay[t];
    den += prior.varpi[t] * tables.weighted_mass[t];
  }
  if (!(den > 0.0))
    throw UndefinedMeasureError(
        "measure undefined: the rule never stops after the change time "
        "(P[T > tau] = 0)");
  MeasureReport report;
  report.value = num / den;
  report.cap_error_pre = tables.cap_pre;
  report.cap_error_post = tables.cap_post;
  return report;
}

MeasureReport measure_shiryaev(const DiscreteChangeModel& model,
                               std::vector<double> varpi,
                               const StoppingRule& rule) {
  return measure_j(model, ChangeTimePrior::history_independent(std::move(varpi)),
                   rule);
}

MeasureReport measure_pollak(const DiscreteChangeModel& model,
                             const StoppingRule& rule) {
  model.validate();
  const Tables tables = Enumerator(model, rule, nullptr).run();
  MeasureReport report;
  report.cap_error_pre = tables.cap_pre;
  report.cap_error_post = tables.cap_post;
  bool found = false;
  for (std::size_t t = 0; t <= model.horizon; ++t) {
    if (!(tables.pre_mass[t] > 0.0)) continue;  // P[T > t] = 0: skipped
    const double value = tables.pre_delay[t] / tables.pre_mass[t];
    if (!found || value > report.value) {
      report.value = value;
      report.arg_t = t;
      found = true;
    }
  }
  if (!found)
    throw UndefinedMeasureError(
        "measure undefined: the rule stops immediately at every history");
  return report;
}

MeasureReport measure_extended_lorden(const DiscreteChangeModel& model,
                                      const StoppingRule& rule,
                                      std::span<const std::size_t> times) {
  model.validate();
  if (times.empty())
    throw std::invalid_argument("the set of admissible change times is empty");
  for (std::size_t t : times)
    if (t > model.horizon)
      throw std::invalid_argument("admissible change times must be <= horizon");
  const Tables tables = Enumerator(model, rule, nullptr).run();
  MeasureReport report;
  report.cap_error_pre = tables.cap_pre;
  report.cap_error_post = tables.cap_post;
  report.value = 0.0;  // the delay is surely 0 when nothing survives
  bool found = false;
  for (std::size_t t : times) {
    if (!tables.any_surviving[t]) continue;
    if (!found || tables.max_delay[t] > report.value) {
      report.value = tables.max_delay[t];
      report.arg_t = t;
      report.arg_prefix =
          decode_digits(tables.argmax_code[t], t, model.n_symbols());
      found = true;
    }
  }
  return report;
}

MeasureReport measure_lorden(const DiscreteChangeModel& model,
                             const StoppingRule& rule) {
  std::vector<std::size_t> all(model.horizon + 1);
  for (std::size_t t = 0; t <= model.horizon; ++t) all[t] = t;
  return measure_extended_lorden(model, rule, all);
}

RatioResult max_ratio(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("vectors must be nonempty and of equal length");
  RatioResult best;
  bool any = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] >= 0.0) || !(b[i] >= 0.0))
      throw std::invalid_argument("vectors must be nonnegative");
    double ratio;
    if (b[i] == 0.0) {
      if (a[i] == 0.0)
        ratio = 0.0;  // 0/0 counts as 0
      else
        throw std::domain_error("ratio diverges at index " + std::to_string(i) +
                                " (positive numerator over zero denominator)");
    } else {
      ratio = a[i] / b[i];
    }
    if (!any || ratio > best.value) {
      best.value = ratio;
      best.arg_index = i;
      any = true;
    }
  }
  return best;
}

std::string decode_prefix(const DiscreteChangeModel& model, std::size_t code,
                          std::size_t length) {
  const auto digits = decode_digits(code, length, model.n_symbols());
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) out += '|';
    out += model.alphabet[digits[i]];
  }
  return out;
}

// ---- JSON document ----

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end())
    throw SpecValidationError(std::string("missing required field '") + key + "'");
  return *it;
}

std::vector<double> number_array(const json& j, const char* name) {
  if (!j.is_array())
    throw SpecValidationError(std::string(name) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number())
      throw SpecValidationError(std::string(name) + " must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

std::size_t symbol_index(const DiscreteChangeModel& model,
                         const std::string& name) {
  for (std::size_t i = 0; i < model.alphabet.size(); ++i)
    if (model.alphabet[i] == name) return i;
  throw SpecValidationError("unknown alphabet symbol '" + name + "'");
}

StoppingRule parse_rule(const json& j, const DiscreteChangeModel& model) {
  if (!j.is_object()) throw SpecValidationError("rule must be an object");
  const std::string kind = require_field(j, "kind").get<std::string>();
  if (kind == "fixed-time")
    return fixed_time_rule(require_field(j, "time").get<std::size_t>());
  if (kind == "first-symbol")
    return first_symbol_rule(
        symbol_index(model, require_field(j, "symbol").get<std::string>()));
  if (kind == "threshold-on-likelihood-ratio")
    return likelihood_ratio_rule(require_field(j, "c").get<double>(), model);
  if (kind == "prefix-table") {
    const json& rows = require_field(j, "stop_prefixes");
    if (!rows.is_array())
      throw SpecValidationError("stop_prefixes must be an array of prefixes");
    std::vector<std::vector<std::size_t>> prefixes;
    for (const auto& row : rows) {
      if (!row.is_array())
        throw SpecValidationError("each stop prefix must be an array of symbols");
      std::vector<std::size_t> prefix;
      for (const auto& sym : row)
        prefix.push_back(symbol_index(model, sym.get<std::string>()));
      if (prefix.size() > model.horizon)
        throw SpecValidationError("stop prefixes must not exceed the horizon");
      prefixes.push_back(std::move(prefix));
    }
    return prefix_table_rule(std::move(prefixes));
  }
  throw SpecValidationError("unknown rule kind '" + kind + "'");
}

std::vector<double> parse_varpi(const json& j, std::size_t horizon) {
  if (!j.is_object()) throw SpecValidationError("varpi must be an object");
  const std::string kind = require_field(j, "kind").get<std::string>();
  if (kind == "uniform") {
    return std::vector<double>(horizon + 1, 1.0 / static_cast<double>(horizon + 1));
  }
  if (kind == "delta")
    return ChangeTimePrior::delta(require_field(j, "time").get<std::size_t>(),
                                  horizon)
        .varpi;
  if (kind == "geometric")
    return ChangeTimePrior::geometric(require_field(j, "decay").get<double>(),
                                      horizon)
        .varpi;
  if (kind == "explicit") return number_array(require_field(j, "weights"), "varpi weights");
  throw SpecValidationError("unknown varpi kind '" + kind + "'");
}

std::vector<std::vector<double>> parse_p_tables(const json& j,
                                                std::size_t horizon) {
  std::vector<std::vector<double>> tables(horizon + 1);
  if (!j.is_object()) throw SpecValidationError("p must be an object");
  const std::string kind = require_field(j, "kind").get<std::string>();
  if (kind == "ones") return tables;
  if (kind != "tables") throw SpecValidationError("unknown p kind '" + kind + "'");
  const json& entries = require_field(j, "tables");
  if (!entries.is_object())
    throw SpecValidationError("p tables must be keyed by the change time t");
  for (const auto& [key, value] : entries.items()) {
    std::size_t t = 0;
    try {
      t = static_cast<std::size_t>(std::stoul(key));
    } catch (...) {
      throw SpecValidationError("p table key '" + key + "' is not a time");
    }
    if (t > horizon)
      throw SpecValidationError("p table time " + key + " exceeds the horizon");
    tables[t] = number_array(value, ("p table at t=" + key).c_str());
  }
  return tables;
}

}  // namespace

FrameworkProblem parse_problem_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecValidationError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw SpecValidationError("the problem document must be a JSON object");

  FrameworkProblem problem;
  const json& alphabet = require_field(j, "alphabet");
  if (!alphabet.is_array())
    throw SpecValidationError("alphabet must be an array of symbol names");
  for (const auto& sym : alphabet) {
    if (!sym.is_string())
      throw SpecValidationError("alphabet symbols must be strings");
    problem.model.alphabet.push_back(sym.get<std::string>());
  }
  problem.model.horizon = require_field(j, "horizon").get<std::size_t>();
  problem.model.pre_dist = number_array(require_field(j, "pre_dist"), "pre_dist");
  problem.model.post_dist =
      number_array(require_field(j, "post_dist"), "post_dist");
  problem.model.validate();

  problem.rule = parse_rule(require_field(j, "rule"), problem.model);

  ChangeTimePrior prior;
  prior.varpi = j.contains("varpi")
                    ? parse_varpi(j["varpi"], problem.model.horizon)
                    : parse_varpi(json{{"kind", "uniform"}}, problem.model.horizon);
  prior.p_tables = j.contains("p")
                       ? parse_p_tables(j["p"], problem.model.horizon)
                       : std::vector<std::vector<double>>(problem.model.horizon + 1);
  prior.validate(problem.model);
  problem.prior = std::move(prior);

  if (j.contains("el_times")) {
    const json& times = j["el_times"];
    if (!times.is_array() || times.empty())
      throw SpecValidationError("el_times must be a nonempty array of times");
    for (const auto& t : times) {
      if (!t.is_number_unsigned())
        throw SpecValidationError("el_times entries must be nonnegative integers");
      const auto value = t.get<std::size_t>();
      if (value > problem.model.horizon)
        throw SpecValidationError("el_times entries must be <= horizon");
      problem.el_times.push_back(value);
    }
  } else {
    problem.el_times.resize(problem.model.horizon + 1);
    for (std::size_t t = 0; t <= problem.model.horizon; ++t)
      problem.el_times[t] = t;
  }
  return problem;
}

}  // namespace ecusum::framework
