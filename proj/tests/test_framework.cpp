#include "ecusum/framework.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace ecusum::framework;

namespace {

DiscreteChangeModel bernoulli_model(std::size_t horizon, double pre_p1,
                                    double post_p1) {
  DiscreteChangeModel model;
  model.horizon = horizon;
  model.alphabet = {"0", "1"};
  model.pre_dist = {1.0 - pre_p1, pre_p1};
  model.post_dist = {1.0 - post_p1, post_p1};
  return model;
}

// Stopping length of a full sequence under the rule, horizon-capped. The
// independent oracle used below; walks prefixes in order.
std::size_t stop_length(const DiscreteChangeModel& model,
                        const StoppingRule& rule,
                        const std::vector<std::size_t>& path) {
  for (std::size_t len = 0; len < model.horizon; ++len)
    if (rule.stops_at(std::span<const std::size_t>(path.data(), len))) return len;
  return model.horizon;
}

// All length-n paths over the model alphabet, in lexicographic order.
std::vector<std::vector<std::size_t>> all_paths(std::size_t n_symbols,
                                                std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path(n, 0);
  while (true) {
    out.push_back(path);
    std::size_t i = n;
    while (i > 0) {
      if (++path[i - 1] < n_symbols) break;
      path[i - 1] = 0;
      --i;
    }
    if (i == 0) break;
  }
  return out;
}

// True when the rule has not stopped at any prefix of the given history,
// the history itself included.
bool survives(const StoppingRule& rule, const std::vector<std::size_t>& prefix) {
  for (std::size_t len = 0; len <= prefix.size(); ++len)
    if (rule.stops_at(std::span<const std::size_t>(prefix.data(), len)))
      return false;
  return true;
}

double path_prob(const std::vector<double>& pre, const std::vector<double>& post,
                 const std::vector<std::size_t>& path, std::size_t change_at) {
  double prob = 1.0;
  for (std::size_t i = 0; i < path.size(); ++i)
    prob *= i < change_at ? pre[path[i]] : post[path[i]];
  return prob;
}

// Brute-force change-time expectation: sum over (t, full path) of
// varpi_t * p_t(prefix) * P[pre up to t, post after] * X(t, path).
double brute_force_expectation(const DiscreteChangeModel& model,
                               const ChangeTimePrior& prior,
                               const PathFunctional& functional) {
  double total = 0.0;
  for (std::size_t t = 0; t <= model.horizon; ++t) {
    if (prior.varpi[t] == 0.0) continue;
    for (const auto& path : all_paths(model.n_symbols(), model.horizon)) {
      std::size_t prefix_code = 0;
      for (std::size_t i = 0; i < t; ++i)
        prefix_code = prefix_code * model.n_symbols() + path[i];
      total += prior.varpi[t] * prior.p_value(t, prefix_code) *
               path_prob(model.pre_dist, model.post_dist, path, t) *
               functional(t, path);
    }
  }
  return total;
}

// Independent conditional-delay oracle: E_post[(T - t)^+ | prefix] by direct
// suffix enumeration, for a surviving prefix of length t.
double delay_given_prefix(const DiscreteChangeModel& model,
                          const StoppingRule& rule,
                          const std::vector<std::size_t>& prefix) {
  const std::size_t t = prefix.size();
  double total = 0.0;
  for (const auto& suffix : all_paths(model.n_symbols(), model.horizon - t)) {
    std::vector<std::size_t> full = prefix;
    full.insert(full.end(), suffix.begin(), suffix.end());
    double prob = 1.0;
    for (std::size_t s : suffix) prob *= model.post_dist[s];
    const std::size_t stop = stop_length(model, rule, full);
    total += prob * static_cast<double>(stop > t ? stop - t : 0);
  }
  return total;
}

PathFunctional delay_functional(const DiscreteChangeModel& model,
                                const StoppingRule& rule) {
  return [&model, &rule](std::size_t t, std::span<const std::size_t> path) {
    const std::size_t stop =
        stop_length(model, rule, std::vector<std::size_t>(path.begin(), path.end()));
    return static_cast<double>(stop > t ? stop - t : 0);
  };
}

PathFunctional survival_functional(const DiscreteChangeModel& model,
                                   const StoppingRule& rule) {
  return [&model, &rule](std::size_t t, std::span<const std::size_t> path) {
    const std::size_t stop =
        stop_length(model, rule, std::vector<std::size_t>(path.begin(), path.end()));
    return stop > t ? 1.0 : 0.0;
  };
}

}  // namespace

// ---- model and prior validation ----

TEST(ModelValidation, NamedInvariants) {
  DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  EXPECT_NO_THROW(model.validate());

  DiscreteChangeModel bad_sum = model;
  bad_sum.pre_dist = {0.5, 0.4};
  EXPECT_THROW(bad_sum.validate(), SpecValidationError);

  DiscreteChangeModel negative = model;
  negative.post_dist = {1.2, -0.2};
  EXPECT_THROW(negative.validate(), SpecValidationError);

  DiscreteChangeModel huge = model;
  huge.horizon = 21;  // 2^21 paths exceeds the enumeration cap
  EXPECT_THROW(huge.validate(), SpecValidationError);

  DiscreteChangeModel dup = model;
  dup.alphabet = {"a", "a"};
  EXPECT_THROW(dup.validate(), SpecValidationError);
}

TEST(PriorValidation, NamedInvariants) {
  const DiscreteChangeModel model = bernoulli_model(2, 0.25, 0.75);

  ChangeTimePrior ok = ChangeTimePrior::history_independent({0.5, 0.25, 0.25});
  EXPECT_NO_THROW(ok.validate(model));

  ChangeTimePrior bad_sum = ChangeTimePrior::history_independent({0.5, 0.25, 0.3});
  EXPECT_THROW(bad_sum.validate(model), SpecValidationError);

  ChangeTimePrior wrong_len = ChangeTimePrior::history_independent({1.0});
  EXPECT_THROW(wrong_len.validate(model), SpecValidationError);

  // p table whose pre-change mean is not 1
  ChangeTimePrior tilted = ok;
  tilted.p_tables[1] = {2.0, 2.0};
  EXPECT_THROW(tilted.validate(model), SpecValidationError);

  // correctly tilted: 0.75 * 0.8 + 0.25 * 1.6 = 1
  tilted.p_tables[1] = {0.8, 1.6};
  EXPECT_NO_THROW(tilted.validate(model));

  ChangeTimePrior wrong_table = ok;
  wrong_table.p_tables[1] = {1.0};
  EXPECT_THROW(wrong_table.validate(model), SpecValidationError);
}

TEST(PriorFactories, GeometricSumsToOne) {
  const ChangeTimePrior prior = ChangeTimePrior::geometric(0.5, 6);
  double sum = 0.0;
  for (double w : prior.varpi) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_GT(prior.varpi[0], prior.varpi[1]);
}

// ---- randomized expectation ----

TEST(RandomizedExpectation, UnitFunctionalIsNormalized) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.25, 0.75);
  const PathFunctional one = [](std::size_t, std::span<const std::size_t>) {
    return 1.0;
  };
  const std::vector<ChangeTimePrior> priors = {
      ChangeTimePrior::delta(0, 4), ChangeTimePrior::delta(4, 4),
      ChangeTimePrior::geometric(0.3, 4),
      ChangeTimePrior::history_independent({0.2, 0.2, 0.2, 0.2, 0.2})};
  for (const auto& prior : priors)
    EXPECT_NEAR(randomized_expectation(model, prior, one), 1.0, 1e-12);

  // also with a genuinely history-dependent tilt
  ChangeTimePrior tilted = ChangeTimePrior::history_independent({0.5, 0.5, 0, 0, 0});
  tilted.p_tables[1] = {0.8, 1.6};
  EXPECT_NEAR(randomized_expectation(model, tilted, one), 1.0, 1e-12);
}

TEST(RandomizedExpectation, DeterministicChangeTimePicksT) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.25, 0.75);
  const PathFunctional time_itself =
      [](std::size_t t, std::span<const std::size_t>) {
        return static_cast<double>(t);
      };
  for (std::size_t k : {0u, 2u, 4u})
    EXPECT_NEAR(randomized_expectation(model, ChangeTimePrior::delta(k, 4),
                                       time_itself),
                static_cast<double>(k), 1e-13);
}

TEST(RandomizedExpectation, MatchesBruteForceEnumeration) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const StoppingRule rule = first_symbol_rule(1);
  const ChangeTimePrior prior = ChangeTimePrior::geometric(0.5, 3);
  const PathFunctional delay = delay_functional(model, rule);
  EXPECT_NEAR(randomized_expectation(model, prior, delay),
              brute_force_expectation(model, prior, delay), 1e-13);
}

TEST(RandomizedExpectation, RejectsNegativeFunctional) {
  const DiscreteChangeModel model = bernoulli_model(2, 0.25, 0.75);
  const PathFunctional negative = [](std::size_t, std::span<const std::size_t>) {
    return -1.0;
  };
  EXPECT_THROW(randomized_expectation(model, ChangeTimePrior::delta(0, 2), negative),
               std::invalid_argument);
}

// ---- conditional delay measure for a given prior ----

TEST(MeasureJ, FixedTimeRuleDeterministicPrior) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const MeasureReport r =
      measure_j(model, ChangeTimePrior::delta(0, 3), fixed_time_rule(2));
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_EQ(r.cap_error_pre, 0.0);  // the rule always stops by itself
}

TEST(MeasureJ, UndefinedWhenRuleNeverOutlivesTheChange) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  EXPECT_THROW(
      measure_j(model, ChangeTimePrior::delta(3, 3), fixed_time_rule(2)),
      UndefinedMeasureError);
}

TEST(MeasureJ, MatchesRandomizedExpectationRatio) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.3, 0.8);
  const StoppingRule rule = first_symbol_rule(1);
  ChangeTimePrior prior = ChangeTimePrior::history_independent({0.3, 0.4, 0.3, 0.0});
  // history-dependent tilt at t = 1 with pre-change mean 0.7*p0 + 0.3*p1 = 1
  const double p0 = 0.8 / 0.7;
  prior.p_tables[1] = {p0, (1.0 - 0.7 * p0) / 0.3};
  ASSERT_NO_THROW(prior.validate(model));

  const double num =
      randomized_expectation(model, prior, delay_functional(model, rule));
  const double den =
      randomized_expectation(model, prior, survival_functional(model, rule));
  const MeasureReport r = measure_j(model, prior, rule);
  EXPECT_NEAR(r.value, num / den, 1e-12);
}

TEST(MeasureShiryaev, DeltaPriorGivesPostChangeMeanStop) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.25, 0.75);
  const StoppingRule rule = first_symbol_rule(1);
  const MeasureReport r = measure_shiryaev(model, {1.0, 0.0, 0.0, 0.0, 0.0}, rule);
  EXPECT_NEAR(r.value, delay_given_prefix(model, rule, {}), 1e-13);
}

TEST(MeasureShiryaev, IsDefinitionallyMeasureJWithUnitTilt) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.25, 0.75);
  const StoppingRule rule = first_symbol_rule(1);
  const std::vector<double> varpi =
      ChangeTimePrior::geometric(0.4, 4).varpi;
  const MeasureReport a = measure_shiryaev(model, varpi, rule);
  const MeasureReport b =
      measure_j(model, ChangeTimePrior::history_independent(varpi), rule);
  EXPECT_EQ(a.value, b.value);
}

TEST(MeasureShiryaev, MemorylessRuleStaysBelowMeanFirstHit) {
  // Long horizon so the cap contributes < 1e-6.
  const DiscreteChangeModel model = bernoulli_model(11, 0.25, 0.75);
  const MeasureReport r = measure_shiryaev(
      model, ChangeTimePrior::geometric(0.5, 11).varpi, first_symbol_rule(1));
  EXPECT_LE(r.value, 4.0 / 3.0 + 1e-12);
  EXPECT_GE(r.value, 4.0 / 3.0 - 1e-4);
  EXPECT_LT(r.cap_error_post, 1e-6);
}

// ---- worst-case measures ----

TEST(MeasurePollak, FixedTimeRule) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const MeasureReport r = measure_pollak(model, fixed_time_rule(2));
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  ASSERT_TRUE(r.arg_t.has_value());
  EXPECT_EQ(*r.arg_t, 0u);
}

TEST(MeasurePollak, MemorylessRuleAttainsGeometricMean) {
  const DiscreteChangeModel model = bernoulli_model(8, 0.25, 0.75);
  const MeasureReport r = measure_pollak(model, first_symbol_rule(1));
  const double capped = (1.0 - std::pow(0.25, 8)) / 0.75;
  EXPECT_NEAR(r.value, capped, 1e-12);
  EXPECT_NEAR(r.value, 4.0 / 3.0, 1e-4);
}

TEST(MeasurePollak, UndefinedForImmediateStop) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  EXPECT_THROW(measure_pollak(model, fixed_time_rule(0)), UndefinedMeasureError);
}

TEST(MeasureLorden, FixedTimeRule) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const MeasureReport r = measure_lorden(model, fixed_time_rule(2));
  EXPECT_DOUBLE_EQ(r.value, 2.0);
  EXPECT_EQ(*r.arg_t, 0u);
  EXPECT_TRUE(r.arg_prefix->empty());
}

TEST(MeasureLorden, ImmediateStopHasZeroDelay) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const MeasureReport r = measure_lorden(model, fixed_time_rule(0));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_FALSE(r.arg_t.has_value());
}

TEST(MeasureLorden, MatchesSwappedExhaustiveSearch) {
  // Same double maximum computed in the opposite order (histories outer,
  // change time inner), with the conditional delays from the independent
  // suffix-enumeration oracle.
  const DiscreteChangeModel model = bernoulli_model(5, 0.3, 0.8);
  const StoppingRule rule = likelihood_ratio_rule(4.0, model);
  const MeasureReport r = measure_lorden(model, rule);

  double best = 0.0;
  for (std::size_t t = 0; t <= model.horizon; ++t) {
    for (const auto& prefix : all_paths(model.n_symbols(), t)) {
      double pre_prob = 1.0;
      for (std::size_t s : prefix) pre_prob *= model.pre_dist[s];
      if (pre_prob <= 0.0) continue;
      if (!survives(rule, prefix)) continue;
      best = std::max(best, delay_given_prefix(model, rule, prefix));
    }
  }
  EXPECT_NEAR(r.value, best, 1e-12);
}

TEST(MeasureExtendedLorden, RestrictionsBehave) {
  const DiscreteChangeModel model = bernoulli_model(5, 0.25, 0.75);
  const StoppingRule rule = first_symbol_rule(1);

  std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
  const MeasureReport full = measure_extended_lorden(model, rule, all);
  const MeasureReport lorden = measure_lorden(model, rule);
  EXPECT_EQ(full.value, lorden.value);

  const std::size_t just_zero[] = {0};
  const MeasureReport at_zero = measure_extended_lorden(model, rule, just_zero);
  EXPECT_NEAR(at_zero.value, delay_given_prefix(model, rule, {}), 1e-13);

  const std::size_t pair[] = {0, 2};
  const MeasureReport two = measure_extended_lorden(model, rule, pair);
  EXPECT_LE(two.value, lorden.value + 1e-15);

  EXPECT_THROW(measure_extended_lorden(model, rule, {}), std::invalid_argument);
  const std::size_t beyond[] = {7};
  EXPECT_THROW(measure_extended_lorden(model, rule, beyond), std::invalid_argument);
}

TEST(Measures, CapErrorsAreTheNoStopProbabilities) {
  const DiscreteChangeModel model = bernoulli_model(3, 0.25, 0.75);
  const MeasureReport r = measure_pollak(model, first_symbol_rule(1));
  EXPECT_NEAR(r.cap_error_pre, std::pow(0.75, 3), 1e-15);
  EXPECT_NEAR(r.cap_error_post, std::pow(0.25, 3), 1e-15);
}

TEST(Measures, OrderingChainOnRandomInstances) {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  int evaluated = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t horizon = 3 + rep % 4;
    const DiscreteChangeModel model =
        bernoulli_model(horizon, unif(rng), unif(rng));
    StoppingRule rule;
    switch (rep % 3) {
      case 0:
        rule = first_symbol_rule(rng() % 2);
        break;
      case 1:
        rule = fixed_time_rule(1 + rng() % horizon);
        break;
      default:
        rule = likelihood_ratio_rule(1.0 + unif(rng) * 4.0, model);
        break;
    }
    std::vector<double> varpi(horizon + 1);
    double sum = 0.0;
    for (double& w : varpi) sum += (w = unif(rng));
    for (double& w : varpi) w /= sum;

    double js = 0.0;
    try {
      js = measure_shiryaev(model, varpi, rule).value;
    } catch (const UndefinedMeasureError&) {
      continue;
    }
    const double jp = measure_pollak(model, rule).value;
    const double jl = measure_lorden(model, rule).value;
    const double slack = 1e-12 * std::max(1.0, jl);
    EXPECT_LE(js, jp + slack) << "rep=" << rep;
    EXPECT_LE(jp, jl + slack) << "rep=" << rep;
    ++evaluated;
  }
  EXPECT_GE(evaluated, 8);
}

TEST(Measures, LordenSupremumAttainedByConcentratedPrior) {
  const DiscreteChangeModel model = bernoulli_model(5, 0.3, 0.8);
  const StoppingRule rule = likelihood_ratio_rule(4.0, model);
  const MeasureReport lorden = measure_lorden(model, rule);
  ASSERT_TRUE(lorden.arg_t.has_value());

  const std::size_t t_star = *lorden.arg_t;
  std::size_t code = 0;
  for (std::size_t s : *lorden.arg_prefix) code = code * model.n_symbols() + s;

  ChangeTimePrior prior = ChangeTimePrior::delta(t_star, model.horizon);
  std::vector<double> table(1, 1.0);
  if (t_star > 0) {
    table.assign(std::size_t(1) << t_star, 0.0);
    table[code] = 1.0 / model.pre_prefix_prob(code, t_star);
  }
  prior.p_tables[t_star] = table;
  ASSERT_NO_THROW(prior.validate(model));

  const MeasureReport concentrated = measure_j(model, prior, rule);
  EXPECT_NEAR(concentrated.value, lorden.value, 1e-9);
}

// ---- the weighted-ratio supremum ----

TEST(MaxRatio, ExamplesAndConventions) {
  const double ones[] = {1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(max_ratio(ones, ones).value, 1.0);

  const double a[] = {1.0, 2.0, 3.0};
  const RatioResult r = max_ratio(a, ones);
  EXPECT_DOUBLE_EQ(r.value, 3.0);
  EXPECT_EQ(r.arg_index, 2u);

  const double zeros[] = {0.0, 0.0};
  const double denom[] = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(max_ratio(zeros, denom).value, 0.0);  // 0/0 counts as 0

  const double diverging[] = {1.0, 0.0};
  EXPECT_THROW(max_ratio(diverging, zeros), std::domain_error);

  const double negative[] = {-1.0, 0.0};
  EXPECT_THROW(max_ratio(negative, denom), std::invalid_argument);
  EXPECT_THROW(max_ratio(a, denom), std::invalid_argument);  // length mismatch
}

TEST(MaxRatio, DominatesEveryWeightingAndIsAttainedAtAVertex) {
  std::mt19937_64 rng(314);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = unif(rng);
    for (auto& x : b) x = 0.05 + unif(rng);
    const RatioResult best = max_ratio(a, b);

    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> w(6);
      double sum = 0.0;
      for (auto& x : w) sum += (x = unif(rng));
      double num = 0.0, den = 0.0;
      for (int i = 0; i < 6; ++i) {
        num += w[i] / sum * a[i];
        den += w[i] / sum * b[i];
      }
      ASSERT_LE(num / den, best.value + 1e-12);
    }
    // the one-hot weighting at the argmax attains the supremum exactly
    EXPECT_EQ(a[best.arg_index] / b[best.arg_index], best.value);
  }
}

// ---- problem documents ----

namespace {

const char* kBernoulliDoc = R"({
  "alphabet": ["0", "1"],
  "horizon": 8,
  "pre_dist": [0.75, 0.25],
  "post_dist": [0.25, 0.75],
  "rule": {"kind": "first-symbol", "symbol": "1"},
  "varpi": {"kind": "geometric", "decay": 0.5}
})";

}  // namespace

TEST(ProblemDocument, ParsesAndEvaluates) {
  const FrameworkProblem problem = parse_problem_json(kBernoulliDoc);
  EXPECT_EQ(problem.model.horizon, 8u);
  EXPECT_EQ(problem.el_times.size(), 9u);
  const MeasureReport jp = measure_pollak(problem.model, problem.rule);
  EXPECT_NEAR(jp.value, 4.0 / 3.0, 1e-4);
}

TEST(ProblemDocument, LikelihoodRatioRule) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.75, 0.25);
  // post/pre per symbol: "0" -> 3, "1" -> 1/3
  const StoppingRule rule = likelihood_ratio_rule(3.0, model);
  const std::size_t zero[] = {0};
  const std::size_t one[] = {1};
  const std::size_t one_zero[] = {1, 0};
  const std::size_t one_zero_zero[] = {1, 0, 0};
  EXPECT_FALSE(rule.stops_at({}));
  EXPECT_TRUE(rule.stops_at(zero));
  EXPECT_FALSE(rule.stops_at(one));
  EXPECT_FALSE(rule.stops_at(one_zero));
  EXPECT_TRUE(rule.stops_at(one_zero_zero));
}

TEST(ProblemDocument, PrefixTableRule) {
  const char* doc = R"({
    "alphabet": ["a", "b"],
    "horizon": 3,
    "pre_dist": [0.5, 0.5],
    "post_dist": [0.5, 0.5],
    "rule": {"kind": "prefix-table", "stop_prefixes": [["a"], ["b", "b"]]}
  })";
  const FrameworkProblem problem = parse_problem_json(doc);
  const std::size_t a[] = {0};
  const std::size_t b[] = {1};
  const std::size_t bb[] = {1, 1};
  EXPECT_TRUE(problem.rule.stops_at(a));
  EXPECT_FALSE(problem.rule.stops_at(b));
  EXPECT_TRUE(problem.rule.stops_at(bb));
}

TEST(ProblemDocument, ValidationNamesTheViolatedInvariant) {
  const auto expect_error = [](const std::string& doc, const char* needle) {
    try {
      parse_problem_json(doc);
      FAIL() << "expected rejection mentioning '" << needle << "'";
    } catch (const SpecValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
          << "actual: " << e.what();
    }
  };

  expect_error(R"({"alphabet": ["0","1"], "horizon": 2,
                   "pre_dist": [0.7, 0.2], "post_dist": [0.25, 0.75],
                   "rule": {"kind": "first-symbol", "symbol": "1"}})",
               "sum to 1");
  expect_error(R"({"alphabet": ["0","1"], "horizon": 2,
                   "pre_dist": [0.75, 0.25], "post_dist": [0.25, 0.75],
                   "rule": {"kind": "first-symbol", "symbol": "1"},
                   "varpi": {"kind": "explicit", "weights": [0.5, 0.2, 0.2]}})",
               "varpi must sum to 1");
  expect_error(R"({"alphabet": ["0","1"], "horizon": 2,
                   "pre_dist": [0.75, 0.25], "post_dist": [0.25, 0.75],
                   "rule": {"kind": "nope"}})",
               "unknown rule kind");
  expect_error(R"({"alphabet": ["0","1"], "horizon": 2,
                   "pre_dist": [0.75, 0.25], "post_dist": [0.25, 0.75],
                   "rule": {"kind": "first-symbol", "symbol": "2"}})",
               "unknown alphabet symbol");
  expect_error(R"({"alphabet": ["0","1"], "horizon": 2,
                   "pre_dist": [0.75, 0.25], "post_dist": [0.25, 0.75],
                   "rule": {"kind": "first-symbol", "symbol": "1"},
                   "el_times": [5]})",
               "el_times");
  expect_error(R"({"horizon": 2, "pre_dist": [1.0], "post_dist": [1.0],
                   "rule": {"kind": "fixed-time", "time": 1}})",
               "missing required field 'alphabet'");
  expect_error("{ not json", "invalid JSON");
}

TEST(ProblemDocument, DecodePrefix) {
  const DiscreteChangeModel model = bernoulli_model(4, 0.25, 0.75);
  EXPECT_EQ(decode_prefix(model, 0, 0), "");
  EXPECT_EQ(decode_prefix(model, 5, 3), "1|0|1");
}
