#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include "nicherec/analytics.hpp"
#include "nicherec/choice.hpp"
#include "nicherec/distributions.hpp"
#include "nicherec/policies.hpp"
#include "nicherec/rng.hpp"

namespace nicherec {

struct ModelParams {
  double v_pop = 1.0;
  double delta = 0.99;
  NicheDistribution niche = TwoPoint{0.1};
  int slots = 2;  // fixed; kept for the record
};

struct AppSpec {};
struct PearSpec {
  double p = 0.1;
};
struct DiceSpec {
  std::int64_t explore_len = 10;
};
struct OracleSpec {};
using PolicySpec = std::variant<AppSpec, PearSpec, DiceSpec, OracleSpec>;

enum class SimMode { Pathwise, Conditional };

struct SimConfig {
  std::uint64_t episodes = 10000;
  std::uint64_t master_seed = 1;
  SimMode mode = SimMode::Conditional;
  double truncation_epsilon = 1e-8;
  PolicySpec policy = AppSpec{};
  int workers = 1;
  // Stratifies the once-per-user niche draw (exact type allocation for the
  // two-point family, dyadic survival strata for the GPD family). Keeps the
  // estimator unbiased while taming the p -> 0 and heavy-tail variance that
  // would otherwise dominate; disable for plain iid draws.
  bool stratify_niche = true;
};

struct DiscountedMetrics {
  double engagement = 0.0;
  double utility = 0.0;
};

struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

struct MonteCarloResult {
  EstimateWithCI engagement;
  EstimateWithCI utility;
  std::uint64_t episodes = 0;
  std::uint64_t flagged_episodes = 0;
};

inline constexpr std::int64_t kHardHorizonCap = 1'000'000;

// Smallest T with delta^T * bound/(1-delta) < epsilon; the discarded tail of
// the discounted sum is then below epsilon. delta = 0 collapses to a single
// period.
inline std::int64_t truncation_horizon(double delta, double epsilon, double bound_per_period) {
  detail::require_discount(delta);
  if (!(epsilon > 0.0) || !(bound_per_period > 0.0)) {
    throw std::invalid_argument("truncation_horizon: epsilon and bound must be positive");
  }
  if (delta == 0.0) return 1;
  const double scale = bound_per_period / (1.0 - delta);
  auto tail_ok = [&](std::int64_t t) { return std::pow(delta, static_cast<double>(t)) * scale < epsilon; };
  const double target = epsilon / scale;
  std::int64_t t = 1;
  if (target < 1.0) {
    t = static_cast<std::int64_t>(std::ceil(std::log(target) / std::log(delta)));
    t = std::max<std::int64_t>(t, 1);
  }
  while (t > 1 && tail_ok(t - 1)) --t;
  while (!tail_ok(t) && t < (std::int64_t{1} << 62)) ++t;
  return t;
}

// Closed-form value of holding a recommendation fixed from period from_t on:
// delta^{from_t}/(1-delta) times the per-period expectations.
inline DiscountedMetrics tail_completion(const RecommendationSet& rec,
                                         const UserProfile& profile, double delta,
                                         std::int64_t from_t) {
  detail::require_discount(delta);
  if (from_t < 0) throw std::invalid_argument("tail_completion: from_t must be >= 0");
  const double factor = std::pow(delta, static_cast<double>(from_t));
  const double eng_pp = engagement_probability(rec, profile);
  const double util_pp = expected_max_utility(rec, profile);
  return {factor * (eng_pp / (1.0 - delta)), factor * (util_pp / (1.0 - delta))};
}

struct EpisodeResult {
  DiscountedMetrics metrics;
  bool flagged = false;  // horizon cap hit without absorption or epsilon guarantee
};

// Runs episodes of one (params, policy) configuration. Pathwise mode scores
// sampled choices; Conditional mode scores per-period expectations while the
// sampled choice still drives the policy state. Both consume the rng stream
// identically.
class Simulator {
 public:
  Simulator(ModelParams params, PolicySpec spec, SimMode mode, double truncation_epsilon)
      : params_(params), spec_(spec), mode_(mode), epsilon_(truncation_epsilon) {
    validate(params_.niche);
    detail::require_discount(params_.delta);
    if (!std::isfinite(params_.v_pop)) throw std::invalid_argument("v_pop must be finite");
    if (!(epsilon_ > 0.0)) throw std::invalid_argument("truncation_epsilon must be positive");
    if (params_.slots != 2) throw std::invalid_argument("only K = 2 slots supported");
    if (const auto* pear = std::get_if<PearSpec>(&spec_)) {
      pear_constants_ = build_constants(pear->p, params_.v_pop);
    }
  }

  const ModelParams& params() const { return params_; }

  EpisodeResult run_episode(const UserProfile& profile, SplitMix64& rng) const {
    Policy policy = make_policy(profile);
    const double delta = params_.delta;

    // Dominates every recommendation's per-period expected utility (and the
    // engagement bound of 1).
    const RecommendationSet best = homogeneous(
        profile.v_niche > profile.v_pop ? ItemType::Niche : ItemType::Popular);
    const double bound = std::max(1.0, expected_max_utility(best, profile));
    std::int64_t horizon = truncation_horizon(delta, epsilon_, bound);
    const bool capped = horizon > kHardHorizonCap;
    if (capped) horizon = kHardHorizonCap;

    DiscountedMetrics acc{0.0, 0.0};
    double discount = 1.0;  // delta^t
    std::int64_t t = 0;
    while (true) {
      const RecommendationSet rec = policy_recommend(policy);
      if (policy_absorbed(policy)) {
        const DiscountedMetrics tail = tail_completion(rec, profile, delta, t);
        acc.engagement += tail.engagement;
        acc.utility += tail.utility;
        return {acc, false};
      }
      const ChoiceDistribution dist = mnl_choice_probabilities(rec, profile);
      // Stationary-phase detection: if one alternative is certain at double
      // precision and an endless run of it can never change the
      // recommendation, the rest of the episode is a closed-form tail.
      // (Covers the never-switching high-valuation user under PEAR.)
      if (const auto certain = certain_alt(dist);
          certain && policy_absorbed_if_always(policy, *certain)) {
        const DiscountedMetrics tail = tail_completion(rec, profile, delta, t);
        acc.engagement += tail.engagement;
        acc.utility += tail.utility;
        return {acc, false};
      }
      if (t >= horizon) {
        return {acc, capped};
      }
      const ChoiceOutcome outcome = sample_choice(rec, profile, rng);
      if (mode_ == SimMode::Pathwise) {
        acc.engagement += discount * (outcome.chosen != ChosenAlt::Outside ? 1.0 : 0.0);
        acc.utility += discount * outcome.realized_max_utility;
      } else {
        acc.engagement += discount * (1.0 - dist.p_outside);
        acc.utility += discount * expected_max_utility(rec, profile);
      }
      policy_observe(policy, outcome.chosen);
      discount *= delta;
      ++t;
    }
  }

  // Draws the user-level niche valuation from the model, then runs.
  EpisodeResult run_episode(SplitMix64& rng) const {
    const double v_niche = niche_sample(params_.niche, rng);
    return run_episode(UserProfile{params_.v_pop, v_niche}, rng);
  }

 private:
  Policy make_policy(const UserProfile& profile) const {
    if (std::holds_alternative<AppSpec>(spec_)) return AppPolicy{};
    if (std::holds_alternative<OracleSpec>(spec_)) return OraclePolicy{profile};
    if (std::holds_alternative<DiceSpec>(spec_)) {
      return DicePolicy{std::get<DiceSpec>(spec_).explore_len};
    }
    return PearPolicy{pear_constants_};
  }

  static std::optional<ChosenAlt> certain_alt(const ChoiceDistribution& d) {
    if (d.p_slot1 == 1.0) return ChosenAlt::Slot1;
    if (d.p_slot2 == 1.0) return ChosenAlt::Slot2;
    if (d.p_outside == 1.0) return ChosenAlt::Outside;
    return std::nullopt;
  }

  ModelParams params_;
  PolicySpec spec_;
  SimMode mode_;
  double epsilon_;
  Constants pear_constants_;  // valid only for PearSpec
};

inline EpisodeResult simulate_episode(const ModelParams& params, const PolicySpec& spec,
                                      SimMode mode, double truncation_epsilon,
                                      SplitMix64& rng) {
  return Simulator(params, spec, mode, truncation_epsilon).run_episode(rng);
}

namespace detail {

struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

// One stratum of the once-per-user niche draw: a survival-probability
// interval (s_lo, s_hi] with total probability `weight`. Survival intervals
// (rather than CDF intervals) keep the deep GPD tail representable.
struct Stratum {
  double weight = 1.0;
  double s_lo = 0.0;
  double s_hi = 1.0;
  std::uint64_t episodes = 0;
  bool scaled = false;  // accumulate weight*x to keep huge tail values finite
};

inline std::vector<Stratum> build_niche_strata(const NicheDistribution& niche,
                                               std::uint64_t episodes, bool stratify) {
  std::vector<Stratum> strata;
  if (!stratify || episodes < 1024) {
    strata.push_back({1.0, 0.0, 1.0, episodes, false});
    return strata;
  }
  if (const auto* tp = std::get_if<TwoPoint>(&niche)) {
    const double p = tp->p;
    std::uint64_t n_high = static_cast<std::uint64_t>(
        std::llround(p * static_cast<double>(episodes)));
    n_high = std::clamp<std::uint64_t>(n_high, 1, episodes - 1);
    strata.push_back({1.0 - p, p, 1.0, episodes - n_high, false});  // low atom
    strata.push_back({p, 0.0, p, n_high, false});                   // high atom
    return strata;
  }
  // GPD: dyadic survival levels. Level k covers s in (2^{-k-1}, 2^{-k}] with
  // weight 2^{-k-1}; the final cell (0, 2^{-K}] carries the remaining mass.
  // Power-of-two weights make the scaled accumulation exact.
  constexpr std::uint64_t kMinPerStratum = 16;
  const std::uint64_t levels =
      std::min<std::uint64_t>(700, episodes / (4 * kMinPerStratum));
  std::uint64_t assigned = 0;
  std::vector<Stratum> tail;
  for (std::uint64_t k = 1; k <= levels; ++k) {
    const double w = std::ldexp(1.0, -static_cast<int>(k) - 1);
    const bool final_cell = (k == levels);
    const double weight = final_cell ? 2.0 * w : w;  // final cell keeps all deeper mass
    const double s_lo = final_cell ? 0.0 : std::ldexp(1.0, -static_cast<int>(k) - 1);
    const double s_hi = std::ldexp(1.0, -static_cast<int>(k));
    const std::uint64_t n = std::max<std::uint64_t>(
        kMinPerStratum,
        static_cast<std::uint64_t>(std::llround(weight * static_cast<double>(episodes))));
    tail.push_back({weight, s_lo, s_hi, n, true});
    assigned += n;
  }
  if (assigned + kMinPerStratum > episodes) {
    // Degenerate allocation (tiny episode count): fall back to iid.
    strata.clear();
    strata.push_back({1.0, 0.0, 1.0, episodes, false});
    return strata;
  }
  strata.push_back({0.5, 0.5, 1.0, episodes - assigned, false});  // bulk level 0
  strata.insert(strata.end(), tail.begin(), tail.end());
  return strata;
}

}  // namespace detail

// Averages episodes over a stratified partition of the niche draw. Episode i
// always uses the stream (master_seed, i), and aggregation runs in episode
// order on a single thread, so results are bit-identical for any worker
// count. The mean combines strata as mean_0 + sum_k w_k (mean_k - mean_0),
// which is exact when every stratum agrees (zero-variance configurations
// stay bitwise equal to the closed form).
inline MonteCarloResult run_monte_carlo(const ModelParams& params, const SimConfig& config) {
  if (config.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (config.workers < 1) throw std::invalid_argument("workers must be >= 1");
  const Simulator sim(params, config.policy, config.mode, config.truncation_epsilon);
  const auto strata =
      detail::build_niche_strata(params.niche, config.episodes, config.stratify_niche);

  struct PerEpisode {
    double eng;
    double util;
    bool flagged;
  };
  std::vector<PerEpisode> results(config.episodes);

  // stratum_of[i] resolved from contiguous index ranges
  std::vector<std::uint64_t> stratum_start(strata.size() + 1, 0);
  for (std::size_t k = 0; k < strata.size(); ++k) {
    stratum_start[k + 1] = stratum_start[k] + strata[k].episodes;
  }

  auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    std::size_t k = 0;
    for (std::uint64_t i = begin; i < end; ++i) {
      while (i >= stratum_start[k + 1]) ++k;
      const auto& st = strata[k];
      SplitMix64 rng = make_stream(config.master_seed, i);
      const double s = st.s_lo + (st.s_hi - st.s_lo) * rng.next_open01();
      double v_niche;
      if (const auto* tp = std::get_if<TwoPoint>(&params.niche)) {
        v_niche = s <= tp->p ? two_point_high_value(tp->p) : -1.0;
      } else {
        v_niche = gpd_quantile_from_survival(std::get<Gpd>(params.niche).xi, s);
      }
      const EpisodeResult r = sim.run_episode(UserProfile{params.v_pop, v_niche}, rng);
      results[i] = {r.metrics.engagement, r.metrics.utility, r.flagged};
    }
  };

  if (config.workers == 1 || config.episodes < 2048) {
    run_range(0, config.episodes);
  } else {
    const std::uint64_t workers = static_cast<std::uint64_t>(config.workers);
    const std::uint64_t chunk = (config.episodes + workers - 1) / workers;
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min(w * chunk, config.episodes);
      const std::uint64_t end = std::min(begin + chunk, config.episodes);
      threads.emplace_back([&, w, begin, end] {
        try {
          run_range(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Sequential aggregation in episode order.
  std::vector<detail::RunningStats> eng_stats(strata.size());
  std::vector<detail::RunningStats> util_stats(strata.size());
  std::uint64_t flagged = 0;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const auto& st = strata[k];
    for (std::uint64_t i = stratum_start[k]; i < stratum_start[k + 1]; ++i) {
      const double scale = st.scaled ? st.weight : 1.0;
      eng_stats[k].add(scale * results[i].eng);
      util_stats[k].add(scale * results[i].util);
      if (results[i].flagged) ++flagged;
    }
  }

  auto combine = [&](const std::vector<detail::RunningStats>& stats) {
    EstimateWithCI est;
    est.n = config.episodes;
    const double base =
        strata[0].scaled ? stats[0].mean / strata[0].weight : stats[0].mean;
    double mean = base;
    double var_of_mean = 0.0;
    for (std::size_t k = 0; k < strata.size(); ++k) {
      const auto& st = strata[k];
      if (st.episodes == 0) continue;
      const double n_k = static_cast<double>(st.episodes);
      if (k > 0) {
        const double scaled_mean = st.scaled ? stats[k].mean : st.weight * stats[k].mean;
        mean += scaled_mean - st.weight * base;
      }
      const double scaled_var =
          st.scaled ? stats[k].variance() : st.weight * st.weight * stats[k].variance();
      var_of_mean += scaled_var / n_k;
    }
    est.mean = mean;
    est.std_error = std::sqrt(var_of_mean);
    est.ci95_low = mean - 1.959963984540054 * est.std_error;
    est.ci95_high = mean + 1.959963984540054 * est.std_error;
    return est;
  };

  MonteCarloResult out;
  out.engagement = combine(eng_stats);
  out.utility = combine(util_stats);
  out.episodes = config.episodes;
  out.flagged_episodes = flagged;
  return out;
}

}  // namespace nicherec
