#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nicherec/choice.hpp"

namespace nicherec {

namespace detail {

inline void require_prior(double p) {
  if (!(p > 0.0 && p < 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("prior p must lie in (0,1)");
  }
}

inline void require_discount(double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("discount delta must lie in [0,1)");
  }
}

}  // namespace detail

// Sequential-test constants for the two-point niche model. rho1 is the
// per-period probability a high-valuation user picks the niche slot of a
// diverse recommendation, rho2 the same for a low-valuation user.
//
// For small p, rho1 saturates to 1.0 in double precision (1 - rho1 ~
// e^{-(1-p)/p}); the log fields are computed in stable form and stay exact,
// and every downstream test uses them rather than 1 - rho1 itself.
struct Constants {
  double p = 0.0;
  double v_pop = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double log_rho1 = 0.0;
  double log1m_rho1 = 0.0;  // ln(1 - rho1), stable for tiny 1 - rho1
  double log_rho2 = 0.0;
  double log1m_rho2 = 0.0;
  double log_rho_ratio = 0.0;   // ln(rho1/rho2) > 0
  double log_fail_ratio = 0.0;  // ln((1-rho2)/(1-rho1)) > 0
  double c = 0.0;               // log_fail_ratio / (log_rho_ratio + log_fail_ratio)
  double m0 = 0.0;              // log_fail_ratio / log_rho_ratio
};

inline Constants build_constants(double p, double v_pop) {
  detail::require_prior(p);
  if (!std::isfinite(v_pop)) throw std::invalid_argument("v_pop must be finite");
  Constants k;
  k.p = p;
  k.v_pop = v_pop;
  const double h = (1.0 - p) / p;          // high niche valuation
  const double w = 1.0 + std::exp(v_pop);  // 1 + e^{V_P}
  // rho1 = e^h / (w + e^h), written so e^h never overflows.
  const double we_mh = w * std::exp(-h);
  k.rho1 = 1.0 / (1.0 + we_mh);
  k.log_rho1 = -std::log1p(we_mh);
  k.log1m_rho1 = std::log(w) - h - std::log1p(we_mh);
  k.rho2 = std::exp(-1.0) / (w + std::exp(-1.0));
  k.log_rho2 = std::log(k.rho2);
  k.log1m_rho2 = std::log1p(-k.rho2);
  k.log_rho_ratio = k.log_rho1 - k.log_rho2;
  k.log_fail_ratio = k.log1m_rho2 - k.log1m_rho1;
  k.c = k.log_fail_ratio / (k.log_rho_ratio + k.log_fail_ratio);
  k.m0 = k.log_fail_ratio / k.log_rho_ratio;
  return k;
}

// Discounted totals together with their (1-delta)-scaled per-period values.
// Per-period values are computed first; totals divide by 1-delta, which keeps
// delta -> 1 limits free of catastrophic cancellation.
struct ClosedFormMetrics {
  double eng = 0.0;
  double util = 0.0;
  double per_period_eng = 0.0;
  double per_period_util = 0.0;
};

inline ClosedFormMetrics from_per_period(double eng_pp, double util_pp, double delta) {
  return {eng_pp / (1.0 - delta), util_pp / (1.0 - delta), eng_pp, util_pp};
}

// Always-popular policy: stationary {P,P} from t = 0.
inline ClosedFormMetrics closed_forms_app(double v_pop, double delta) {
  detail::require_discount(delta);
  const UserProfile profile{v_pop, 0.0};
  return from_per_period(engagement_probability(both_popular(), profile),
                         expected_max_utility(both_popular(), profile), delta);
}

inline double theorem_rho(double v_pop) {
  // Equals rho2: multiply numerator and denominator of rho2 by e.
  return 1.0 / (1.0 + std::exp(1.0) + std::exp(v_pop + 1.0));
}

// p -> 0 limit of the posterior-switching policy's engagement and utility.
// The 1/(1-delta) utility term is the vanishing mass of high-valuation users
// whose per-period utility diverges like (1-p)/p.
inline ClosedFormMetrics closed_forms_pear_limit(double v_pop, double delta) {
  detail::require_discount(delta);
  const UserProfile low{v_pop, -1.0};
  const double rho = theorem_rho(v_pop);
  const double beta2 = engagement_probability(diverse(), low);
  const double psi2 = expected_max_utility(diverse(), low);
  const double lambda = engagement_probability(both_popular(), low);
  const double big_lambda = expected_max_utility(both_popular(), low);
  const double denom = 1.0 - delta * rho;
  const double commit_weight = delta * (1.0 - rho) / denom;
  const double eng_pp = (1.0 - delta) * beta2 / denom + lambda * commit_weight;
  const double util_pp = 1.0 + (1.0 - delta) * psi2 / denom + big_lambda * commit_weight;
  return from_per_period(eng_pp, util_pp, delta);
}

// Clairvoyant oracle: recommends the preferred type from t = 0. Per-period
// value is the two-point mixture of homogeneous-set utilities.
inline double util_oracle_per_period(double p, double v_pop) {
  detail::require_prior(p);
  const double high = (1.0 - p) / p;
  const double u_high = expected_max_utility(both_niche(), UserProfile{v_pop, high});
  const double u_low = expected_max_utility(both_popular(), UserProfile{v_pop, -1.0});
  return p * u_high + (1.0 - p) * u_low;
}

inline double util_oracle(double p, double v_pop, double delta) {
  detail::require_discount(delta);
  return util_oracle_per_period(p, v_pop) / (1.0 - delta);
}

// p -> 0 limit: p * ln(1 + 2 e^{(1-p)/p}) -> 1.
inline double util_oracle_limit_per_period(double v_pop) {
  return 1.0 + expected_max_utility(both_popular(), UserProfile{v_pop, 0.0});
}

inline double util_oracle_limit(double v_pop, double delta) {
  detail::require_discount(delta);
  return util_oracle_limit_per_period(v_pop) / (1.0 - delta);
}

struct MisalignmentRow {
  double delta = 0.0;
  double d_eng_pct = 0.0;   // 100 * (Eng(PEAR)/Eng(APP) - 1)
  double d_util_pct = 0.0;  // 100 * (Util(PEAR)/Util(APP) - 1)
};

struct MisalignmentReport {
  std::vector<MisalignmentRow> rows;
  // delta -> 1 limit of the utility ratio: 1 + 1/ln(1 + 2 e^{V_P}).
  double util_ratio_limit = 0.0;
};

inline MisalignmentReport misalignment_report(double v_pop, std::span<const double> deltas) {
  MisalignmentReport report;
  for (double delta : deltas) {
    const auto app = closed_forms_app(v_pop, delta);
    const auto pear = closed_forms_pear_limit(v_pop, delta);
    report.rows.push_back({delta,
                           100.0 * (pear.per_period_eng / app.per_period_eng - 1.0),
                           100.0 * (pear.per_period_util / app.per_period_util - 1.0)});
  }
  report.util_ratio_limit =
      1.0 + 1.0 / expected_max_utility(both_popular(), UserProfile{v_pop, 0.0});
  return report;
}

// ---------------------------------------------------------------------------
// First-passage law of the walk with steps +up (prob rho) / -down (else),
// absorbed the first time S*up - F*down < 0 over success/failure counts
// (S, F). Generic x uses up = 1-x, down = x; the PEAR walk uses the exact
// log-ratio pair so its sign test is bitwise identical to the posterior test.
// ---------------------------------------------------------------------------

struct WalkGeometry {
  double up = 0.0;
  double down = 0.0;
};

inline WalkGeometry geometry_from_x(double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("walk parameter x must lie in (0,1)");
  return {1.0 - x, x};
}

inline WalkGeometry geometry_from_constants(const Constants& k) {
  return {k.log_rho_ratio, k.log_fail_ratio};
}

// The shared sign test: true once the walk has crossed below zero.
inline bool walk_below_zero(const WalkGeometry& g, std::int64_t successes,
                            std::int64_t failures) {
  return static_cast<double>(successes) * g.up < static_cast<double>(failures) * g.down;
}

// First n (1-based) at which the walk driven by `successes` crosses below
// zero; nullopt if it survives the whole sequence.
inline std::optional<std::int64_t> walk_first_passage_time(const WalkGeometry& g,
                                                           std::span<const bool> successes) {
  std::int64_t s = 0, f = 0;
  for (std::size_t i = 0; i < successes.size(); ++i) {
    successes[i] ? ++s : ++f;
    if (walk_below_zero(g, s, f)) return static_cast<std::int64_t>(i) + 1;
  }
  return std::nullopt;
}

struct FirstPassagePmf {
  std::vector<double> pmf;  // pmf[k-1] = P(N = k), k = 1..k_max
  double tail_mass = 0.0;   // P(N > k_max)
  double rho = 0.0;
  WalkGeometry geometry;
  bool truncated_warning = false;  // tail_mass > 1e-9
};

namespace detail {

// Exact dynamic program over alive states keyed by the failure count F
// (S = n - F). A success can never absorb; a failure absorbs iff the sign
// test fires for (S, F+1).
class FirstPassageDp {
 public:
  FirstPassageDp(double rho, WalkGeometry g) : rho_(rho), g_(g), alive_{1.0} {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
    if (!(g.up > 0.0) || !(g.down > 0.0)) {
      throw std::invalid_argument("walk geometry must have positive step weights");
    }
  }

  // Advances one step; returns P(N = n) for the new step index.
  double step() {
    ++n_;
    const std::int64_t prev_n = n_ - 1;
    next_.assign(alive_.size() + 1, 0.0);
    double absorbed = 0.0;
    tail_ = 0.0;
    for (std::size_t f = 0; f < alive_.size(); ++f) {
      const double prob = alive_[f];
      if (prob == 0.0) continue;
      const std::int64_t s = prev_n - static_cast<std::int64_t>(f);
      next_[f] += prob * rho_;  // success: stays alive
      const double fail_mass = prob * (1.0 - rho_);
      if (fail_mass > 0.0) {
        if (walk_below_zero(g_, s, static_cast<std::int64_t>(f) + 1)) {
          absorbed += fail_mass;
        } else {
          next_[f + 1] += fail_mass;
        }
      }
    }
    while (!next_.empty() && next_.back() == 0.0) next_.pop_back();
    alive_.swap(next_);
    for (double v : alive_) tail_ += v;
    ops_ += alive_.size() + 1;
    return absorbed;
  }

  double tail_mass() const { return tail_; }
  std::int64_t steps() const { return n_; }
  std::uint64_t state_ops() const { return ops_; }

 private:
  double rho_;
  WalkGeometry g_;
  std::vector<double> alive_;
  std::vector<double> next_;
  double tail_ = 1.0;
  std::int64_t n_ = 0;
  std::uint64_t ops_ = 0;
};

}  // namespace detail

inline FirstPassagePmf first_passage_pmf(double rho, WalkGeometry g, int k_max) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  detail::FirstPassageDp dp(rho, g);
  FirstPassagePmf out;
  out.rho = rho;
  out.geometry = g;
  out.pmf.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) out.pmf.push_back(dp.step());
  out.tail_mass = dp.tail_mass();
  out.truncated_warning = out.tail_mass > 1e-9;
  return out;
}

inline FirstPassagePmf first_passage_pmf(double rho, double x, int k_max) {
  return first_passage_pmf(rho, geometry_from_x(x), k_max);
}

struct GValue {
  double value = 0.0;             // overestimates g by at most truncation_error
  double truncation_error = 0.0;  // certified: delta^{k+1} * remaining mass
  int k_used = 0;
};

// g(delta, rho, x) = E[1 - delta^{N(rho,x)}], from the exact first-passage
// DP, truncated once delta^{k+1} * tail < tol. Not Monte Carlo: the result
// carries a certified truncation bound.
inline GValue g_value(double delta, double rho, WalkGeometry g, double tol) {
  detail::require_discount(delta);
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  constexpr std::int64_t kMaxSteps = 2'000'000;
  constexpr std::uint64_t kMaxStateOps = 2'000'000'000;
  detail::FirstPassageDp dp(rho, g);
  double discounted_sum = 0.0;  // sum_k delta^k P(N = k)
  double discount = 1.0;
  while (true) {
    const double bound = discount * delta * dp.tail_mass();
    if (bound < tol) {
      return {1.0 - discounted_sum, bound, static_cast<int>(dp.steps())};
    }
    if (dp.steps() >= kMaxSteps || dp.state_ops() >= kMaxStateOps) {
      throw std::runtime_error("g_value: truncation did not converge within the hard cap");
    }
    const double pk = dp.step();
    discount *= delta;
    discounted_sum += discount * pk;
  }
}

inline GValue g_value(double delta, double rho, double x, double tol) {
  return g_value(delta, rho, geometry_from_x(x), tol);
}

// Oracle-relaxed engagement upper bound for the diverse-then-optimal policy:
// one diverse period, then the engagement of a clairvoyant oracle. Used to
// show APP is engagement-optimal as p -> 0 (and that it can stop being so at
// larger p).
inline double eng_do_upper_bound(double p, double v_pop, double delta) {
  detail::require_prior(p);
  detail::require_discount(delta);
  const double high = (1.0 - p) / p;
  const UserProfile low_user{v_pop, -1.0};
  const UserProfile high_user{v_pop, high};
  const double first = (1.0 - p) * engagement_probability(diverse(), low_user) +
                       p * engagement_probability(diverse(), high_user);
  const double oracle_pp = p * engagement_probability(both_niche(), high_user) +
                           (1.0 - p) * engagement_probability(both_popular(), low_user);
  return first + delta / (1.0 - delta) * oracle_pp;
}

// Finite-p engagement/utility of the posterior-switching policy, assembled
// from the first-passage law exactly as in its proof: explore-phase payoff
// weighted by g, absorbed-phase payoff by 1 - g, mixed over user types.
struct PearFinitePMetrics {
  ClosedFormMetrics metrics;
  double eng_error = 0.0;  // certified propagation of the g truncation bounds
  double util_error = 0.0;
};

inline PearFinitePMetrics pear_metrics_finite_p(double p, double v_pop, double delta,
                                                double tol = 1e-12) {
  const Constants k = build_constants(p, v_pop);
  const WalkGeometry g = geometry_from_constants(k);
  const GValue g1 = g_value(delta, k.rho1, g, tol);
  const GValue g2 = g_value(delta, k.rho2, g, tol);

  const double high = (1.0 - p) / p;
  const UserProfile low_user{v_pop, -1.0};
  const UserProfile high_user{v_pop, high};
  const double beta1 = engagement_probability(diverse(), high_user);
  const double beta2 = engagement_probability(diverse(), low_user);
  const double psi1 = expected_max_utility(diverse(), high_user);
  const double psi2 = expected_max_utility(diverse(), low_user);
  const double lambda = engagement_probability(both_popular(), low_user);
  const double big_lambda = expected_max_utility(both_popular(), low_user);

  const double eng_pp = p * (beta1 * g1.value + lambda * (1.0 - g1.value)) +
                        (1.0 - p) * (beta2 * g2.value + lambda * (1.0 - g2.value));
  const double util_pp = p * (psi1 * g1.value + big_lambda * (1.0 - g1.value)) +
                         (1.0 - p) * (psi2 * g2.value + big_lambda * (1.0 - g2.value));

  PearFinitePMetrics out;
  out.metrics = from_per_period(eng_pp, util_pp, delta);
  out.eng_error = (p * std::abs(beta1 - lambda) * g1.truncation_error +
                   (1.0 - p) * std::abs(beta2 - lambda) * g2.truncation_error) /
                  (1.0 - delta);
  out.util_error = (p * std::abs(psi1 - big_lambda) * g1.truncation_error +
                    (1.0 - p) * std::abs(psi2 - big_lambda) * g2.truncation_error) /
                   (1.0 - delta);
  return out;
}

}  // namespace nicherec
