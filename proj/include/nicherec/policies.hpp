#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>

#include "nicherec/analytics.hpp"
#include "nicherec/choice.hpp"

namespace nicherec {

// Posterior belief that the user's niche valuation is the high atom, after S
// niche choices and F non-niche choices (popular or outside) in the diverse
// phase. Log-odds form: the literal product form overflows once rho1
// approaches 1 with gap e^{-(1-p)/p}.
inline double pear_posterior(std::int64_t successes, std::int64_t failures, double p,
                             const Constants& k) {
  detail::require_prior(p);
  if (successes < 0 || failures < 0) {
    throw std::invalid_argument("pear_posterior: counts must be nonnegative");
  }
  if (k.p != p) {
    throw std::invalid_argument("pear_posterior: constants built for a different prior");
  }
  // L = ln((1-p)/p) - S ln(rho1/rho2) + F ln((1-rho2)/(1-rho1)); p_t = 1/(1+e^L).
  const double log_odds_against =
      std::log((1.0 - p) / p) - static_cast<double>(successes) * k.log_rho_ratio +
      static_cast<double>(failures) * k.log_fail_ratio;
  return 1.0 / (1.0 + std::exp(log_odds_against));
}

// Always-popular policy: {P,P} regardless of history.
class AppPolicy {
 public:
  RecommendationSet recommend() const { return both_popular(); }
  void observe(ChosenAlt) {}
  bool absorbed() const { return true; }
  bool absorbed_if_always(ChosenAlt) const { return true; }
};

// Clairvoyant oracle: fixes the preferred type at t = 0 from the realized
// profile. Ties resolve to popular (probability zero under both families).
class OraclePolicy {
 public:
  explicit OraclePolicy(const UserProfile& profile)
      : preferred_(profile.v_niche > profile.v_pop ? ItemType::Niche : ItemType::Popular) {}

  RecommendationSet recommend() const { return homogeneous(preferred_); }
  void observe(ChosenAlt) {}
  bool absorbed() const { return true; }
  bool absorbed_if_always(ChosenAlt) const { return true; }
  ItemType preferred() const { return preferred_; }

 private:
  ItemType preferred_;
};

// Posterior-switching policy: diverse {P,N} while the posterior on the high
// niche atom stays >= the prior, then {P,P} forever. The switch test is the
// exact sign test S*ln(rho1/rho2) < F*ln((1-rho2)/(1-rho1)) shared with the
// analytics walk, so switch times match the first-passage law bitwise.
class PearPolicy {
 public:
  explicit PearPolicy(const Constants& constants)
      : constants_(constants), geometry_(geometry_from_constants(constants)) {}

  RecommendationSet recommend() const {
    return switched_ ? both_popular() : diverse();
  }

  // Outcome of the recommendation produced by the last recommend() call.
  // In the diverse phase slot2 is the niche item; outside counts as failure.
  void observe(ChosenAlt chosen) {
    if (switched_) return;  // absorbed: counters and posterior frozen
    if (chosen == ChosenAlt::Slot2) {
      ++successes_;
    } else {
      ++failures_;
    }
    if (walk_below_zero(geometry_, successes_, failures_)) switched_ = true;
  }

  bool absorbed() const { return switched_; }

  // A niche success strictly raises the posterior, so an endless run of them
  // can never trigger the switch.
  bool absorbed_if_always(ChosenAlt alt) const {
    return switched_ || alt == ChosenAlt::Slot2;
  }

  bool switched() const { return switched_; }
  std::int64_t successes() const { return successes_; }
  std::int64_t failures() const { return failures_; }
  double posterior() const {
    return pear_posterior(successes_, failures_, constants_.p, constants_);
  }
  const Constants& constants() const { return constants_; }

 private:
  Constants constants_;
  WalkGeometry geometry_;
  std::int64_t successes_ = 0;
  std::int64_t failures_ = 0;
  bool switched_ = false;
};

// Explore-then-commit policy: diverse for explore_len periods, counting which
// type is chosen (outside counts for neither), then the majority type forever
// (ties commit popular).
class DicePolicy {
 public:
  explicit DicePolicy(std::int64_t explore_len) : explore_len_(explore_len) {
    if (explore_len < 0) throw std::invalid_argument("explore_len must be >= 0");
    if (explore_len == 0) commit();
  }

  RecommendationSet recommend() const {
    return committed_ ? homogeneous(*committed_) : diverse();
  }

  void observe(ChosenAlt chosen) {
    if (committed_) return;
    if (chosen == ChosenAlt::Slot1) {
      ++count_pop_;
    } else if (chosen == ChosenAlt::Slot2) {
      ++count_niche_;
    }
    ++t_;
    if (t_ >= explore_len_) commit();
  }

  bool absorbed() const { return committed_.has_value(); }
  bool absorbed_if_always(ChosenAlt) const { return committed_.has_value(); }

  std::optional<ItemType> committed() const { return committed_; }
  std::int64_t count_pop() const { return count_pop_; }
  std::int64_t count_niche() const { return count_niche_; }
  std::int64_t explore_len() const { return explore_len_; }

 private:
  void commit() {
    committed_ = count_pop_ >= count_niche_ ? ItemType::Popular : ItemType::Niche;
  }

  std::int64_t explore_len_;
  std::int64_t t_ = 0;
  std::int64_t count_pop_ = 0;
  std::int64_t count_niche_ = 0;
  std::optional<ItemType> committed_;
};

using Policy = std::variant<AppPolicy, PearPolicy, DicePolicy, OraclePolicy>;

inline RecommendationSet policy_recommend(const Policy& policy) {
  return std::visit([](const auto& p) { return p.recommend(); }, policy);
}
inline void policy_observe(Policy& policy, ChosenAlt chosen) {
  std::visit([chosen](auto& p) { p.observe(chosen); }, policy);
}
inline bool policy_absorbed(const Policy& policy) {
  return std::visit([](const auto& p) { return p.absorbed(); }, policy);
}
inline bool policy_absorbed_if_always(const Policy& policy, ChosenAlt alt) {
  return std::visit([alt](const auto& p) { return p.absorbed_if_always(alt); }, policy);
}

}  // namespace nicherec
