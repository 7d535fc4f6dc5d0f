#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nicherec/rng.hpp"

namespace nicherec {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240;

enum class ItemType { Popular, Niche, Outside };

// Which alternative the user picked. Outside is always available but never a
// slot of a recommendation set.
enum class ChosenAlt { Slot1, Slot2, Outside };

// A user's realized base utilities, in nats. v_pop is shared across the
// population, v_niche is drawn once per user from the niche distribution.
struct UserProfile {
  double v_pop = 0.0;
  double v_niche = 0.0;
};

// A pair of recommended item types (K = 2). Slots may repeat a type; the
// outside option is implicit and never occupies a slot.
class RecommendationSet {
 public:
  RecommendationSet(ItemType slot1, ItemType slot2) : slot1_(slot1), slot2_(slot2) {
    if (slot1 == ItemType::Outside || slot2 == ItemType::Outside) {
      throw std::invalid_argument("RecommendationSet: Outside cannot be recommended");
    }
  }

  ItemType slot1() const { return slot1_; }
  ItemType slot2() const { return slot2_; }

  bool operator==(const RecommendationSet&) const = default;

 private:
  ItemType slot1_;
  ItemType slot2_;
};

inline RecommendationSet both_popular() {
  return {ItemType::Popular, ItemType::Popular};
}
inline RecommendationSet both_niche() {
  return {ItemType::Niche, ItemType::Niche};
}
inline RecommendationSet diverse() {
  return {ItemType::Popular, ItemType::Niche};
}
inline RecommendationSet homogeneous(ItemType t) {
  return {t, t};
}

struct ChoiceDistribution {
  double p_slot1 = 0.0;
  double p_slot2 = 0.0;
  double p_outside = 0.0;
};

struct ChoiceOutcome {
  ChosenAlt chosen = ChosenAlt::Outside;
  double realized_max_utility = 0.0;
};

inline double base_utility(ItemType t, const UserProfile& profile) {
  switch (t) {
    case ItemType::Popular: return profile.v_pop;
    case ItemType::Niche: return profile.v_niche;
    case ItemType::Outside: return 0.0;
  }
  return 0.0;
}

inline ItemType chosen_type(const RecommendationSet& rec, ChosenAlt alt) {
  switch (alt) {
    case ChosenAlt::Slot1: return rec.slot1();
    case ChosenAlt::Slot2: return rec.slot2();
    case ChosenAlt::Outside: return ItemType::Outside;
  }
  return ItemType::Outside;
}

namespace detail {

inline void require_finite_profile(const UserProfile& profile) {
  if (!std::isfinite(profile.v_pop) || !std::isfinite(profile.v_niche)) {
    throw std::invalid_argument("UserProfile: base utilities must be finite");
  }
}

// ln(e^a + e^b + e^c) with max subtraction; safe for arguments ~1e3 nats.
inline double log_sum_exp3(double a, double b, double c) {
  const double m = std::max({a, b, c});
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

}  // namespace detail

// Multinomial-logit choice probabilities over {slot1, slot2, outside}. The
// outside option has base utility 0, so the weights are softmax(v1, v2, 0),
// computed in log-domain (v_niche = (1-p)/p reaches ~1e3 nats).
inline ChoiceDistribution mnl_choice_probabilities(const RecommendationSet& rec,
                                                   const UserProfile& profile) {
  detail::require_finite_profile(profile);
  const double v1 = base_utility(rec.slot1(), profile);
  const double v2 = base_utility(rec.slot2(), profile);
  const double lse = detail::log_sum_exp3(0.0, v1, v2);
  ChoiceDistribution d;
  d.p_slot1 = std::exp(v1 - lse);
  d.p_slot2 = std::exp(v2 - lse);
  d.p_outside = std::exp(-lse);
  return d;
}

// Probability the user engages (picks either slot). Shares the computation
// path with mnl_choice_probabilities so engagement + p_outside == 1 exactly.
inline double engagement_probability(const RecommendationSet& rec,
                                     const UserProfile& profile) {
  return 1.0 - mnl_choice_probabilities(rec, profile).p_outside;
}

// E[max utility over slots and outside] = ln(1 + e^{v1} + e^{v2}).
inline double expected_max_utility(const RecommendationSet& rec,
                                   const UserProfile& profile) {
  detail::require_finite_profile(profile);
  return detail::log_sum_exp3(0.0, base_utility(rec.slot1(), profile),
                              base_utility(rec.slot2(), profile));
}

// Zero-mean Gumbel noise: -ln(-ln U) - gamma, scale 1. Mean 0, variance
// pi^2/6. (Location -gamma; the location-gamma variant would have mean
// 2*gamma and break the MNL identities.)
inline double sample_gumbel_zero_mean(SplitMix64& rng) {
  const double u = rng.next_open01();
  return -std::log(-std::log(u)) - kEulerGamma;
}

// Draws one period's choice: independent Gumbel per alternative, argmax of
// realized utility. Direct argmax of v + eps, so extreme v never overflows.
// Floating-point ties resolve to the earliest alternative (slot1 < slot2 <
// outside); under continuous noise they have probability zero.
inline ChoiceOutcome sample_choice(const RecommendationSet& rec,
                                   const UserProfile& profile, SplitMix64& rng) {
  detail::require_finite_profile(profile);
  const double u1 = base_utility(rec.slot1(), profile) + sample_gumbel_zero_mean(rng);
  const double u2 = base_utility(rec.slot2(), profile) + sample_gumbel_zero_mean(rng);
  const double u0 = sample_gumbel_zero_mean(rng);
  ChoiceOutcome out{ChosenAlt::Slot1, u1};
  if (u2 > out.realized_max_utility) out = {ChosenAlt::Slot2, u2};
  if (u0 > out.realized_max_utility) out = {ChosenAlt::Outside, u0};
  return out;
}

}  // namespace nicherec
