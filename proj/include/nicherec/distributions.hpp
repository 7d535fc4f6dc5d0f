#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include "nicherec/choice.hpp"
#include "nicherec/rng.hpp"

namespace nicherec {

// Niche base-utility families. Both have mean zero.
//
// TwoPoint: P(V = (1-p)/p) = p, P(V = -1) = 1-p.
// Gpd: generalized Pareto with mu = -1, sigma = 1-xi, shape xi in [0,1);
//      xi = 0 is the unit exponential shifted to start at -1.
struct TwoPoint {
  double p = 0.1;
};
struct Gpd {
  double xi = 0.5;
};
using NicheDistribution = std::variant<TwoPoint, Gpd>;

inline void validate_two_point(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("two-point niche distribution requires p in (0,1)");
  }
}

inline void validate_gpd(double xi) {
  if (!(xi >= 0.0 && xi < 1.0)) {
    throw std::invalid_argument("GPD niche distribution requires xi in [0,1)");
  }
}

inline void validate(const NicheDistribution& d) {
  if (const auto* tp = std::get_if<TwoPoint>(&d)) {
    validate_two_point(tp->p);
  } else {
    validate_gpd(std::get<Gpd>(d).xi);
  }
}

inline double two_point_high_value(double p) {
  validate_two_point(p);
  return (1.0 - p) / p;
}

inline double two_point_sample(double p, SplitMix64& rng) {
  validate_two_point(p);
  return rng.next_open01() < p ? (1.0 - p) / p : -1.0;
}

inline double gpd_cdf(double xi, double x) {
  validate_gpd(xi);
  if (!(x >= -1.0)) {
    throw std::domain_error("gpd_cdf: x below support lower endpoint -1");
  }
  if (xi == 0.0) return 1.0 - std::exp(-(x + 1.0));
  return 1.0 - std::pow(1.0 + xi / (1.0 - xi) * (x + 1.0), -1.0 / xi);
}

// Quantile as a function of the survival probability s = 1 - u. Taking s
// directly sidesteps the 1-u cancellation: s is representable down to the
// smallest positive double, which matters for the heavy upper tail.
inline double gpd_quantile_from_survival(double xi, double s) {
  validate_gpd(xi);
  if (xi == 0.0) return -1.0 - std::log(s);
  return -1.0 + (1.0 - xi) / xi * (std::pow(s, -xi) - 1.0);
}

inline double gpd_quantile(double xi, double u) {
  return gpd_quantile_from_survival(xi, 1.0 - u);
}

// Inverse transform with 1-U (not U), so the uniform's lower endpoint is safe.
inline double gpd_sample(double xi, SplitMix64& rng) {
  return gpd_quantile_from_survival(xi, 1.0 - rng.next_open01());
}

inline double niche_sample(const NicheDistribution& d, SplitMix64& rng) {
  if (const auto* tp = std::get_if<TwoPoint>(&d)) {
    return two_point_sample(tp->p, rng);
  }
  return gpd_sample(std::get<Gpd>(d).xi, rng);
}

// Quantile shared by the iid samplers and the stratified engine.
inline double niche_quantile(const NicheDistribution& d, double u) {
  if (const auto* tp = std::get_if<TwoPoint>(&d)) {
    validate_two_point(tp->p);
    return u >= 1.0 - tp->p ? (1.0 - tp->p) / tp->p : -1.0;
  }
  return gpd_quantile(std::get<Gpd>(d).xi, u);
}

}  // namespace nicherec
