#pragma once

// Threshold collections and the multiple testing procedures built on them.
//
// A factorized collection Delta(h, r) = alpha * pi(h) * beta(r) defines level
// sets L(r) = {h : p_h <= Delta(h, r)}. Membership is evaluated on the
// normalized p-value q_h = p_h / pi(h), so L(r) = {h : q_h <= alpha beta(r)} is
// always a prefix of the hypotheses sorted by q.
//
// Step-wise procedures scan the crossing grid: V_k, the cumulative volume of
// the k smallest q (ties broken by smaller Lambda, then index). At V_k the
// test |L(V_k)| >= V_k reduces to q_(k) <= alpha beta(V_k). Under counting
// measure the grid is {1..m} and the classical rank definitions are recovered.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stepfdr/core.hpp"
#include "stepfdr/numeric.hpp"
#include "stepfdr/shape.hpp"

namespace stepfdr {

struct FactorizedThresholds {
  double alpha;
  ShapeFunction beta;

  FactorizedThresholds(double alpha_, ShapeFunction beta_) : alpha(alpha_), beta(std::move(beta_)) {
    if (!(alpha > 0.0) || std::isnan(alpha)) {
      throw std::invalid_argument("FactorizedThresholds: alpha must be positive");
    }
  }

  // Delta(h, r)
  double operator()(const HypothesisSpace& space, std::size_t h, double r) const {
    return alpha * space.pi(h) * beta(r);
  }

  // Bound on q_h for membership in L(r).
  double q_threshold(double r) const {
    if (alpha == kInf) return kInf;
    return alpha * beta(r);
  }
};

inline bool in_level_set(double q, double q_threshold) { return below_threshold(q, q_threshold); }

namespace detail {

inline std::vector<std::size_t> crossing_order(const std::vector<double>& q, const HypothesisSpace& space) {
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (q[a] != q[b]) return q[a] < q[b];
    if (space.lambda(a) != space.lambda(b)) return space.lambda(a) < space.lambda(b);
    return a < b;
  });
  return order;
}

inline RejectionSet level_set_q(const FactorizedThresholds& delta, double r, const std::vector<double>& q,
                                const HypothesisSpace& space) {
  const double t = delta.q_threshold(r);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (in_level_set(q[i], t)) members.push_back(i);
  return RejectionSet(std::move(members), space);
}

// Sorted q, crossing grid V_k and pass flags q_(k) <= alpha beta(V_k).
struct CrossingScan {
  std::vector<double> q;
  std::vector<double> grid;
  std::vector<bool> pass;
};

inline CrossingScan scan(const FactorizedThresholds& delta, const PValueVector& p,
                         const HypothesisSpace& space) {
  CrossingScan s;
  s.q = normalized_pvalues(p, space);
  const auto order = crossing_order(s.q, space);
  s.grid.resize(order.size());
  s.pass.resize(order.size());
  double v = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    v += space.lambda(order[k]);
    s.grid[k] = v;
    s.pass[k] = in_level_set(s.q[order[k]], delta.q_threshold(v));
  }
  return s;
}

}  // namespace detail

// L_Delta(r) = {h : p_h <= alpha pi(h) beta(r)}
inline RejectionSet level_set(const FactorizedThresholds& delta, double r, const PValueVector& p,
                              const HypothesisSpace& space) {
  if (!(r >= 0.0)) throw std::domain_error("level_set: r must be nonnegative");
  return detail::level_set_q(delta, r, normalized_pvalues(p, space), space);
}

// r_hat = max{r >= 0 : |L(r)| >= r}, R = L(r_hat).
inline RejectionSet step_up(const FactorizedThresholds& delta, const PValueVector& p,
                            const HypothesisSpace& space) {
  const auto s = detail::scan(delta, p, space);
  double r_hat = 0.0;
  for (std::size_t k = s.grid.size(); k-- > 0;) {
    if (s.pass[k]) {
      r_hat = s.grid[k];
      break;
    }
  }
  return detail::level_set_q(delta, r_hat, s.q, space);
}

// r_hat = max{r : |L(r')| >= r' for every grid point r' <= r}.
inline RejectionSet step_down(const FactorizedThresholds& delta, const PValueVector& p,
                              const HypothesisSpace& space) {
  const auto s = detail::scan(delta, p, space);
  double r_hat = 0.0;
  for (std::size_t k = 0; k < s.grid.size() && s.pass[k]; ++k) r_hat = s.grid[k];
  return detail::level_set_q(delta, r_hat, s.q, space);
}

// Step-up-down of order lambda in [0, Lambda(H)], evaluated on the crossing
// grid 0 = V_0 < V_1 < ... with lambda moved up to the first grid point at or
// above it. If that point passes, the scan moves right while the crossing test
// keeps passing; otherwise the closest passing point to its left is taken.
// Integer orders under counting measure are unaffected by the snapping.
inline RejectionSet step_up_down(const FactorizedThresholds& delta, double lambda, const PValueVector& p,
                                 const HypothesisSpace& space) {
  if (!(lambda >= 0.0) || lambda > space.total_volume() + kVolumeTol) {
    throw std::invalid_argument("step_up_down: order " + format_double(lambda) + " outside [0, " +
                                format_double(space.total_volume()) + "]");
  }
  const auto s = detail::scan(delta, p, space);
  const std::size_t n = s.grid.size();
  // pivot k names grid point V_k; V_k is s.grid[k - 1]
  std::size_t pivot = 0;
  if (lambda > kVolumeTol) {
    while (pivot + 1 < n && s.grid[pivot] < lambda - kVolumeTol) ++pivot;
    ++pivot;
  }
  double r_hat = 0.0;
  if (pivot == 0 || s.pass[pivot - 1]) {
    std::size_t k = pivot;
    while (k < n && s.pass[k]) ++k;
    r_hat = k == 0 ? 0.0 : s.grid[k - 1];
  } else {
    for (std::size_t k = pivot - 1; k-- > 0;) {
      if (s.pass[k]) {
        r_hat = s.grid[k];
        break;
      }
    }
  }
  return detail::level_set_q(delta, r_hat, s.q, space);
}

// ---------------------------------------------------------------------------
// Rank-based thresholds for step-down procedures under counting measure.

enum class RankKind { bl_rs, df, bl99, holm, bonferroni };

// Priors on {1/k : 1 <= k <= m} for the distribution-free rank step-down:
// uniform, nu(1/k) proportional to k (linear), or to 1/k (inverse).
enum class DfPrior { uniform, linear, inverse };

inline PriorDistribution df_prior(DfPrior kind, std::size_t m) {
  std::vector<double> w(m);
  for (std::size_t k = 1; k <= m; ++k) {
    const double kd = static_cast<double>(k);
    w[k - 1] = kind == DfPrior::uniform ? 1.0 : kind == DfPrior::linear ? kd : 1.0 / kd;
  }
  const char* tag = kind == DfPrior::uniform ? "uniform" : kind == DfPrior::linear ? "linear" : "inverse";
  return reciprocal_support_prior(w, std::string(tag) + "(1/k,k=1.." + std::to_string(m) + ")");
}

struct RankThresholds {
  std::vector<double> t;  // t[i-1] = Delta(i)
  std::string name;

  std::size_t size() const { return t.size(); }
  double operator()(std::size_t i) const { return t.at(i - 1); }
};

namespace detail {

// beta(1/j) for every j = 1..m from a prior supported on {1/k}.
inline std::vector<double> reciprocal_partial_means(const PriorDistribution& nu, std::size_t m) {
  std::vector<CompensatedSum> bucket(m + 2);
  for (std::size_t i = 0; i < nu.support().size(); ++i) {
    const double x = nu.support()[i];
    const double kd = std::round(1.0 / x);
    if (!(kd >= 1.0) || kd > static_cast<double>(m) || std::abs(x - 1.0 / kd) > 1e-12 * x) {
      throw std::invalid_argument("rank thresholds (df): prior support point " + format_double(x) +
                                  " is not of the form 1/k with 1 <= k <= " + std::to_string(m));
    }
    bucket[static_cast<std::size_t>(kd)].add(x * nu.mass()[i]);
  }
  // beta(1/j) = sum over k >= j of (1/k) nu(1/k)
  std::vector<double> out(m + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t j = m; j >= 1; --j) {
    acc.add(bucket[j].value());
    out[j] = acc.value();
  }
  return out;
}

}  // namespace detail

inline RankThresholds make_rank_thresholds(RankKind kind, double alpha, std::size_t m,
                                           const PriorDistribution* df_nu = nullptr) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("rank thresholds: alpha must lie in (0,1)");
  if (m == 0) throw std::invalid_argument("rank thresholds: m must be positive");
  const double md = static_cast<double>(m);
  RankThresholds out;
  out.t.resize(m);
  std::vector<double> beta_inv;
  if (kind == RankKind::df) {
    if (df_nu == nullptr) throw std::invalid_argument("rank thresholds (df): a prior on {1/k} is required");
    beta_inv = detail::reciprocal_partial_means(*df_nu, m);
  }
  for (std::size_t i = 1; i <= m; ++i) {
    const double j = static_cast<double>(m - i + 1);
    double v = 0.0;
    switch (kind) {
      case RankKind::bl_rs: v = alpha * md / (j * j); break;
      case RankKind::df: v = alpha * md / j * beta_inv[m - i + 1]; break;
      case RankKind::bl99: {
        const double x = std::min(1.0, alpha * md / j);
        v = x >= 1.0 ? 1.0 : -std::expm1(std::log1p(-x) / j);
        break;
      }
      case RankKind::holm: v = alpha / j; break;
      case RankKind::bonferroni: v = alpha / md; break;
    }
    out.t[i - 1] = std::clamp(v, 0.0, 1.0);
  }
  switch (kind) {
    case RankKind::bl_rs: out.name = "bl_rs"; break;
    case RankKind::df: out.name = "df:" + df_nu->provenance(); break;
    case RankKind::bl99: out.name = "bl99"; break;
    case RankKind::holm: out.name = "holm"; break;
    case RankKind::bonferroni: out.name = "bonferroni"; break;
  }
  return out;
}

// Rejects the i* smallest p-values, i* = max{i : p_(j) <= t(j) for all j <= i}.
inline RejectionSet rank_step_down(const RankThresholds& t, const PValueVector& p,
                                   const HypothesisSpace& space) {
  check_sizes(p, space);
  if (!space.counting_measure()) {
    throw std::invalid_argument("rank_step_down: requires the counting measure (all lambda = 1)");
  }
  if (t.size() != p.size()) throw std::invalid_argument("rank_step_down: threshold length mismatch");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::size_t accepted = 0;
  while (accepted < order.size() && below_threshold(p[order[accepted]], t.t[accepted])) ++accepted;
  order.resize(accepted);
  return RejectionSet(std::move(order), space);
}

// ---------------------------------------------------------------------------

struct AdaptiveResult {
  RejectionSet rejected;
  RejectionSet first_stage;
  double pihat0;
  double g;  // 1 / pihat0, +inf when pihat0 = 0
};

// Two-stage adaptive step-up: Holm's step-down at level alpha0 estimates
// pi0 by Pi(R0^c); the second stage is the step-up with collection
// alpha1 * pi(h) * G * beta(r), G = 1/pihat0.
inline AdaptiveResult adaptive_two_stage(double alpha0, double alpha1, const ShapeFunction& beta,
                                         const PValueVector& p, const HypothesisSpace& space) {
  if (!(alpha0 > 0.0 && alpha0 < 1.0) || !(alpha1 > 0.0 && alpha1 < 1.0)) {
    throw std::invalid_argument("adaptive_two_stage: alpha0 and alpha1 must lie in (0,1)");
  }
  const auto holm = make_rank_thresholds(RankKind::holm, alpha0, space.size());
  auto first = rank_step_down(holm, p, space);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (!first.contains(i)) kept.push_back(i);
  const double pihat0 = pi_volume(std::span<const std::size_t>(kept), space);
  if (pihat0 <= 0.0) {
    return {RejectionSet::all(space), std::move(first), 0.0, kInf};
  }
  const double g = 1.0 / pihat0;
  auto second = step_up(FactorizedThresholds(alpha1 * g, beta), p, space);
  return {std::move(second), std::move(first), pihat0, g};
}

// ---------------------------------------------------------------------------

using ProcedureFn = std::function<RejectionSet(const PValueVector&, const HypothesisSpace&)>;

struct Procedure {
  std::string name;
  ProcedureFn run;

  RejectionSet operator()(const PValueVector& p, const HypothesisSpace& space) const { return run(p, space); }
};

}  // namespace stepfdr
