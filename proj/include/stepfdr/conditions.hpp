#pragma once

// Empirical checks of self-consistency, dependency control and the
// monotonicity / PRDS hypotheses behind them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stepfdr/core.hpp"
#include "stepfdr/procedures.hpp"
#include "stepfdr/simulation.hpp"

namespace stepfdr {

struct SelfConsistency {
  bool holds = true;
  std::optional<std::size_t> witness;  // a rejected h above its threshold
};

// R is self-consistent iff every h in R has p_h <= alpha pi(h) beta(|R|).
inline SelfConsistency check_self_consistency(const RejectionSet& rejected, const FactorizedThresholds& delta,
                                              const PValueVector& p, const HypothesisSpace& space) {
  check_sizes(p, space);
  const double t = delta.q_threshold(rejected.volume());
  for (std::size_t h : rejected.members()) {
    if (!in_level_set(normalized_pvalue(p[h], space.pi(h)), t)) return {false, h};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Dependency control: E[1{U <= c beta(V)} / V] <= c for every c > 0.

struct DcEstimate {
  double c = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::size_t violations = 0;  // samples with V = 0 and the indicator true
  // Median of batch means with a MAD-based standard error. Unlike the plain
  // SE it stays informative when the summand has infinite variance.
  double median_of_means = 0.0;
  double robust_se = 0.0;

  bool within_bound(double z = 3.0) const { return estimate <= c + z * se; }
  // DC is flagged as violated when the robust estimate clears c by z robust SEs.
  bool violation_flagged(double z = 3.0) const { return median_of_means - c > z * robust_se; }
};

using UvSampler = std::function<std::pair<double, double>(Rng&)>;

inline constexpr std::size_t kDcBatches = 20;

inline std::vector<DcEstimate> dc_estimate(const UvSampler& sampler, const ShapeFunction& beta,
                                           const std::vector<double>& c_grid, std::size_t n, std::uint64_t seed) {
  if (n < kDcBatches) throw std::invalid_argument("dc_estimate: need at least " + std::to_string(kDcBatches) + " samples");
  for (double c : c_grid)
    if (!(c > 0.0)) throw std::invalid_argument("dc_estimate: c values must be positive");

  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_trial_rng(seed, i);
    std::tie(u[i], v[i]) = sampler(rng);
    if (!(v[i] >= 0.0) || std::isnan(u[i])) throw std::runtime_error("dc_estimate: sampler produced an invalid pair");
  }

  std::vector<DcEstimate> out;
  out.reserve(c_grid.size());
  for (double c : c_grid) {
    DcEstimate e;
    e.c = c;
    std::vector<double> terms;
    terms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool hit = u[i] <= c * beta(v[i]);
      if (v[i] == 0.0) {
        if (hit) ++e.violations;
        else terms.push_back(0.0);
        continue;
      }
      terms.push_back(hit ? 1.0 / v[i] : 0.0);
    }
    e.n = terms.size();
    const auto ms = mean_and_se(terms, [](double x) { return x; });
    e.estimate = ms.mean;
    e.se = ms.se;

    const std::size_t batch = terms.size() / kDcBatches;
    if (batch > 0) {
      std::vector<double> means(kDcBatches);
      for (std::size_t b = 0; b < kDcBatches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += terms[i];
        means[b] = s / static_cast<double>(batch);
      }
      auto median = [](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        const std::size_t k = xs.size();
        return k % 2 ? xs[k / 2] : 0.5 * (xs[k / 2 - 1] + xs[k / 2]);
      };
      e.median_of_means = median(means);
      std::vector<double> dev(kDcBatches);
      for (std::size_t b = 0; b < kDcBatches; ++b) dev[b] = std::abs(means[b] - e.median_of_means);
      // 1.4826 MAD estimates the SD of a batch mean; 1.2533 is the
      // asymptotic efficiency loss of the median.
      e.robust_se = 1.2533 * 1.4826 * median(dev) / std::sqrt(static_cast<double>(kDcBatches));
    }
    out.push_back(e);
  }
  return out;
}

// (U, V) = (p_h, |R|) for a true null h under a simulated model.
inline UvSampler procedure_uv_sampler(Procedure procedure, DependenceModel model, std::size_t h,
                                      std::optional<HypothesisSpace> space = std::nullopt) {
  model.validate();
  if (h >= model.m0) throw std::invalid_argument("procedure_uv_sampler: h must index a true null (h < m0)");
  HypothesisSpace sp = space ? *space : HypothesisSpace::standard(model.m);
  return [procedure = std::move(procedure), model, h, sp](Rng& rng) {
    const auto gen = generate_pvalues(model, rng());
    const auto r = procedure(gen.p, sp);
    return std::make_pair(gen.p[h], r.volume());
  };
}

// ---------------------------------------------------------------------------

// Number of random single-coordinate decreases of p that strictly shrink the
// rejection volume.
inline std::size_t monotonicity_probe(const Procedure& procedure, const PValueVector& p,
                                      const HypothesisSpace& space, std::size_t n_perturb, std::uint64_t seed) {
  check_sizes(p, space);
  if (n_perturb == 0) throw std::invalid_argument("monotonicity_probe: n_perturb must be positive");
  if (p.size() == 0) return 0;
  const double base = procedure(p, space).volume();
  std::size_t violations = 0;
  for (std::size_t i = 0; i < n_perturb; ++i) {
    auto rng = make_trial_rng(seed, i);
    const auto h = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(p.size()));
    const double lowered = uniform01(rng) * p[h];
    const double v = procedure(p.with(h, lowered), space).volume();
    if (v < base - kVolumeTol) ++violations;
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Witness curve u -> P(|R| < r | p_h <= u).

struct PrdsPoint {
  double u = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t hits = 0;
};

struct PrdsCurve {
  std::vector<PrdsPoint> points;
  // false when some adjacent pair decreases by more than 3 pooled SEs
  bool nondecreasing_within_noise = true;
};

inline constexpr std::size_t kMinConditioningHits = 100;

inline PrdsCurve prds_curve_estimate(const DependenceModel& model, const Procedure& procedure, std::size_t h,
                                     double r, const std::vector<double>& u_grid, std::size_t n,
                                     std::uint64_t seed,
                                     const std::optional<HypothesisSpace>& space = std::nullopt) {
  model.validate();
  if (h >= model.m) throw std::out_of_range("prds_curve_estimate: hypothesis index out of range");
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0 && u_grid[i] <= 1.0) || (i > 0 && !(u_grid[i] > u_grid[i - 1]))) {
      throw std::invalid_argument("prds_curve_estimate: u grid must be increasing in (0,1]");
    }
  }
  const HypothesisSpace sp = space ? *space : HypothesisSpace::standard(model.m);
  std::vector<std::size_t> hits(u_grid.size(), 0), below(u_grid.size(), 0);
  for (std::size_t t = 0; t < n; ++t) {
    const auto gen = generate_pvalues(model, trial_seed(seed, t));
    const double ph = gen.p[h];
    if (ph > u_grid.back()) continue;
    const bool small = procedure(gen.p, sp).volume() < r - kVolumeTol;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
      if (ph <= u_grid[i]) {
        ++hits[i];
        if (small) ++below[i];
      }
    }
  }
  PrdsCurve curve;
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (hits[i] < kMinConditioningHits) {
      throw std::runtime_error("prds_curve_estimate: only " + std::to_string(hits[i]) +
                               " samples with p_h <= " + format_double(u_grid[i]) + " (need " +
                               std::to_string(kMinConditioningHits) + ")");
    }
    PrdsPoint pt;
    pt.u = u_grid[i];
    pt.hits = hits[i];
    pt.estimate = static_cast<double>(below[i]) / static_cast<double>(hits[i]);
    pt.se = std::sqrt(pt.estimate * (1.0 - pt.estimate) / static_cast<double>(hits[i]));
    curve.points.push_back(pt);
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    const double pooled = std::sqrt(a.se * a.se + b.se * b.se);
    if (a.estimate - b.estimate > 3.0 * pooled) curve.nondecreasing_within_noise = false;
  }
  return curve;
}

}  // namespace stepfdr
