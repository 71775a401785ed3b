#pragma once

// Seeded p-value generators and Monte-Carlo error-rate estimation.
//
// Test statistics are Gaussian: Z_h ~ N(0,1) for true nulls and N(mu1,1) for
// false nulls, with one-sided p-values p_h = P(N(0,1) >= Z_h). The first m0
// hypotheses are the true nulls. Every trial draws from its own stream seeded
// by trial_seed(master, trial), so aggregates do not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stepfdr/core.hpp"
#include "stepfdr/numeric.hpp"
#include "stepfdr/procedures.hpp"

namespace stepfdr {

enum class ModelKind { independent, equicorrelated, negative };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::independent: return "independent";
    case ModelKind::equicorrelated: return "equicorrelated";
    case ModelKind::negative: return "negative";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "independent") return ModelKind::independent;
  if (s == "equicorrelated" || s == "equicorrelated_gaussian") return ModelKind::equicorrelated;
  if (s == "negative" || s == "negative_gaussian") return ModelKind::negative;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

struct DependenceModel {
  ModelKind kind = ModelKind::independent;
  std::size_t m = 0;
  std::size_t m0 = 0;
  double rho = 0.0;
  double mu1 = 3.0;

  // Most negative admissible equicorrelation, -1/(m-1).
  static double min_rho(std::size_t m) { return -1.0 / static_cast<double>(m - 1); }

  void validate() const {
    if (m == 0) throw std::invalid_argument("model: m must be positive");
    if (m0 > m) throw std::invalid_argument("model: m0 must not exceed m");
    if (!(mu1 >= 0.0) || !std::isfinite(mu1)) throw std::invalid_argument("model: mu1 must be >= 0");
    switch (kind) {
      case ModelKind::independent: break;
      case ModelKind::equicorrelated:
        if (!(rho >= 0.0 && rho < 1.0)) {
          throw std::invalid_argument("model: equicorrelated rho must lie in [0,1), got " + format_double(rho));
        }
        break;
      case ModelKind::negative:
        if (m < 2) throw std::invalid_argument("model: negative correlation needs m >= 2");
        if (!(rho < 0.0) || rho < min_rho(m) * (1.0 + 1e-12)) {
          throw std::invalid_argument("model: negative rho must lie in [" + format_double(min_rho(m)) +
                                      ", 0), got " + format_double(rho) + " (covariance not PSD)");
        }
        break;
    }
  }

  std::string describe() const {
    std::string s = std::string(to_string(kind)) + "(m=" + std::to_string(m) + ",m0=" + std::to_string(m0);
    if (kind != ModelKind::independent) s += ",rho=" + format_double(rho);
    s += ",mu1=" + format_double(mu1) + ")";
    return s;
  }

  std::vector<bool> null_mask() const {
    std::vector<bool> mask(m, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(m0), true);
    return mask;
  }
};

struct GeneratedPValues {
  PValueVector p;
  std::vector<bool> is_null;
};

// Gaussian statistics for one trial.
inline std::vector<double> generate_statistics(const DependenceModel& model, std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t m = model.m;
  std::vector<double> z(m);
  for (auto& v : z) v = normal(rng);
  switch (model.kind) {
    case ModelKind::independent: break;
    case ModelKind::equicorrelated: {
      // one-factor form sqrt(rho) W + sqrt(1 - rho) xi
      const double w = normal(rng);
      const double a = std::sqrt(1.0 - model.rho);
      const double b = std::sqrt(model.rho);
      for (auto& v : z) v = b * w + a * v;
      break;
    }
    case ModelKind::negative: {
      // symmetric square root of (1 - rho) I + rho 11': a I + (b/m) 11'
      const double md = static_cast<double>(m);
      const double a = std::sqrt(1.0 - model.rho);
      // eigenvalue along 1 is 1 + rho (m - 1); snap rounding residue at the boundary
      double along_one = 1.0 + model.rho * (md - 1.0);
      if (along_one < 1e-12) along_one = 0.0;
      const double b = -a + std::sqrt(along_one);
      double mean = 0.0;
      for (double v : z) mean += v;
      mean /= md;
      for (auto& v : z) v = a * v + b * mean;
      break;
    }
  }
  for (std::size_t i = model.m0; i < m; ++i) z[i] += model.mu1;
  return z;
}

inline GeneratedPValues generate_pvalues(const DependenceModel& model, std::uint64_t seed) {
  auto z = generate_statistics(model, seed);
  for (auto& v : z) v = upper_tail_pvalue(v);
  return {PValueVector(std::move(z)), model.null_mask()};
}

// ---------------------------------------------------------------------------

struct TrialOutcome {
  double fdp = 0.0;
  double false_rejection = 0.0;  // 1 if R contains a true null
  double power = 0.0;            // fraction of false nulls rejected
};

struct ExperimentReport {
  std::string procedure;
  std::string model;
  double alpha = 0.0;
  std::size_t n_trials = 0;
  double fdr = 0.0, fdr_se = 0.0;
  double fwer = 0.0, fwer_se = 0.0;
  double power = 0.0, power_se = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

struct SimulationOptions {
  // Hypothesis weights; counting measure with pi = 1/m when unset.
  std::optional<HypothesisSpace> space;
  unsigned threads = 1;
};

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

inline TrialOutcome score_trial(const RejectionSet& rejected, const std::vector<bool>& is_null,
                                const HypothesisSpace& space) {
  TrialOutcome out;
  out.fdp = fdp(rejected, is_null, space);
  std::size_t false_nulls = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < is_null.size(); ++i)
    if (!is_null[i]) ++false_nulls;
  for (std::size_t i : rejected.members()) {
    if (is_null[i]) out.false_rejection = 1.0;
    else ++hits;
  }
  out.power = false_nulls == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(false_nulls);
  return out;
}

// Runs n_trials independent trials; outcome t depends only on (master_seed, t).
inline std::vector<TrialOutcome> simulate_trials(const Procedure& procedure, const DependenceModel& model,
                                                 std::size_t n_trials, std::uint64_t master_seed,
                                                 const SimulationOptions& options = {}) {
  model.validate();
  const HypothesisSpace space = options.space ? *options.space : HypothesisSpace::standard(model.m);
  if (space.size() != model.m) throw std::invalid_argument("simulation: space size differs from model m");
  std::vector<TrialOutcome> out(n_trials);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto gen = generate_pvalues(model, trial_seed(master_seed, t));
      out[t] = score_trial(procedure(gen.p, space), gen.is_null, space);
    }
  };
  const unsigned threads = std::min<std::size_t>(resolve_threads(options.threads), std::max<std::size_t>(1, n_trials));
  if (threads <= 1) {
    work(0, n_trials);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_trials + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t begin = std::min(n_trials, w * chunk);
      const std::size_t end = std::min(n_trials, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean and SD / sqrt(n).
template <class Range, class Get>
MeanSe mean_and_se(const Range& xs, Get get) {
  MeanSe r;
  const double n = static_cast<double>(std::size(xs));
  if (n == 0) return r;
  double sum = 0.0;
  for (const auto& x : xs) sum += get(x);
  r.mean = sum / n;
  if (n < 2) return r;
  double ss = 0.0;
  for (const auto& x : xs) {
    const double d = get(x) - r.mean;
    ss += d * d;
  }
  r.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

inline ExperimentReport summarize(const std::vector<TrialOutcome>& trials, std::string procedure,
                                  std::string model, double alpha, std::uint64_t seed) {
  ExperimentReport rep;
  rep.procedure = std::move(procedure);
  rep.model = std::move(model);
  rep.alpha = alpha;
  rep.n_trials = trials.size();
  rep.seed = seed;
  const auto f = mean_and_se(trials, [](const TrialOutcome& t) { return t.fdp; });
  const auto w = mean_and_se(trials, [](const TrialOutcome& t) { return t.false_rejection; });
  const auto p = mean_and_se(trials, [](const TrialOutcome& t) { return t.power; });
  rep.fdr = f.mean;
  rep.fdr_se = f.se;
  rep.fwer = w.mean;
  rep.fwer_se = w.se;
  rep.power = p.mean;
  rep.power_se = p.se;
  return rep;
}

inline ExperimentReport estimate_error_rates(const Procedure& procedure, const DependenceModel& model,
                                             std::size_t n_trials, std::uint64_t master_seed,
                                             const SimulationOptions& options = {}, double alpha = 0.0) {
  if (n_trials == 0) throw std::invalid_argument("estimate_error_rates: n_trials must be positive");
  const auto trials = simulate_trials(procedure, model, n_trials, master_seed, options);
  return summarize(trials, procedure.name, model.describe(), alpha, master_seed);
}

}  // namespace stepfdr
