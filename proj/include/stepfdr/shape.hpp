#pragma once

// Shape functions beta: R+ -> R+ and the prior distributions that generate
// them through beta_nu(r) = integral over (0, r] of x dnu(x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stepfdr/numeric.hpp"

namespace stepfdr {

namespace detail {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr double kQuadratureTol = 1e-10;

template <class F>
double integrate(F&& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      std::forward<F>(f), a, b, 20, kQuadratureTol, &err);
}

}  // namespace detail

// Discrete probability distribution on (0, inf).
class PriorDistribution {
 public:
  PriorDistribution(std::vector<double> support, std::vector<double> mass, std::string provenance)
      : provenance_(std::move(provenance)) {
    if (support.empty()) throw std::invalid_argument("PriorDistribution: empty support");
    if (support.size() != mass.size()) {
      throw std::invalid_argument("PriorDistribution: support and mass differ in length");
    }
    std::vector<std::size_t> order(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    detail::CompensatedSum total;
    for (std::size_t i : order) {
      const double x = support[i];
      const double w = mass[i];
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("PriorDistribution: support points must be positive and finite");
      }
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw std::invalid_argument("PriorDistribution: masses must be nonnegative");
      }
      total.add(w);
      if (!support_.empty() && support_.back() == x) {
        mass_.back() += w;
      } else {
        support_.push_back(x);
        mass_.push_back(w);
      }
    }
    if (std::abs(total.value() - 1.0) > 1e-12) {
      throw std::invalid_argument("PriorDistribution: masses sum to " +
                                  format_double(total.value()) + ", not 1");
    }
    partial_means_.resize(support_.size() + 1);
    detail::CompensatedSum acc;
    partial_means_[0] = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      acc.add(support_[k] * mass_[k]);
      partial_means_[k + 1] = acc.value();
    }
  }

  // Normalizes the given nonnegative weights.
  static PriorDistribution from_weights(std::vector<double> support, std::vector<double> weights,
                                        std::string provenance) {
    detail::CompensatedSum z;
    for (double w : weights) z.add(w);
    const double total = z.value();
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw std::invalid_argument("PriorDistribution: weights are not normalizable");
    }
    for (double& w : weights) w /= total;
    return PriorDistribution(std::move(support), std::move(weights), std::move(provenance));
  }

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& mass() const { return mass_; }
  const std::string& provenance() const { return provenance_; }

  // integral over (0, r] of x dnu(x)
  double partial_mean(double r) const {
    auto it = std::upper_bound(support_.begin(), support_.end(), r);
    return partial_means_[static_cast<std::size_t>(it - support_.begin())];
  }

  double mass_at(double x) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.end() || *it != x) return 0.0;
    return mass_[static_cast<std::size_t>(it - support_.begin())];
  }

 private:
  std::vector<double> support_;
  std::vector<double> mass_;
  std::vector<double> partial_means_;
  std::string provenance_;
};

inline PriorDistribution dirac_prior(double mu) {
  std::ostringstream name;
  name << "dirac(mu=" << format_double(mu) << ")";
  return PriorDistribution({mu}, {1.0}, name.str());
}

inline std::vector<double> integer_grid(std::size_t m) {
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) out[k] = static_cast<double>(k + 1);
  return out;
}

// nu({k}) = 1/m on {1..m}
inline PriorDistribution uniform_prior(std::size_t m) {
  if (m == 0) throw std::invalid_argument("uniform_prior: m must be positive");
  return PriorDistribution(integer_grid(m),
                           std::vector<double>(m, 1.0 / static_cast<double>(m)),
                           "uniform(1.." + std::to_string(m) + ")");
}

// nu({k}) proportional to k^gamma on {1..m}
inline PriorDistribution power_prior(double gamma, std::size_t m) {
  if (m == 0) throw std::invalid_argument("power_prior: m must be positive");
  auto grid = integer_grid(m);
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) w[k] = std::pow(grid[k], gamma);
  return PriorDistribution::from_weights(std::move(grid), std::move(w),
                                         "power(gamma=" + format_double(gamma) + ",1.." +
                                             std::to_string(m) + ")");
}

// Prior on {1/k : 1 <= k <= m} given weights w_k (index k-1), normalized.
inline PriorDistribution reciprocal_support_prior(const std::vector<double>& weights,
                                                  std::string provenance) {
  std::vector<double> support(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) support[k] = 1.0 / static_cast<double>(k + 1);
  return PriorDistribution::from_weights(std::move(support), weights, std::move(provenance));
}

// Continuous (or point-mass) prior on (0, inf), described by its family.
class ContinuousPrior {
 public:
  struct Dirac {
    double mu;
  };
  // density proportional to x^gamma on [1, upper]
  struct Power {
    double gamma;
    double upper;
  };
  // density (1/lambda) exp(-x/lambda) on (0, inf)
  struct Exponential {
    double lambda;
  };
  // law of max(X, 1) with X ~ N(mu, sigma^2)
  struct TruncatedGaussian {
    double mu;
    double sigma;
  };
  // arbitrary integrable density on (0, inf); normalized on construction
  struct Density {
    std::function<double(double)> f;
    std::string name;
    double normalizer = 1.0;
  };
  using Family = std::variant<Dirac, Power, Exponential, TruncatedGaussian, Density>;

  static ContinuousPrior dirac(double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("dirac prior: mu must be positive");
    return ContinuousPrior(Dirac{mu});
  }
  static ContinuousPrior power(double gamma, double upper) {
    if (!(upper >= 1.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("power prior: need upper >= 1 and finite gamma");
    }
    return ContinuousPrior(Power{gamma, upper});
  }
  static ContinuousPrior exponential(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("exponential prior: lambda must be positive");
    }
    return ContinuousPrior(Exponential{lambda});
  }
  static ContinuousPrior truncated_gaussian(double mu, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu)) {
      throw std::invalid_argument("gaussian prior: sigma must be positive");
    }
    return ContinuousPrior(TruncatedGaussian{mu, sigma});
  }
  static ContinuousPrior density(std::function<double(double)> f, std::string name) {
    const double z = detail::integrate(f, 0.0, kInf);
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw std::invalid_argument("density prior '" + name + "' is not normalizable");
    }
    return ContinuousPrior(Density{std::move(f), std::move(name), z});
  }

  const Family& family() const { return family_; }

  // nu((a, b]) for 0 <= a < b <= inf
  double mass(double a, double b) const {
    return std::visit([&](const auto& fam) { return mass_impl(fam, a, b); }, family_);
  }

  // beta_nu(r) = integral over (0, r] of x dnu(x)
  double partial_mean(double r) const {
    if (r <= 0.0) return 0.0;
    return std::visit([&](const auto& fam) { return partial_mean_impl(fam, r); }, family_);
  }

  std::string name() const {
    return std::visit([](const auto& fam) { return name_impl(fam); }, family_);
  }

 private:
  explicit ContinuousPrior(Family f) : family_(std::move(f)) {}

  static double mass_impl(const Dirac& d, double a, double b) {
    return (a < d.mu && d.mu <= b) ? 1.0 : 0.0;
  }
  static double power_cdf(const Power& p, double x) {
    if (x <= 1.0) return 0.0;
    if (x >= p.upper) return 1.0;
    if (p.gamma == -1.0) return std::log(x) / std::log(p.upper);
    const double e = p.gamma + 1.0;
    return std::expm1(e * std::log(x)) / std::expm1(e * std::log(p.upper));
  }
  static double mass_impl(const Power& p, double a, double b) {
    if (p.upper == 1.0) return (a < 1.0 && 1.0 <= b) ? 1.0 : 0.0;
    return power_cdf(p, b) - power_cdf(p, a);
  }
  static double mass_impl(const Exponential& e, double a, double b) {
    // exp(-a/l) - exp(-b/l), written to keep precision when both are near 1
    const double ea = std::exp(-a / e.lambda);
    if (b == kInf) return ea;
    return -ea * std::expm1(-(b - a) / e.lambda);
  }
  static double gauss_cdf(const TruncatedGaussian& g, double x) {
    if (x < 1.0) return 0.0;
    return normal_cdf((x - g.mu) / g.sigma);
  }
  static double mass_impl(const TruncatedGaussian& g, double a, double b) {
    if (b == kInf) return 1.0 - gauss_cdf(g, a);
    return gauss_cdf(g, b) - gauss_cdf(g, a);
  }
  static double mass_impl(const Density& d, double a, double b) {
    return detail::integrate(d.f, a, b) / d.normalizer;
  }

  static double partial_mean_impl(const Dirac& d, double r) { return r >= d.mu ? d.mu : 0.0; }
  static double partial_mean_impl(const Power& p, double r) {
    if (r < 1.0) return 0.0;
    if (p.upper == 1.0) return 1.0;
    const double x = std::min(r, p.upper);
    const double g = p.gamma;
    const double num = (g == -2.0) ? std::log(x) : std::expm1((g + 2.0) * std::log(x)) / (g + 2.0);
    const double den = (g == -1.0) ? std::log(p.upper)
                                   : std::expm1((g + 1.0) * std::log(p.upper)) / (g + 1.0);
    return num / den;
  }
  static double partial_mean_impl(const Exponential& e, double r) {
    const double t = r / e.lambda;
    // lambda * (1 - exp(-t)(1 + t))
    return e.lambda * (-std::expm1(-t) - t * std::exp(-t));
  }
  static double partial_mean_impl(const TruncatedGaussian& g, double r) {
    if (r < 1.0) return 0.0;
    const double a = (1.0 - g.mu) / g.sigma;
    const double b = (r - g.mu) / g.sigma;
    const double atom = normal_cdf(a);
    return atom + g.mu * (normal_cdf(b) - atom) - g.sigma * (normal_pdf(b) - normal_pdf(a));
  }
  static double partial_mean_impl(const Density& d, double r) {
    return detail::integrate([&](double x) { return x * d.f(x); }, 0.0, r) / d.normalizer;
  }

  static std::string name_impl(const Dirac& d) { return "dirac(mu=" + format_double(d.mu) + ")"; }
  static std::string name_impl(const Power& p) {
    return "power(gamma=" + format_double(p.gamma) + ",1.." + format_double(p.upper) + ")";
  }
  static std::string name_impl(const Exponential& e) {
    return "exponential(lambda=" + format_double(e.lambda) + ")";
  }
  static std::string name_impl(const TruncatedGaussian& g) {
    return "truncated_gaussian(mu=" + format_double(g.mu) + ",sigma=" + format_double(g.sigma) + ")";
  }
  static std::string name_impl(const Density& d) { return d.name; }

  Family family_;
};

// nu'({k}) = nu((k-1, k]) for k < m and nu'({m}) = nu((m-1, inf)).
inline PriorDistribution discretize_prior(const ContinuousPrior& nu, std::size_t m) {
  if (m == 0) throw std::invalid_argument("discretize_prior: m must be positive");
  std::vector<double> support;
  std::vector<double> mass;
  for (std::size_t k = 1; k <= m; ++k) {
    const double lo = static_cast<double>(k - 1);
    const double hi = k == m ? kInf : static_cast<double>(k);
    const double w = std::max(0.0, nu.mass(lo, hi));
    if (w > 0.0) {
      support.push_back(static_cast<double>(k));
      mass.push_back(w);
    }
  }
  if (support.empty()) throw std::invalid_argument("discretize_prior: prior has no mass");
  return PriorDistribution::from_weights(std::move(support), std::move(mass),
                                         nu.name() + " discretized to 1.." + std::to_string(m));
}

class ShapeFunction {
 public:
  struct Linear {};
  struct ScaledLinear {
    double c;
  };
  struct PriorBased {
    std::shared_ptr<const PriorDistribution> nu;
  };
  // ((g+1)/(g+2)) r^(g+2) / m^(g+1)
  struct ScaleInvariantPower {
    double gamma;
    double m;
  };
  struct Dirac {
    double x0;
  };
  struct ContinuousPriorBased {
    std::shared_ptr<const ContinuousPrior> nu;
  };
  using Kind = std::variant<Linear, ScaledLinear, PriorBased, ScaleInvariantPower, Dirac,
                            ContinuousPriorBased>;

  static ShapeFunction linear() { return ShapeFunction(Linear{}, "linear"); }

  static ShapeFunction scaled_linear(double c, std::string name = {}) {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("scaled_linear: c must be positive");
    if (name.empty()) name = "scaled(c=" + format_double(c) + ")";
    return ShapeFunction(ScaledLinear{c}, std::move(name));
  }

  // Benjamini-Yekutieli shape r / gamma_m.
  static ShapeFunction by(std::size_t m) {
    return scaled_linear(1.0 / harmonic_number(m), "by(m=" + std::to_string(m) + ")");
  }

  static ShapeFunction from_prior(PriorDistribution nu) {
    auto name = "prior:" + nu.provenance();
    return ShapeFunction(PriorBased{std::make_shared<const PriorDistribution>(std::move(nu))},
                         std::move(name));
  }

  static ShapeFunction from_continuous_prior(ContinuousPrior nu) {
    auto name = "continuous:" + nu.name();
    return ShapeFunction(
        ContinuousPriorBased{std::make_shared<const ContinuousPrior>(std::move(nu))},
        std::move(name));
  }

  static ShapeFunction scale_invariant_power(double gamma, double m) {
    if (!(gamma > -1.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("scale_invariant_power: gamma must exceed -1");
    }
    if (!(m > 0.0)) throw std::invalid_argument("scale_invariant_power: m must be positive");
    return ShapeFunction(ScaleInvariantPower{gamma, m},
                         "sip(gamma=" + format_double(gamma) + ",m=" + format_double(m) + ")");
  }

  static ShapeFunction dirac(double x0) {
    if (!(x0 > 0.0)) throw std::invalid_argument("dirac shape: x0 must be positive");
    return ShapeFunction(Dirac{x0}, "dirac(x0=" + format_double(x0) + ")");
  }

  double operator()(double r) const {
    if (!(r >= 0.0)) throw std::domain_error("shape function evaluated at negative r");
    return std::visit([r](const auto& k) { return eval(k, r); }, kind_);
  }

  const std::string& name() const { return name_; }
  const Kind& kind() const { return kind_; }

  // True when beta has the form integral of x dnu(x) for a probability nu.
  bool prior_form() const {
    return std::holds_alternative<PriorBased>(kind_) || std::holds_alternative<Dirac>(kind_) ||
           std::holds_alternative<ContinuousPriorBased>(kind_) ||
           std::holds_alternative<ScaleInvariantPower>(kind_);
  }

  const PriorDistribution* discrete_prior() const {
    if (auto* p = std::get_if<PriorBased>(&kind_)) return p->nu.get();
    return nullptr;
  }

 private:
  ShapeFunction(Kind k, std::string name) : kind_(std::move(k)), name_(std::move(name)) {}

  static double eval(const Linear&, double r) { return r; }
  static double eval(const ScaledLinear& s, double r) { return s.c * r; }
  static double eval(const PriorBased& p, double r) { return p.nu->partial_mean(r); }
  static double eval(const ScaleInvariantPower& s, double r) {
    const double u = r / s.m;
    return s.m * (s.gamma + 1.0) / (s.gamma + 2.0) * std::pow(u, s.gamma + 2.0);
  }
  static double eval(const Dirac& d, double r) { return r >= d.x0 ? d.x0 : 0.0; }
  static double eval(const ContinuousPriorBased& c, double r) { return c.nu->partial_mean(r); }

  Kind kind_;
  std::string name_;
};

inline ShapeFunction beta_from_prior(PriorDistribution nu) {
  return ShapeFunction::from_prior(std::move(nu));
}

// Smallest r in {1..m} with beta(r) >= 1, i.e. the first rejection volume at
// which the step-up threshold reaches Bonferroni's.
inline std::optional<std::size_t> bonferroni_crossover(const ShapeFunction& beta, std::size_t m) {
  for (std::size_t r = 1; r <= m; ++r) {
    if (beta(static_cast<double>(r)) >= 1.0) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// String form of shapes: linear, by, scaled:c=<x>, sip:gamma=<g>,
// prior:uniform, prior:power:gamma=<g>, prior:dirac:mu=<x>,
// prior:exp:lambda=<l>, prior:gauss:mu=<x>,sigma=<s>.

enum class ShapeKind { linear, by, scaled, sip, prior_uniform, prior_power, prior_dirac, prior_exp, prior_gauss };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::linear;
  double a = 0.0;  // c, gamma, mu or lambda
  double b = 0.0;  // sigma

  std::string format() const {
    switch (kind) {
      case ShapeKind::linear: return "linear";
      case ShapeKind::by: return "by";
      case ShapeKind::scaled: return "scaled:c=" + format_double(a);
      case ShapeKind::sip: return "sip:gamma=" + format_double(a);
      case ShapeKind::prior_uniform: return "prior:uniform";
      case ShapeKind::prior_power: return "prior:power:gamma=" + format_double(a);
      case ShapeKind::prior_dirac: return "prior:dirac:mu=" + format_double(a);
      case ShapeKind::prior_exp: return "prior:exp:lambda=" + format_double(a);
      case ShapeKind::prior_gauss:
        return "prior:gauss:mu=" + format_double(a) + ",sigma=" + format_double(b);
    }
    return "linear";
  }

  friend bool operator==(const ShapeSpec&, const ShapeSpec&) = default;
};

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Parses "k1=v1,k2=v2" (',' or ';' separated) and checks the expected keys.
inline std::vector<double> parse_params(std::string_view text, const std::vector<std::string>& keys,
                                        std::string_view context) {
  std::string normalized(text);
  std::replace(normalized.begin(), normalized.end(), ';', ',');
  std::vector<double> values(keys.size(), 0.0);
  std::vector<bool> seen(keys.size(), false);
  for (const auto& tok : split(normalized, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(std::string(context) + ": expected key=value, got '" + tok + "'");
    }
    const auto key = tok.substr(0, eq);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      throw std::invalid_argument(std::string(context) + ": unknown parameter '" + key + "'");
    }
    const auto idx = static_cast<std::size_t>(it - keys.begin());
    values[idx] = parse_double(tok.substr(eq + 1), std::string(context) + " parameter '" + key + "'");
    seen[idx] = true;
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!seen[i]) throw std::invalid_argument(std::string(context) + ": missing parameter '" + keys[i] + "'");
  }
  return values;
}

}  // namespace detail

inline ShapeSpec parse_shape_spec(std::string_view text) {
  const std::string s(text);
  auto bad = [&](const std::string& why) {
    return std::invalid_argument("shape '" + s + "': " + why);
  };
  if (s == "linear") return {ShapeKind::linear};
  if (s == "by") return {ShapeKind::by};
  auto after = [&](std::string_view prefix) -> std::optional<std::string> {
    if (s.rfind(prefix, 0) == 0) return s.substr(prefix.size());
    return std::nullopt;
  };
  if (auto rest = after("scaled:")) {
    const auto v = detail::parse_params(*rest, {"c"}, "shape 'scaled'");
    if (!(v[0] > 0.0)) throw bad("c must be positive");
    return {ShapeKind::scaled, v[0]};
  }
  if (auto rest = after("sip:")) {
    const auto v = detail::parse_params(*rest, {"gamma"}, "shape 'sip'");
    if (!(v[0] > -1.0)) throw bad("gamma must exceed -1");
    return {ShapeKind::sip, v[0]};
  }
  if (s == "prior:uniform") return {ShapeKind::prior_uniform};
  if (auto rest = after("prior:power:")) {
    return {ShapeKind::prior_power, detail::parse_params(*rest, {"gamma"}, "shape 'prior:power'")[0]};
  }
  if (auto rest = after("prior:dirac:")) {
    const auto v = detail::parse_params(*rest, {"mu"}, "shape 'prior:dirac'");
    if (!(v[0] > 0.0)) throw bad("mu must be positive");
    return {ShapeKind::prior_dirac, v[0]};
  }
  if (auto rest = after("prior:exp:")) {
    const auto v = detail::parse_params(*rest, {"lambda"}, "shape 'prior:exp'");
    if (!(v[0] > 0.0)) throw bad("lambda must be positive");
    return {ShapeKind::prior_exp, v[0]};
  }
  if (auto rest = after("prior:gauss:")) {
    const auto v = detail::parse_params(*rest, {"mu", "sigma"}, "shape 'prior:gauss'");
    if (!(v[1] > 0.0)) throw bad("sigma must be positive");
    return {ShapeKind::prior_gauss, v[0], v[1]};
  }
  const auto head = s.substr(0, s.find(':'));
  throw std::invalid_argument("unknown shape kind '" + (head == "prior" ? s : head) + "'");
}

enum class PriorMode { discretized, continuous };

// Instantiates a shape for m hypotheses under counting measure. Continuous
// priors are discretized to {1..m} unless PriorMode::continuous is requested
// (plotting only).
inline ShapeFunction make_shape(const ShapeSpec& spec, std::size_t m,
                                PriorMode mode = PriorMode::discretized) {
  if (m == 0) throw std::invalid_argument("make_shape: m must be positive");
  const double md = static_cast<double>(m);
  auto prior = [&](const ContinuousPrior& nu) {
    return mode == PriorMode::continuous ? ShapeFunction::from_continuous_prior(nu)
                                         : beta_from_prior(discretize_prior(nu, m));
  };
  switch (spec.kind) {
    case ShapeKind::linear: return ShapeFunction::linear();
    case ShapeKind::by: return ShapeFunction::by(m);
    case ShapeKind::scaled: return ShapeFunction::scaled_linear(spec.a);
    case ShapeKind::sip: return ShapeFunction::scale_invariant_power(spec.a, md);
    case ShapeKind::prior_uniform:
      return mode == PriorMode::continuous ? prior(ContinuousPrior::power(0.0, md))
                                           : beta_from_prior(uniform_prior(m));
    case ShapeKind::prior_power:
      return mode == PriorMode::continuous ? prior(ContinuousPrior::power(spec.a, md))
                                           : beta_from_prior(power_prior(spec.a, m));
    case ShapeKind::prior_dirac:
      return mode == PriorMode::continuous ? ShapeFunction::dirac(spec.a)
                                           : prior(ContinuousPrior::dirac(spec.a));
    case ShapeKind::prior_exp: return prior(ContinuousPrior::exponential(spec.a));
    case ShapeKind::prior_gauss: return prior(ContinuousPrior::truncated_gaussian(spec.a, spec.b));
  }
  throw std::logic_error("make_shape: unhandled kind");
}

inline ShapeFunction make_shape(std::string_view spec, std::size_t m,
                                PriorMode mode = PriorMode::discretized) {
  return make_shape(parse_shape_spec(spec), m, mode);
}

// ---------------------------------------------------------------------------

struct ShapeColumn {
  std::string name;
  ShapeFunction beta;
};

struct ShapeTable {
  std::vector<std::string> columns;     // excluding the leading r column
  std::vector<std::vector<double>> rows; // rows[r-1][j] = beta_j(r) / m

  std::string to_csv() const {
    std::string out = "r";
    for (const auto& c : columns) out += "," + csv_field(c);
    out += "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out += std::to_string(i + 1);
      for (double v : rows[i]) out += "," + format_double(v);
      out += "\n";
    }
    return out;
  }
};

// Normalized values m^-1 beta(r) for r = 1..m. The Holm reference column
// 1/(m - r + 1) is appended when requested.
inline ShapeTable shape_table(const std::vector<ShapeColumn>& shapes, std::size_t m,
                              bool include_holm = false) {
  if (m == 0) throw std::invalid_argument("shape_table: m must be positive");
  ShapeTable t;
  for (const auto& s : shapes) t.columns.push_back(s.name);
  if (include_holm) t.columns.emplace_back("holm");
  const double md = static_cast<double>(m);
  t.rows.reserve(m);
  for (std::size_t r = 1; r <= m; ++r) {
    std::vector<double> row;
    row.reserve(t.columns.size());
    for (const auto& s : shapes) row.push_back(s.beta(static_cast<double>(r)) / md);
    if (include_holm) row.push_back(1.0 / static_cast<double>(m - r + 1));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace stepfdr
