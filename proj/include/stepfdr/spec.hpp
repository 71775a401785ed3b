#pragma once

// String forms of procedures, shared by the CLI and experiment configs:
//
//   su[:<shape>]                 step-up
//   sd[:<shape>]                 step-down
//   sud:<lambda>[:<shape>]       step-up-down of order lambda; "<x>m" means x * Lambda(H)
//   rank:<bl_rs|bl99|holm|bonferroni>
//   rank:df[:<uniform|linear|inverse>]
//   adaptive:<a0>,<a1>[:<shape>] two-stage adaptive step-up (ignores the alpha grid)

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stepfdr/procedures.hpp"
#include "stepfdr/shape.hpp"

namespace stepfdr {

enum class ProcedureKind { step_up, step_down, step_up_down, rank, adaptive };

struct ProcedureSpec {
  ProcedureKind kind = ProcedureKind::step_up;
  ShapeSpec shape{};
  double lambda = 0.0;
  bool lambda_relative = false;
  RankKind rank = RankKind::bl_rs;
  DfPrior df = DfPrior::uniform;
  double alpha0 = 0.0;
  double alpha1 = 0.0;

  std::string format() const {
    switch (kind) {
      case ProcedureKind::step_up: return "su:" + shape.format();
      case ProcedureKind::step_down: return "sd:" + shape.format();
      case ProcedureKind::step_up_down:
        return "sud:" + format_double(lambda) + (lambda_relative ? "m" : "") + ":" + shape.format();
      case ProcedureKind::rank:
        switch (rank) {
          case RankKind::bl_rs: return "rank:bl_rs";
          case RankKind::bl99: return "rank:bl99";
          case RankKind::holm: return "rank:holm";
          case RankKind::bonferroni: return "rank:bonferroni";
          case RankKind::df:
            return std::string("rank:df:") +
                   (df == DfPrior::uniform ? "uniform" : df == DfPrior::linear ? "linear" : "inverse");
        }
        break;
      case ProcedureKind::adaptive:
        return "adaptive:" + format_double(alpha0) + "," + format_double(alpha1) + ":" + shape.format();
    }
    return {};
  }

  bool uses_alpha() const { return kind != ProcedureKind::adaptive; }

  friend bool operator==(const ProcedureSpec&, const ProcedureSpec&) = default;
};

inline ProcedureSpec parse_procedure_spec(std::string_view text,
                                          const std::optional<ShapeSpec>& default_shape = std::nullopt) {
  const std::string s(text);
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  std::string rest = colon == std::string::npos ? std::string{} : s.substr(colon + 1);
  const bool has_rest = colon != std::string::npos;
  const ShapeSpec fallback = default_shape.value_or(ShapeSpec{});
  auto shape_or_default = [&](const std::string& tail, bool present) {
    if (!present) return fallback;
    if (tail.empty()) throw std::invalid_argument("procedure '" + s + "': empty shape");
    return parse_shape_spec(tail);
  };

  ProcedureSpec spec;
  if (head == "su" || head == "sd") {
    spec.kind = head == "su" ? ProcedureKind::step_up : ProcedureKind::step_down;
    spec.shape = shape_or_default(rest, has_rest);
    return spec;
  }
  if (head == "sud") {
    if (!has_rest || rest.empty()) throw std::invalid_argument("procedure '" + s + "': sud needs an order, e.g. sud:0.5m");
    spec.kind = ProcedureKind::step_up_down;
    const auto c2 = rest.find(':');
    std::string lam = rest.substr(0, c2);
    if (!lam.empty() && lam.back() == 'm') {
      spec.lambda_relative = true;
      lam.pop_back();
    }
    spec.lambda = parse_double(lam, "procedure '" + s + "' order");
    if (!(spec.lambda >= 0.0) || (spec.lambda_relative && spec.lambda > 1.0)) {
      throw std::invalid_argument("procedure '" + s + "': order '" + rest.substr(0, c2) + "' out of range");
    }
    spec.shape = shape_or_default(c2 == std::string::npos ? "" : rest.substr(c2 + 1), c2 != std::string::npos);
    return spec;
  }
  if (head == "rank") {
    spec.kind = ProcedureKind::rank;
    const auto c2 = rest.find(':');
    const std::string kind = rest.substr(0, c2);
    const std::string arg = c2 == std::string::npos ? "" : rest.substr(c2 + 1);
    if (kind == "df") {
      spec.rank = RankKind::df;
      if (arg.empty() || arg == "uniform") spec.df = DfPrior::uniform;
      else if (arg == "linear") spec.df = DfPrior::linear;
      else if (arg == "inverse") spec.df = DfPrior::inverse;
      else throw std::invalid_argument("procedure '" + s + "': unknown df prior '" + arg + "'");
      return spec;
    }
    if (!arg.empty()) throw std::invalid_argument("procedure '" + s + "': unexpected token '" + arg + "'");
    if (kind == "bl_rs") spec.rank = RankKind::bl_rs;
    else if (kind == "bl99") spec.rank = RankKind::bl99;
    else if (kind == "holm") spec.rank = RankKind::holm;
    else if (kind == "bonferroni") spec.rank = RankKind::bonferroni;
    else throw std::invalid_argument("procedure '" + s + "': unknown rank kind '" + kind + "'");
    return spec;
  }
  if (head == "adaptive") {
    spec.kind = ProcedureKind::adaptive;
    const auto c2 = rest.find(':');
    const std::string levels = rest.substr(0, c2);
    const auto comma = levels.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("procedure '" + s + "': adaptive needs '<a0>,<a1>', got '" + levels + "'");
    }
    spec.alpha0 = parse_double(levels.substr(0, comma), "procedure '" + s + "' a0");
    spec.alpha1 = parse_double(levels.substr(comma + 1), "procedure '" + s + "' a1");
    for (double a : {spec.alpha0, spec.alpha1}) {
      if (!(a > 0.0 && a < 1.0)) {
        throw std::invalid_argument("procedure '" + s + "': level '" + format_double(a) + "' outside (0,1)");
      }
    }
    spec.shape = shape_or_default(c2 == std::string::npos ? "" : rest.substr(c2 + 1), c2 != std::string::npos);
    return spec;
  }
  throw std::invalid_argument("unknown procedure kind '" + head + "'");
}

// Binds a spec to a level alpha and a space size m.
inline Procedure bind_procedure(const ProcedureSpec& spec, double alpha, std::size_t m) {
  if (spec.uses_alpha() && !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0,1), got " + format_double(alpha));
  }
  const std::string name = spec.format();
  switch (spec.kind) {
    case ProcedureKind::step_up: {
      FactorizedThresholds delta(alpha, make_shape(spec.shape, m));
      return {name, [delta](const PValueVector& p, const HypothesisSpace& h) { return step_up(delta, p, h); }};
    }
    case ProcedureKind::step_down: {
      FactorizedThresholds delta(alpha, make_shape(spec.shape, m));
      return {name, [delta](const PValueVector& p, const HypothesisSpace& h) { return step_down(delta, p, h); }};
    }
    case ProcedureKind::step_up_down: {
      FactorizedThresholds delta(alpha, make_shape(spec.shape, m));
      const double lam = spec.lambda;
      const bool rel = spec.lambda_relative;
      return {name, [delta, lam, rel](const PValueVector& p, const HypothesisSpace& h) {
                return step_up_down(delta, rel ? lam * h.total_volume() : lam, p, h);
              }};
    }
    case ProcedureKind::rank: {
      std::optional<PriorDistribution> nu;
      if (spec.rank == RankKind::df) nu = df_prior(spec.df, m);
      auto t = make_rank_thresholds(spec.rank, alpha, m, nu ? &*nu : nullptr);
      return {name, [t = std::move(t)](const PValueVector& p, const HypothesisSpace& h) {
                return rank_step_down(t, p, h);
              }};
    }
    case ProcedureKind::adaptive: {
      auto beta = make_shape(spec.shape, m);
      const double a0 = spec.alpha0;
      const double a1 = spec.alpha1;
      return {name, [beta, a0, a1](const PValueVector& p, const HypothesisSpace& h) {
                return adaptive_two_stage(a0, a1, beta, p, h).rejected;
              }};
    }
  }
  throw std::logic_error("bind_procedure: unhandled kind");
}

// Factorized collection underlying a su/sd/sud/adaptive spec (adaptive: first
// stage not applied), or nullopt for rank procedures.
inline std::optional<FactorizedThresholds> factorized_thresholds(const ProcedureSpec& spec, double alpha,
                                                                 std::size_t m) {
  switch (spec.kind) {
    case ProcedureKind::rank: return std::nullopt;
    case ProcedureKind::adaptive: return FactorizedThresholds(spec.alpha1, make_shape(spec.shape, m));
    default: return FactorizedThresholds(alpha, make_shape(spec.shape, m));
  }
}

}  // namespace stepfdr
