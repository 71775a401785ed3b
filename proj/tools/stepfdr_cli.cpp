// stepfdr: apply step-wise FDR procedures, tabulate shape functions, and run
// Monte-Carlo checks and experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stepfdr/stepfdr.hpp"

namespace {

using namespace stepfdr;
using nlohmann::json;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string threads = "1";
  bool quiet = false;

  unsigned thread_count() const {
    if (threads == "auto") return 0;
    const double v = parse_double(threads, "--threads");
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<unsigned>(v))) {
      throw std::invalid_argument("--threads must be a positive integer or 'auto'");
    }
    return static_cast<unsigned>(v);
  }
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shape lists are comma separated, but prior:gauss parameters contain commas
// too: a piece that does not start a new shape is glued to the previous one.
std::vector<std::string> split_shape_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& piece : detail::split(text, ',')) {
    const bool starts_shape = piece.find('=') == std::string::npos || piece.find(':') != std::string::npos;
    if (!starts_shape && !out.empty()) {
      out.back() += "," + piece;
    } else {
      out.push_back(piece);
    }
  }
  return out;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : detail::split(text, ',')) out.push_back(parse_double(tok, what));
  return out;
}

// ---------------------------------------------------------------------------

struct ApplyArgs {
  std::string procedure;
  double alpha = 0.0;
  std::string shape = "linear";
  std::string input;
  std::string output;
};

// Malformed spec strings are usage errors.
ProcedureSpec parse_spec_arg(const std::string& procedure, const std::string& shape) {
  try {
    return parse_procedure_spec(procedure, parse_shape_spec(shape));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int run_apply(const ApplyArgs& a, const GlobalOptions& g) {
  const auto spec = parse_spec_arg(a.procedure, a.shape);
  const auto data = read_pvalue_csv_file(a.input);
  const std::size_t m = data.space.size();
  RejectionSet rejected;
  std::optional<double> pihat0;
  if (spec.kind == ProcedureKind::adaptive) {
    const auto res = adaptive_two_stage(spec.alpha0, spec.alpha1, make_shape(spec.shape, m), data.p, data.space);
    rejected = res.rejected;
    pihat0 = res.pihat0;
  } else {
    rejected = bind_procedure(spec, a.alpha, m)(data.p, data.space);
  }
  const auto wp = weighted_pvalues(data.p, data.space);
  std::ostringstream out;
  out << "id,p,weighted_p,rejected\n";
  for (std::size_t i = 0; i < m; ++i) {
    out << data.space.labels()[i] << ',' << format_double(data.p[i]) << ',' << format_double(wp[i]) << ','
        << (rejected.contains(i) ? 1 : 0) << '\n';
  }
  out << "# r_hat=" << format_double(rejected.volume())
      << " pihat0=" << (pihat0 ? format_double(*pihat0) : std::string("NA")) << '\n';
  write_text(a.output, out.str());
  if (!g.quiet) {
    const double budget = spec.kind == ProcedureKind::adaptive ? spec.alpha0 + spec.alpha1
                                                               : a.alpha * pi_volume_total(data.space);
    std::cerr << spec.format() << ": rejected " << rejected.count() << " of " << m
              << " (volume " << format_double(rejected.volume()) << "); FDR <= alpha * Pi(H) = "
              << format_double(budget) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string csv;
  std::string json_out;
};

int run_simulate(const SimulateArgs& a, const GlobalOptions& g) {
  json j;
  try {
    j = json::parse(read_text(a.config));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config '" + a.config + "': " + e.what());
  }
  auto config = config_from_json(j);
  if (g.seed) config.seed = *g.seed;
  config.threads = g.thread_count();
  if (!a.csv.empty()) config.csv_path = a.csv;
  if (!a.json_out.empty()) config.json_path = a.json_out;
  const auto reports = run_experiment(config);
  write_text(config.csv_path, reports_to_csv(reports));
  write_text(config.json_path, reports_to_json(reports).dump(2) + "\n");
  if (!g.quiet) std::cerr << "simulate: " << reports.size() << " cells written\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ShapesArgs {
  std::size_t m = 0;
  std::string shapes;
  std::string out;
  bool continuous = false;
};

int run_shapes(const ShapesArgs& a, const GlobalOptions&) {
  std::vector<ShapeColumn> cols;
  bool holm = false;
  const auto mode = a.continuous ? PriorMode::continuous : PriorMode::discretized;
  for (const auto& s : split_shape_list(a.shapes)) {
    if (s == "holm") {
      holm = true;
      continue;
    }
    ShapeSpec spec;
    try {
      spec = parse_shape_spec(s);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    cols.push_back({spec.format(), make_shape(spec, a.m, mode)});
  }
  write_text(a.out, shape_table(cols, a.m, holm).to_csv());
  return 0;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string mode;
  std::string procedure = "su";
  double alpha = 0.05;
  std::string shape = "linear";
  std::string input;
  std::string model;
  std::string sampler = "procedure";
  std::string c_grid = "0.01,0.05,0.1,0.5,1";
  std::string u_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  std::size_t n = 100000;
  std::size_t h = 0;
  double r = 1.0;
  std::size_t n_perturb = 1000;
  std::string out;
};

int run_check(const CheckArgs& a, const GlobalOptions& g) {
  const std::uint64_t seed = g.seed.value_or(0);
  const auto spec = parse_spec_arg(a.procedure, a.shape);
  json result{{"mode", a.mode}, {"seed", seed}};

  if (a.mode == "sc" || a.mode == "mono") {
    if (a.input.empty()) throw UsageError("--input is required for --mode " + a.mode);
    const auto data = read_pvalue_csv_file(a.input);
    const std::size_t m = data.space.size();
    const auto proc = bind_procedure(spec, a.alpha, m);
    result["procedure"] = spec.format();
    if (a.mode == "sc") {
      const auto delta = factorized_thresholds(spec, a.alpha, m);
      if (!delta) throw UsageError("--mode sc needs a factorized procedure (su, sd, sud)");
      if (spec.kind == ProcedureKind::adaptive) throw UsageError("--mode sc does not apply to adaptive procedures");
      const auto rejected = proc(data.p, data.space);
      const auto sc = check_self_consistency(rejected, *delta, data.p, data.space);
      const auto at_r = level_set(*delta, rejected.volume(), data.p, data.space);
      result["volume"] = rejected.volume();
      result["self_consistent"] = sc.holds;
      result["witness"] = sc.witness ? json(data.space.labels()[*sc.witness]) : json(nullptr);
      result["equality"] = std::abs(at_r.volume() - rejected.volume()) <= kVolumeTol;
      result["pass"] = sc.holds;
    } else {
      const auto v = monotonicity_probe(proc, data.p, data.space, a.n_perturb, seed);
      result["n_perturb"] = a.n_perturb;
      result["violations"] = v;
      result["pass"] = v == 0;
    }
  } else if (a.mode == "dc") {
    UvSampler sampler;
    ShapeFunction beta = ShapeFunction::linear();
    if (a.sampler == "const") {
      sampler = [](Rng& rng) { return std::make_pair(uniform01(rng), 1.0); };
    } else if (a.sampler == "one-minus") {
      sampler = [](Rng& rng) {
        const double u = uniform01(rng);
        return std::make_pair(u, 1.0 - u);
      };
    } else if (a.sampler == "half") {
      sampler = [](Rng& rng) {
        const double u = uniform01(rng);
        return std::make_pair(u, u / 2.0);
      };
    } else if (a.sampler == "procedure") {
      if (a.model.empty()) throw UsageError("--model is required for --sampler procedure");
      const auto model = parse_model_spec(a.model);
      const auto delta = factorized_thresholds(spec, a.alpha, model.m);
      if (delta) beta = delta->beta;
      sampler = procedure_uv_sampler(bind_procedure(spec, a.alpha, model.m), model, a.h);
      result["procedure"] = spec.format();
      result["model"] = model.describe();
    } else {
      throw UsageError("unknown --sampler '" + a.sampler + "'");
    }
    if (a.sampler != "procedure" && spec.kind != ProcedureKind::rank) {
      beta = make_shape(spec.shape, 1);
    }
    result["shape"] = beta.name();
    const auto estimates = dc_estimate(sampler, beta, parse_list(a.c_grid, "--c"), a.n, seed);
    bool pass = true;
    json arr = json::array();
    for (const auto& e : estimates) {
      const bool ok = e.within_bound();
      pass = pass && ok;
      arr.push_back({{"c", e.c},
                     {"estimate", e.estimate},
                     {"se", e.se},
                     {"n", e.n},
                     {"violations", e.violations},
                     {"median_of_means", e.median_of_means},
                     {"robust_se", e.robust_se},
                     {"within_bound", ok},
                     {"violation_flagged", e.violation_flagged()}});
    }
    result["estimates"] = arr;
    result["pass"] = pass;
  } else if (a.mode == "prds") {
    if (a.model.empty()) throw UsageError("--model is required for --mode prds");
    const auto model = parse_model_spec(a.model);
    const auto curve = prds_curve_estimate(model, bind_procedure(spec, a.alpha, model.m), a.h, a.r,
                                           parse_list(a.u_grid, "--u"), a.n, seed);
    json arr = json::array();
    for (const auto& pt : curve.points) {
      arr.push_back({{"u", pt.u}, {"estimate", pt.estimate}, {"se", pt.se}, {"hits", pt.hits}});
    }
    result["procedure"] = spec.format();
    result["model"] = model.describe();
    result["h"] = a.h;
    result["r"] = a.r;
    result["curve"] = arr;
    result["nondecreasing_within_noise"] = curve.nondecreasing_within_noise;
    result["pass"] = curve.nondecreasing_within_noise;
  } else {
    throw UsageError("unknown --mode '" + a.mode + "'");
  }
  write_text(a.out, result.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Step-wise false discovery rate procedures and Monte-Carlo checks", "stepfdr"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (u64)");
  app.add_option("--threads", g.threads, "Worker threads: a positive integer or 'auto'");
  app.add_flag("--quiet", g.quiet, "Suppress diagnostics on stderr");

  ApplyArgs apply;
  auto* c_apply = app.add_subcommand("apply", "Run a procedure on a p-value CSV");
  c_apply->add_option("--procedure", apply.procedure, "su | sd | sud:<lambda> | rank:<kind> | adaptive:<a0>,<a1>")
      ->required();
  c_apply->add_option("--alpha", apply.alpha, "Level alpha")->required();
  c_apply->add_option("--shape", apply.shape, "Shape used when the procedure names none")->capture_default_str();
  c_apply->add_option("--input", apply.input, "CSV with header id,p[,pi,lambda,is_null]")->required();
  c_apply->add_option("--output", apply.output, "Output CSV (stdout when omitted)");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte-Carlo FDR/FWER/power over a config grid");
  c_sim->add_option("--config", sim.config, "JSON experiment config")->required();
  c_sim->add_option("--csv", sim.csv, "CSV report path (default from config, else report.csv)");
  c_sim->add_option("--json", sim.json_out, "JSON report path (default from config, else report.json)");

  ShapesArgs shapes;
  auto* c_shapes = app.add_subcommand("shapes", "Tabulate normalized shape functions m^-1 beta(r)");
  c_shapes->add_option("--m", shapes.m, "Number of hypotheses")->required()->check(CLI::PositiveNumber);
  c_shapes->add_option("--shapes", shapes.shapes, "Comma-separated shape specs (holm adds the Holm reference)")
      ->required();
  c_shapes->add_option("--out", shapes.out, "Output CSV (stdout when omitted)");
  c_shapes->add_flag("--continuous", shapes.continuous, "Evaluate continuous priors without discretization");

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "Empirical checks of SC, DC, monotonicity and the PRDS curve");
  c_check->add_option("--mode", check.mode, "sc | dc | mono | prds")
      ->required()
      ->check(CLI::IsMember({"sc", "dc", "mono", "prds"}));
  c_check->add_option("--procedure", check.procedure, "Procedure spec")->capture_default_str();
  c_check->add_option("--alpha", check.alpha, "Level alpha")->capture_default_str();
  c_check->add_option("--shape", check.shape, "Default shape")->capture_default_str();
  c_check->add_option("--input", check.input, "p-value CSV (sc, mono)");
  c_check->add_option("--model", check.model, "Model, e.g. independent:m=100,m0=80,mu1=3 (dc, prds)");
  c_check->add_option("--sampler", check.sampler, "dc pairs: procedure | const | one-minus | half")
      ->capture_default_str();
  c_check->add_option("--c", check.c_grid, "dc: comma-separated c grid")->capture_default_str();
  c_check->add_option("--u", check.u_grid, "prds: increasing u grid in (0,1]")->capture_default_str();
  c_check->add_option("--n", check.n, "Monte-Carlo sample count")->capture_default_str();
  c_check->add_option("--hypothesis", check.h, "Hypothesis index (0-based; a true null for dc)")->capture_default_str();
  c_check->add_option("--r", check.r, "prds: volume r")->capture_default_str();
  c_check->add_option("--n-perturb", check.n_perturb, "mono: number of perturbations")->capture_default_str();
  c_check->add_option("--out", check.out, "Output JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const auto parsed = app.get_subcommands();
    std::cerr << "stepfdr: " << e.what() << "\n" << (parsed.empty() ? app.help() : parsed.front()->help());
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*c_apply) return run_apply(apply, g);
    if (*c_sim) return run_simulate(sim, g);
    if (*c_shapes) return run_shapes(shapes, g);
    if (*c_check) return run_check(check, g);
  } catch (const UsageError& e) {
    std::cerr << "stepfdr: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stepfdr: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
