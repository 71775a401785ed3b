#pragma once

// Batch driver over procedure x model x alpha grids, plus report
// serialization. Every cell runs with the same master seed.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "stepfdr/simulation.hpp"
#include "stepfdr/spec.hpp"

namespace stepfdr {

struct ExperimentConfig {
  std::vector<std::string> procedures;
  std::vector<DependenceModel> models;
  std::vector<double> alpha;
  std::size_t n_trials = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string csv_path = "report.csv";
  std::string json_path = "report.json";
};

inline DependenceModel model_from_json(const nlohmann::json& j) {
  DependenceModel m;
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.m = j.at("m").get<std::size_t>();
  m.m0 = j.value("m0", m.m);
  m.mu1 = j.value("mu1", 3.0);
  if (j.contains("rho")) {
    const auto& rho = j.at("rho");
    if (rho.is_string()) {
      if (rho.get<std::string>() != "min" || m.m < 2) {
        throw std::invalid_argument("rho must be a number or \"min\"");
      }
      m.rho = DependenceModel::min_rho(m.m);
    } else {
      m.rho = rho.get<double>();
    }
  }
  return m;
}

// "kind:m=100,m0=80,rho=0.5,mu1=3"; rho may be "min" for -1/(m-1).
inline DependenceModel parse_model_spec(const std::string& text) {
  const auto colon = text.find(':');
  DependenceModel m;
  m.kind = parse_model_kind(text.substr(0, colon));
  bool have_m = false, have_m0 = false, rho_min = false;
  if (colon != std::string::npos) {
    for (const auto& tok : detail::split(text.substr(colon + 1), ',')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("model '" + text + "': expected key=value, got '" + tok + "'");
      const auto key = tok.substr(0, eq);
      const auto val = tok.substr(eq + 1);
      const std::string ctx = "model '" + text + "' " + key;
      if (key == "m") {
        m.m = static_cast<std::size_t>(parse_double(val, ctx));
        have_m = true;
      } else if (key == "m0") {
        m.m0 = static_cast<std::size_t>(parse_double(val, ctx));
        have_m0 = true;
      } else if (key == "rho") {
        if (val == "min") rho_min = true;
        else m.rho = parse_double(val, ctx);
      } else if (key == "mu1") {
        m.mu1 = parse_double(val, ctx);
      } else {
        throw std::invalid_argument("model '" + text + "': unknown parameter '" + key + "'");
      }
    }
  }
  if (!have_m) throw std::invalid_argument("model '" + text + "': missing m");
  if (!have_m0) m.m0 = m.m;
  if (rho_min) {
    if (m.m < 2) throw std::invalid_argument("model '" + text + "': rho=min needs m >= 2");
    m.rho = DependenceModel::min_rho(m.m);
  }
  m.validate();
  return m;
}

inline nlohmann::json model_to_json(const DependenceModel& m) {
  return {{"kind", to_string(m.kind)}, {"m", m.m}, {"m0", m.m0}, {"rho", m.rho}, {"mu1", m.mu1}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  for (const auto& p : j.at("procedures")) c.procedures.push_back(p.get<std::string>());
  const auto& models = j.at("models");
  for (std::size_t i = 0; i < models.size(); ++i) {
    try {
      c.models.push_back(model_from_json(models[i]));
    } catch (const std::exception& e) {
      throw std::invalid_argument("models[" + std::to_string(i) + "]: " + e.what());
    }
  }
  for (const auto& a : j.at("alpha")) c.alpha.push_back(a.get<double>());
  c.n_trials = j.value("n_trials", c.n_trials);
  c.seed = j.value("seed", c.seed);
  if (j.contains("output")) {
    c.csv_path = j["output"].value("csv", c.csv_path);
    c.json_path = j["output"].value("json", c.json_path);
  }
  return c;
}

inline std::vector<ExperimentReport> run_experiment(const ExperimentConfig& config) {
  if (config.n_trials == 0) throw std::invalid_argument("n_trials must be at least 1");
  // Validate every cell before running anything.
  std::vector<ProcedureSpec> specs;
  for (std::size_t i = 0; i < config.procedures.size(); ++i) {
    try {
      specs.push_back(parse_procedure_spec(config.procedures[i]));
    } catch (const std::exception& e) {
      throw std::invalid_argument("procedures[" + std::to_string(i) + "] '" + config.procedures[i] + "': " + e.what());
    }
  }
  for (std::size_t j = 0; j < config.models.size(); ++j) {
    try {
      config.models[j].validate();
    } catch (const std::exception& e) {
      throw std::invalid_argument("models[" + std::to_string(j) + "]: " + e.what());
    }
  }
  for (std::size_t k = 0; k < config.alpha.size(); ++k) {
    if (!(config.alpha[k] > 0.0 && config.alpha[k] < 1.0)) {
      throw std::invalid_argument("alpha[" + std::to_string(k) + "] = " + format_double(config.alpha[k]) +
                                  " outside (0,1)");
    }
  }

  std::vector<ExperimentReport> reports;
  SimulationOptions opts;
  opts.threads = config.threads;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = 0; j < config.models.size(); ++j) {
      for (std::size_t k = 0; k < config.alpha.size(); ++k) {
        const auto& model = config.models[j];
        Procedure proc;
        try {
          proc = bind_procedure(specs[i], config.alpha[k], model.m);
        } catch (const std::exception& e) {
          throw std::invalid_argument("cell (procedures[" + std::to_string(i) + "], models[" + std::to_string(j) +
                                      "], alpha[" + std::to_string(k) + "]): " + e.what());
        }
        reports.push_back(estimate_error_rates(proc, model, config.n_trials, config.seed, opts, config.alpha[k]));
      }
    }
  }
  return reports;
}

inline std::string reports_to_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "procedure,model,alpha,fdr,fdr_se,fwer,fwer_se,power,power_se,seed\n";
  for (const auto& r : reports) {
    out << csv_field(r.procedure) << ',' << csv_field(r.model) << ',' << format_double(r.alpha) << ','
        << format_double(r.fdr) << ',' << format_double(r.fdr_se) << ',' << format_double(r.fwer) << ','
        << format_double(r.fwer_se) << ',' << format_double(r.power) << ',' << format_double(r.power_se) << ','
        << r.seed << '\n';
  }
  return out.str();
}

inline nlohmann::json reports_to_json(const std::vector<ExperimentReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    arr.push_back({{"procedure", r.procedure},
                   {"model", r.model},
                   {"alpha", r.alpha},
                   {"n_trials", r.n_trials},
                   {"fdr", {{"estimate", r.fdr}, {"se", r.fdr_se}}},
                   {"fwer", {{"estimate", r.fwer}, {"se", r.fwer_se}}},
                   {"power", {{"estimate", r.power}, {"se", r.power_se}}},
                   {"seed", r.seed}});
  }
  return {{"reports", arr}};
}

}  // namespace stepfdr
