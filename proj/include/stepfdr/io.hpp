#pragma once

// CSV p-value input: header id,p[,pi,lambda,is_null], columns in any order.

#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stepfdr/core.hpp"
#include "stepfdr/numeric.hpp"
#include "stepfdr/shape.hpp"

namespace stepfdr {

struct PValueInput {
  HypothesisSpace space;
  PValueVector p;
  std::optional<std::vector<bool>> is_null;
};

inline PValueInput read_pvalue_csv(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw std::invalid_argument("p-value CSV: missing header");
  const auto header = detail::split(line, ',');
  int c_id = -1, c_p = -1, c_pi = -1, c_lambda = -1, c_null = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    int* slot = h == "id" ? &c_id : h == "p" ? &c_p : h == "pi" ? &c_pi : h == "lambda" ? &c_lambda
              : h == "is_null" ? &c_null : nullptr;
    if (slot == nullptr) throw std::invalid_argument("p-value CSV: unknown column '" + h + "'");
    if (*slot >= 0) throw std::invalid_argument("p-value CSV: duplicate column '" + h + "'");
    *slot = static_cast<int>(i);
  }
  if (c_id < 0 || c_p < 0) throw std::invalid_argument("p-value CSV: header must contain id and p");

  std::vector<std::string> ids;
  std::vector<double> p, pi, lambda;
  std::vector<bool> nulls;
  std::size_t row = 1;
  while (next_line()) {
    ++row;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size()) {
      throw std::invalid_argument("p-value CSV line " + std::to_string(row) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    }
    const std::string where = "p-value CSV line " + std::to_string(row);
    ids.push_back(cells[static_cast<std::size_t>(c_id)]);
    p.push_back(parse_double(cells[static_cast<std::size_t>(c_p)], where + " p"));
    if (c_pi >= 0) pi.push_back(parse_double(cells[static_cast<std::size_t>(c_pi)], where + " pi"));
    if (c_lambda >= 0) lambda.push_back(parse_double(cells[static_cast<std::size_t>(c_lambda)], where + " lambda"));
    if (c_null >= 0) {
      const auto& v = cells[static_cast<std::size_t>(c_null)];
      if (v != "0" && v != "1") throw std::invalid_argument(where + ": is_null must be 0 or 1");
      nulls.push_back(v == "1");
    }
  }
  const std::size_t m = ids.size();
  if (c_pi < 0) pi.assign(m, m == 0 ? 0.0 : 1.0 / static_cast<double>(m));
  if (c_lambda < 0) lambda.assign(m, 1.0);
  PValueInput out{HypothesisSpace(std::move(ids), std::move(lambda), std::move(pi)), PValueVector(std::move(p)),
                  std::nullopt};
  if (c_null >= 0) out.is_null = std::move(nulls);
  return out;
}

inline PValueInput read_pvalue_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_pvalue_csv(in);
}

}  // namespace stepfdr
