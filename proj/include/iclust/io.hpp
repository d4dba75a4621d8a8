#pragma once

// Pattern CSV and mixture-kernel JSON.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "iclust/core.hpp"
#include "iclust/mixture.hpp"

namespace iclust {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string coordinate_name(int k) {
  static const char* names[] = {"x", "y", "z"};
  return k < 3 ? names[k] : "x" + std::to_string(k + 1);
}

/// Header `x,y` (d = 2), one point per row, 17 significant digits.
inline void write_pattern_csv(std::ostream& os, const PointPattern& x) {
  for (int k = 0; k < x.dim(); ++k) os << (k ? "," : "") << coordinate_name(k);
  os << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = x[i];
    for (int k = 0; k < x.dim(); ++k) os << (k ? "," : "") << format_double(p[k]);
    os << '\n';
  }
}

inline PointPattern read_pattern_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DomainError("pattern CSV: missing header");
  const int dim = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  PointPattern out(dim);
  std::vector<double> p(static_cast<std::size_t>(dim));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (int k = 0; k < dim; ++k) {
      if (!std::getline(row, cell, ',')) throw DomainError("pattern CSV: short row");
      p[static_cast<std::size_t>(k)] = std::stod(cell);
    }
    out.push_back(p);
  }
  return out;
}

inline nlohmann::json kernel_to_json(const MixtureKernel& k) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : k.components()) comps.push_back({{"weight", c.weight}, {"variance", c.variance}});
  return {{"constant", k.constant()}, {"dirac", k.dirac()}, {"components", comps}, {"dim", k.dim()}};
}

inline MixtureKernel kernel_from_json(const nlohmann::json& j) {
  MixtureKernel k(j.at("dim").get<int>());
  k.set_constant(j.value("constant", 0.0));
  k.set_dirac(j.value("dirac", 0.0));
  for (const auto& c : j.value("components", nlohmann::json::array())) {
    k.add_gaussian(c.at("weight").get<double>(), c.at("variance").get<double>());
  }
  return k;
}

}  // namespace iclust
