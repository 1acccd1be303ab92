#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

enum class LoadKind { kProportional, kHarmonic, kTriangularCycle, kTable };

/// Prescribed strain path eps(t). Evaluation is pure and side-effect free.
struct LoadCase {
  LoadKind kind = LoadKind::kProportional;
  Vec6 direction = Vec6::Zero();  // unit pattern, strain role
  double amplitude = 0.0;         // peak strain (harmonic / triangular)
  double rate = 0.0;              // strain rate, 1/s (proportional)
  double frequency = 0.0;         // Hz (harmonic)
  double period = 0.0;            // s (triangular cycle)
  std::vector<double> table_t;    // strictly increasing breakpoints
  std::vector<Vec6> table_eps;
};

namespace detail {

/// Triangle wave with unit amplitude and given period: 0 -> +1 at P/4,
/// -1 at 3P/4, back to 0 at P.
inline double triangle_wave(double t, double period) {
  double u = std::fmod(t / period, 1.0);
  if (u < 0.25) return 4.0 * u;
  if (u < 0.75) return 2.0 - 4.0 * u;
  return 4.0 * u - 4.0;
}

}  // namespace detail

inline Vec6 strain_at(const LoadCase& load, double t) {
  switch (load.kind) {
    case LoadKind::kProportional:
      return load.direction * (load.rate * t);
    case LoadKind::kHarmonic:
      return load.direction *
             (load.amplitude * std::sin(2.0 * M_PI * load.frequency * t));
    case LoadKind::kTriangularCycle:
      return load.direction *
             (load.amplitude * detail::triangle_wave(t, load.period));
    case LoadKind::kTable: {
      if (load.table_t.empty()) throw OutOfDomain("empty load table");
      if (t < load.table_t.front() || t > load.table_t.back())
        throw OutOfDomain("time " + std::to_string(t) +
                          " outside load table domain");
      auto it = std::upper_bound(load.table_t.begin(), load.table_t.end(), t);
      if (it == load.table_t.begin()) return load.table_eps.front();
      if (it == load.table_t.end()) return load.table_eps.back();
      std::size_t i = static_cast<std::size_t>(it - load.table_t.begin());
      double t0 = load.table_t[i - 1], t1 = load.table_t[i];
      double w = (t - t0) / (t1 - t0);
      return (1.0 - w) * load.table_eps[i - 1] + w * load.table_eps[i];
    }
  }
  throw OutOfDomain("unknown load kind");
}

/// Loads a table load case from CSV: each row t followed by 1..6 strain
/// components (missing components are zero).
inline LoadCase load_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open load table: " + path);
  LoadCase load;
  load.kind = LoadKind::kTable;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("load table line " + std::to_string(lineno) +
                         ": bad number '" + cell + "'");
      }
    }
    if (vals.size() < 2 || vals.size() > 7)
      throw ParseError("load table line " + std::to_string(lineno) +
                       ": expected 2..7 columns");
    Vec6 eps = Vec6::Zero();
    for (std::size_t c = 1; c < vals.size(); ++c) eps[c - 1] = vals[c];
    if (!load.table_t.empty() && vals[0] <= load.table_t.back())
      throw ParseError("load table line " + std::to_string(lineno) +
                       ": breakpoints must be strictly increasing");
    load.table_t.push_back(vals[0]);
    load.table_eps.push_back(eps);
  }
  if (load.table_t.empty()) throw ParseError("load table is empty: " + path);
  return load;
}

}  // namespace tsm
