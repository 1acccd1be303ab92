#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsm/errors.hpp"
#include "tsm/loadcase.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/engine.hpp"
#include "tsm/models/damage.hpp"
#include "tsm/models/phase.hpp"
#include "tsm/models/viscoplastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

enum class ModelKind { kDamage, kPhase, kViscoplastic };
enum class Solver { kTsm, kMc, kBoth };

/// Fully validated run description: model, random material parameters,
/// load path, time grid and solver settings.
struct RunConfig {
  ModelKind model = ModelKind::kDamage;
  StochasticParams sp;

  double eta = 0.0;                    // viscosity of the evolution law
  double wall = 10.0;                  // phase model wall energy scale
  std::vector<Vec6> eigenstrains;      // phase model, one per phase
  std::vector<double> init_fractions;  // phase model initial fractions

  LoadCase load;
  TimeGrid grid;

  Solver solver = Solver::kBoth;
  long long mc_n = 1000;
  long long moment_samples = 1000000;
  std::uint64_t seed = 0;
  int workers = 0;       // 0 = available parallelism
  int mc_store = 0;      // raw MC trajectories to keep (<= 20)
  std::string out_dir = "out";
};

namespace detail {

using json = nlohmann::json;

inline FluctuatingScalar parse_scalar(const json& j, const std::string& key,
                                      std::vector<std::string>& errs) {
  FluctuatingScalar s;
  if (!j.contains(key)) {
    errs.push_back("missing key '" + key + "'");
    return s;
  }
  const json& v = j.at(key);
  if (v.is_number()) {
    s.mean = v.get<double>();
    return s;
  }
  if (!v.is_object() || !v.contains("mean")) {
    errs.push_back("'" + key + "' must be a number or {mean, std}");
    return s;
  }
  s.mean = v.at("mean").get<double>();
  s.std = v.value("std", 0.0);
  if (s.std < 0.0) errs.push_back("'" + key + ".std' must be >= 0");
  return s;
}

inline Vec6 parse_vec6(const json& v, const std::string& key,
                       std::vector<std::string>& errs) {
  Vec6 out = Vec6::Zero();
  if (!v.is_array() || v.size() != 6) {
    errs.push_back("'" + key + "' must be an array of 6 numbers");
    return out;
  }
  for (int i = 0; i < 6; ++i) out[i] = v.at(i).get<double>();
  return out;
}

inline LoadCase parse_load(const json& j, std::vector<std::string>& errs) {
  LoadCase load;
  if (!j.is_object()) {
    errs.push_back("'load' must be an object");
    return load;
  }
  const std::string kind = j.value("kind", "");
  if (j.contains("direction"))
    load.direction = parse_vec6(j.at("direction"), "load.direction", errs);
  if (kind == "proportional") {
    load.kind = LoadKind::kProportional;
    if (!j.contains("rate")) errs.push_back("proportional load needs 'rate'");
    load.rate = j.value("rate", 0.0);
  } else if (kind == "harmonic") {
    load.kind = LoadKind::kHarmonic;
    if (!j.contains("amplitude") || !j.contains("frequency"))
      errs.push_back("harmonic load needs 'amplitude' and 'frequency'");
    load.amplitude = j.value("amplitude", 0.0);
    load.frequency = j.value("frequency", 0.0);
    if (load.frequency <= 0.0 && j.contains("frequency"))
      errs.push_back("'load.frequency' must be > 0");
  } else if (kind == "triangular_cycle") {
    load.kind = LoadKind::kTriangularCycle;
    if (!j.contains("amplitude") || !j.contains("period"))
      errs.push_back("triangular_cycle load needs 'amplitude' and 'period'");
    load.amplitude = j.value("amplitude", 0.0);
    load.period = j.value("period", 0.0);
    if (load.period <= 0.0 && j.contains("period"))
      errs.push_back("'load.period' must be > 0");
  } else if (kind == "table") {
    if (!j.contains("table")) {
      errs.push_back("table load needs 'table' (CSV path)");
    } else {
      try {
        load = load_table_csv(j.at("table").get<std::string>());
      } catch (const Error& e) {
        errs.push_back(e.what());
      }
    }
  } else {
    errs.push_back("'load.kind' must be proportional, harmonic, "
                   "triangular_cycle or table");
  }
  return load;
}

inline CorrelationSpec parse_correlation(const json& root,
                                         std::vector<std::string>& errs) {
  CorrelationSpec spec;
  if (!root.contains("correlation")) return spec;
  const json& j = root.at("correlation");
  const std::string mode = j.value("mode", "independent");
  if (mode == "independent") {
    spec.mode = CorrelationMode::kIndependent;
  } else if (mode == "fully_dependent") {
    spec.mode = CorrelationMode::kFullyDependent;
  } else if (mode == "matrix") {
    spec.mode = CorrelationMode::kMatrix;
    if (!j.contains("matrix") || !j.at("matrix").is_array()) {
      errs.push_back("correlation mode 'matrix' needs a 'matrix' array");
      return spec;
    }
    const json& m = j.at("matrix");
    const std::size_t n = m.size();
    spec.matrix.resize(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      if (!m.at(r).is_array() || m.at(r).size() != n) {
        errs.push_back("'correlation.matrix' must be square");
        return spec;
      }
      for (std::size_t c = 0; c < n; ++c)
        spec.matrix(r, c) = m.at(r).at(c).get<double>();
    }
  } else {
    errs.push_back("'correlation.mode' must be independent, fully_dependent "
                   "or matrix");
  }
  return spec;
}

}  // namespace detail

/// Parses and validates a JSON run configuration. Throws ParseError on
/// malformed text and ValidationError listing every violated constraint.
inline RunConfig parse_config(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }

  std::vector<std::string> errs;
  RunConfig cfg;

  const std::string model = j.value("model", "");
  if (model == "damage") {
    cfg.model = ModelKind::kDamage;
  } else if (model == "phase") {
    cfg.model = ModelKind::kPhase;
  } else if (model == "viscoplastic") {
    cfg.model = ModelKind::kViscoplastic;
  } else {
    errs.push_back("'model' must be damage, phase or viscoplastic");
  }

  if (!j.contains("material") || !j.at("material").is_object()) {
    errs.push_back("missing 'material' object");
  } else {
    const detail::json& mat = j.at("material");
    cfg.eta = mat.value("eta", 0.0);
    if (!mat.contains("eta")) errs.push_back("missing key 'material.eta'");
    if (cfg.eta <= 0.0 && mat.contains("eta"))
      errs.push_back("'material.eta' must be > 0");

    if (model == "phase") {
      if (!mat.contains("phases") || !mat.at("phases").is_array() ||
          mat.at("phases").size() < 2) {
        errs.push_back("phase model needs 'material.phases' (>= 2 entries)");
      } else {
        for (const detail::json& ph : mat.at("phases")) {
          StochasticParams::TensorSource src;
          src.lambda = detail::parse_scalar(ph, "lambda", errs);
          src.mu = detail::parse_scalar(ph, "mu", errs);
          cfg.sp.tensors.push_back(src);
          Vec6 es = Vec6::Zero();
          if (ph.contains("eigenstrain"))
            es = detail::parse_vec6(ph.at("eigenstrain"), "eigenstrain", errs);
          cfg.eigenstrains.push_back(es);
        }
      }
      cfg.wall = mat.value("wall", 10.0);
      if (cfg.wall < 0.0) errs.push_back("'material.wall' must be >= 0");
      if (mat.contains("initial_fractions") &&
          mat.at("initial_fractions").is_array()) {
        for (const detail::json& f : mat.at("initial_fractions"))
          cfg.init_fractions.push_back(f.get<double>());
        if (cfg.init_fractions.size() != cfg.sp.tensors.size())
          errs.push_back("'material.initial_fractions' needs one entry "
                         "per phase");
        double sum = 0.0;
        for (double f : cfg.init_fractions) {
          if (!(f > 0.0 && f < 1.0))
            errs.push_back("initial fractions must lie in (0,1)");
          sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          errs.push_back("initial fractions must sum to 1");
      } else {
        errs.push_back("phase model needs 'material.initial_fractions'");
      }
    } else {
      StochasticParams::TensorSource src;
      src.lambda = detail::parse_scalar(mat, "lambda", errs);
      src.mu = detail::parse_scalar(mat, "mu", errs);
      cfg.sp.tensors.push_back(src);
      if (model == "viscoplastic") {
        cfg.sp.yield = detail::parse_scalar(mat, "sigma_y", errs);
        if (cfg.sp.yield->mean <= 0.0)
          errs.push_back("'material.sigma_y' mean must be > 0");
      } else if (mat.contains("sigma_y")) {
        errs.push_back("'material.sigma_y' is only valid for viscoplastic");
      }
    }
  }

  cfg.sp.correlation = detail::parse_correlation(j, errs);

  if (!j.contains("load")) {
    errs.push_back("missing 'load' object");
  } else {
    cfg.load = detail::parse_load(j.at("load"), errs);
  }

  if (!j.contains("grid") || !j.at("grid").is_object()) {
    errs.push_back("missing 'grid' object with 't_end' and 'dt'");
  } else {
    const double t_end = j.at("grid").value("t_end", 0.0);
    const double dt = j.at("grid").value("dt", 0.0);
    try {
      cfg.grid = TimeGrid(t_end, dt);
    } catch (const ValidationError& e) {
      errs.push_back(e.what());
    }
  }

  const std::string solver = j.value("solver", "both");
  if (solver == "tsm") {
    cfg.solver = Solver::kTsm;
  } else if (solver == "mc") {
    cfg.solver = Solver::kMc;
  } else if (solver == "both") {
    cfg.solver = Solver::kBoth;
  } else {
    errs.push_back("'solver' must be tsm, mc or both");
  }

  cfg.mc_n = j.value("mc_n", 1000LL);
  if (cfg.mc_n < 1) errs.push_back("'mc_n' must be >= 1");
  cfg.moment_samples = j.value("moment_samples", 1000000LL);
  if (cfg.moment_samples < 10000)
    errs.push_back("'moment_samples' must be >= 10000");
  cfg.seed = j.value("seed", std::uint64_t(0));
  cfg.workers = j.value("workers", 0);
  if (cfg.workers < 0) errs.push_back("'workers' must be >= 0");
  cfg.mc_store = j.value("mc_store", 0);
  if (cfg.mc_store < 0 || cfg.mc_store > 20)
    errs.push_back("'mc_store' must be in [0, 20]");
  cfg.out_dir = j.value("output", std::string("out"));

  // correlation shape is validated against the final scalar count
  if (errs.empty()) {
    try {
      detail::correlation_matrix(cfg.sp);
      detail::validate_representable(cfg.sp);
    } catch (const Error& e) {
      errs.push_back(e.what());
    }
  }

  if (!errs.empty()) {
    std::ostringstream msg;
    msg << "invalid config (" << errs.size() << " problem"
        << (errs.size() == 1 ? "" : "s") << "):";
    for (const std::string& e : errs) msg << "\n  - " << e;
    throw ValidationError(msg.str());
  }

  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Normalized JSON echo of the effective configuration (defaults filled,
/// CLI overrides applied); written next to the results for traceability.
inline std::string config_echo(const RunConfig& cfg) {
  using detail::json;
  json j;
  j["model"] = cfg.model == ModelKind::kDamage        ? "damage"
               : cfg.model == ModelKind::kPhase       ? "phase"
                                                      : "viscoplastic";
  json mat;
  mat["eta"] = cfg.eta;
  auto scalar = [](const FluctuatingScalar& s) {
    return json{{"mean", s.mean}, {"std", s.std}};
  };
  if (cfg.model == ModelKind::kPhase) {
    json phases = json::array();
    for (std::size_t i = 0; i < cfg.sp.tensors.size(); ++i) {
      json ph;
      ph["lambda"] = scalar(cfg.sp.tensors[i].lambda);
      ph["mu"] = scalar(cfg.sp.tensors[i].mu);
      ph["eigenstrain"] = std::vector<double>(
          cfg.eigenstrains[i].data(), cfg.eigenstrains[i].data() + 6);
      phases.push_back(ph);
    }
    mat["phases"] = phases;
    mat["wall"] = cfg.wall;
    mat["initial_fractions"] = cfg.init_fractions;
  } else {
    mat["lambda"] = scalar(cfg.sp.tensors[0].lambda);
    mat["mu"] = scalar(cfg.sp.tensors[0].mu);
    if (cfg.sp.yield) mat["sigma_y"] = scalar(*cfg.sp.yield);
  }
  j["material"] = mat;

  json corr;
  switch (cfg.sp.correlation.mode) {
    case CorrelationMode::kIndependent:
      corr["mode"] = "independent";
      break;
    case CorrelationMode::kFullyDependent:
      corr["mode"] = "fully_dependent";
      break;
    case CorrelationMode::kMatrix: {
      corr["mode"] = "matrix";
      json rows = json::array();
      for (int r = 0; r < cfg.sp.correlation.matrix.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < cfg.sp.correlation.matrix.cols(); ++c)
          row.push_back(cfg.sp.correlation.matrix(r, c));
        rows.push_back(row);
      }
      corr["matrix"] = rows;
      break;
    }
  }
  j["correlation"] = corr;

  json load;
  load["direction"] =
      std::vector<double>(cfg.load.direction.data(), cfg.load.direction.data() + 6);
  switch (cfg.load.kind) {
    case LoadKind::kProportional:
      load["kind"] = "proportional";
      load["rate"] = cfg.load.rate;
      break;
    case LoadKind::kHarmonic:
      load["kind"] = "harmonic";
      load["amplitude"] = cfg.load.amplitude;
      load["frequency"] = cfg.load.frequency;
      break;
    case LoadKind::kTriangularCycle:
      load["kind"] = "triangular_cycle";
      load["amplitude"] = cfg.load.amplitude;
      load["period"] = cfg.load.period;
      break;
    case LoadKind::kTable: {
      load["kind"] = "table";
      load.erase("direction");
      load["t"] = cfg.load.table_t;
      json eps = json::array();
      for (const Vec6& e : cfg.load.table_eps)
        eps.push_back(std::vector<double>(e.data(), e.data() + 6));
      load["eps"] = eps;
      break;
    }
  }
  j["load"] = load;

  j["grid"] = json{{"t_end", cfg.grid.t_end}, {"dt", cfg.grid.dt}};
  j["solver"] = cfg.solver == Solver::kTsm  ? "tsm"
                : cfg.solver == Solver::kMc ? "mc"
                                            : "both";
  j["mc_n"] = cfg.mc_n;
  j["moment_samples"] = cfg.moment_samples;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["mc_store"] = cfg.mc_store;
  j["output"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// model construction from a parameter realization

inline DamageModel make_damage(const RunConfig& cfg,
                               const ParamRealization& r) {
  return DamageModel(voigt::isotropic_stiffness(r.lambda[0], r.mu[0]),
                     cfg.eta);
}

inline PhaseModel make_phase(const RunConfig& cfg, const ParamRealization& r) {
  std::vector<PhaseModel::Phase> phases(cfg.sp.tensors.size());
  Eigen::VectorXd chi0(static_cast<int>(phases.size()));
  for (std::size_t i = 0; i < phases.size(); ++i) {
    phases[i].E = voigt::isotropic_stiffness(r.lambda[i], r.mu[i]);
    phases[i].eigenstrain = cfg.eigenstrains[i];
    const double f = cfg.init_fractions[i];
    chi0[static_cast<int>(i)] = std::log(f / (1.0 - f));
  }
  return PhaseModel(std::move(phases), cfg.eta, cfg.wall, chi0);
}

inline ViscoplasticModel make_viscoplastic(const RunConfig& cfg,
                                           const ParamRealization& r) {
  return ViscoplasticModel(voigt::isotropic_stiffness(r.lambda[0], r.mu[0]),
                           *r.sigma_y, cfg.eta);
}

}  // namespace tsm
