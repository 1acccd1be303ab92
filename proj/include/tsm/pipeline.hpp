#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsm/config.hpp"
#include "tsm/engine.hpp"
#include "tsm/errors.hpp"
#include "tsm/monte_carlo.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/verification.hpp"

namespace tsm {

struct PipelineResult {
  bool ran_tsm = false;
  bool ran_mc = false;
  StatSeries tsm;
  Timing timing;
  double tsm_wall = 0.0;  // integration + post-processing, seconds
  double moments_wall = 0.0;
  MCStats mc;
  double mc_wall = 0.0;
  MomentSet moments;
};

namespace detail {

inline double wall_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

template <class Model, class Factory>
PipelineResult run_pipeline_impl(const RunConfig& cfg, const Factory& make) {
  PipelineResult res;
  if (cfg.solver != Solver::kMc) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      std::mt19937_64 rng = make_rng(cfg.seed, kMomentStream);
      res.moments = estimate_moments(cfg.sp, cfg.moment_samples, rng);
      res.moments_wall = wall_since(t0);
    } catch (const Error& e) {
      throw Error(std::string("pre-processing: ") + e.what());
    }
    try {
      const Model model = make(mean_realization(cfg.sp));
      const auto t0 = std::chrono::steady_clock::now();
      const auto traj =
          integrate_extended(model, cfg.load, cfg.grid, &res.timing);
      res.tsm = postprocess(model, traj, cfg.load, cfg.grid, res.moments,
                            &res.timing);
      res.tsm_wall = wall_since(t0);
      res.ran_tsm = true;
    } catch (const Error& e) {
      throw Error(std::string("tsm: ") + e.what());
    }
  }
  if (cfg.solver != Solver::kTsm) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      res.mc = run_mc<Model>(make, cfg.sp, cfg.load, cfg.grid, cfg.mc_n,
                             cfg.seed, cfg.workers, cfg.mc_store);
      res.mc_wall = wall_since(t0);
      res.ran_mc = true;
    } catch (const Error& e) {
      throw Error(std::string("mc: ") + e.what());
    }
  }
  return res;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_stats_csv(const std::string& path, const StatSeries& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# columns: t";
  for (const std::string& n : s.names) out << ", mean_" << n << ", std_" << n;
  out << "\n";
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    out << fmt(s.times[r]);
    for (std::size_t q = 0; q < s.names.size(); ++q) {
      const double var = s.var[r][q];
      out << ',' << fmt(s.mean[r][q]) << ','
          << fmt(var > 0.0 ? std::sqrt(var) : 0.0);
    }
    out << "\n";
  }
}

/// compare.csv: per-step TSM-minus-MC deltas with the MC standard errors
/// that bracket them.
inline void write_compare_csv(const std::string& path, const StatSeries& tsm,
                              const MCStats& mc) {
  const SESeries se = mc_standard_error(mc);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# columns: t";
  for (const std::string& n : tsm.names)
    out << ", dmean_" << n << ", se_mean_" << n << ", dstd_" << n
        << ", se_std_" << n;
  out << "\n# dmean/dstd = tsm - mc; se_* = MC standard errors\n";
  for (std::size_t r = 0; r < tsm.times.size(); ++r) {
    out << fmt(tsm.times[r]);
    for (std::size_t q = 0; q < tsm.names.size(); ++q) {
      const double std_t = tsm.var[r][q] > 0.0 ? std::sqrt(tsm.var[r][q]) : 0.0;
      const double std_m =
          mc.stats.var[r][q] > 0.0 ? std::sqrt(mc.stats.var[r][q]) : 0.0;
      out << ',' << fmt(tsm.mean[r][q] - mc.stats.mean[r][q]) << ','
          << fmt(se.mean_se[r][q]) << ',' << fmt(std_t - std_m) << ','
          << fmt(se.std_se[r][q]);
    }
    out << "\n";
  }
}

inline void write_timing(const std::string& path, const PipelineResult& res) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(6);
  if (res.ran_tsm) {
    out << "mean_eval_s " << res.timing.mean_eval << "\n";
    out << "tangent_eval_s " << res.timing.tangent_eval << "\n";
    out << "iv_stats_s " << res.timing.iv_stats << "\n";
    out << "stress_stats_s " << res.timing.stress_stats << "\n";
    out << "tsm_total_s " << res.tsm_wall << "\n";
    out << "moment_estimation_s " << res.moments_wall << "\n";
  }
  if (res.ran_mc) out << "mc_total_s " << res.mc_wall << "\n";
  if (res.ran_tsm && res.ran_mc && res.tsm_wall > 0.0)
    out << "speedup " << res.mc_wall / res.tsm_wall << "\n";
}

}  // namespace detail

inline PipelineResult run_pipeline(const RunConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::kDamage:
      return detail::run_pipeline_impl<DamageModel>(
          cfg, [&](const ParamRealization& r) { return make_damage(cfg, r); });
    case ModelKind::kPhase:
      return detail::run_pipeline_impl<PhaseModel>(
          cfg, [&](const ParamRealization& r) { return make_phase(cfg, r); });
    case ModelKind::kViscoplastic:
      return detail::run_pipeline_impl<ViscoplasticModel>(
          cfg, [&](const ParamRealization& r) {
            return make_viscoplastic(cfg, r);
          });
  }
  throw ValidationError("unknown model kind");
}

/// Writes all artifacts of one run into out_dir: tsm.csv/mc.csv,
/// compare.csv (when both solvers ran), timing.txt and config.echo.
inline void write_artifacts(const RunConfig& cfg, const PipelineResult& res) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);
  if (res.ran_tsm) detail::write_stats_csv((dir / "tsm.csv").string(), res.tsm);
  if (res.ran_mc)
    detail::write_stats_csv((dir / "mc.csv").string(), res.mc.stats);
  if (res.ran_tsm && res.ran_mc && res.mc.n >= 2)
    detail::write_compare_csv((dir / "compare.csv").string(), res.tsm, res.mc);
  detail::write_timing((dir / "timing.txt").string(), res);
  std::ofstream echo(dir / "config.echo");
  if (!echo) throw Error("cannot write config.echo");
  echo << config_echo(cfg);
}

// ---------------------------------------------------------------------------
// verify: independent oracles against the configured model

struct VerifyReport {
  struct Entry {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string note;
  };
  std::vector<Entry> entries;
  bool degenerate = false;  // all fluctuations zero

  bool pass() const {
    for (const Entry& e : entries)
      if (!e.pass) return false;
    return true;
  }

  std::string text() const {
    std::ostringstream out;
    if (degenerate) out << "degenerate: zero fluctuations\n";
    for (const Entry& e : entries) {
      out << (e.pass ? "pass" : "FAIL") << "  " << e.name << "  value="
          << e.value << "  tol=" << e.tol;
      if (!e.note.empty()) out << "  (" << e.note << ")";
      out << "\n";
    }
    out << (pass() ? "verification passed" : "verification FAILED") << "\n";
    return out.str();
  }
};

namespace detail {

inline Mat6 random_symmetric_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat6 a;
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) a(i, j) = a(j, i) = normal(rng);
  return a / a.norm();
}

template <class Model, class Factory>
VerifyReport run_verify_impl(const RunConfig& cfg, const Factory& make,
                             long long sampling_n) {
  VerifyReport rep;
  rep.degenerate = true;
  for (int i = 0; i < cfg.sp.scalar_count(); ++i)
    if (cfg.sp.scalar(i).std > 0.0) rep.degenerate = false;

  const Model model = make(mean_realization(cfg.sp));
  const auto traj = integrate_extended(model, cfg.load, cfg.grid);

  std::mt19937_64 rng = make_rng(cfg.seed, kVerifyStream);
  for (int s = 0; s < model.n_sources(); ++s) {
    const Mat6 dir = random_symmetric_direction(rng);
    const FdReport fd =
        fd_tangent_check(model, cfg.load, cfg.grid, traj, s, dir);
    VerifyReport::Entry e;
    e.name = "fd_tangent source " + std::to_string(s);
    e.value = fd.max_rel_err;
    e.tol = 1e-3;
    e.pass = fd.max_rel_err <= e.tol;
    if (fd.excluded_steps > 0)
      e.note = std::to_string(fd.excluded_steps) + " nonsmooth steps excluded";
    rep.entries.push_back(e);
  }
  if (model.has_yield_source()) {
    const FdReport fd = fd_tangent_check(model, cfg.load, cfg.grid, traj,
                                         model.n_sources(), Mat6::Zero());
    VerifyReport::Entry e;
    e.name = "fd_tangent yield";
    e.value = fd.max_rel_err;
    e.tol = 1e-3;
    e.pass = fd.max_rel_err <= e.tol;
    if (fd.excluded_steps > 0)
      e.note = std::to_string(fd.excluded_steps) + " nonsmooth steps excluded";
    rep.entries.push_back(e);
  }

  for (int k = 0; k < 5; ++k) {
    const int step = static_cast<int>(
        (static_cast<long long>(cfg.grid.n_steps) * k) / 4);
    const Vec6 eps = strain_at(cfg.load, cfg.grid.time(step));
    const SamplingReport sr = frozen_state_sampling_check(
        model, traj[step], eps, cfg.sp, sampling_n, cfg.seed);
    VerifyReport::Entry e;
    e.name = "frozen sampling t=" + std::to_string(cfg.grid.time(step));
    e.value = std::max(sr.max_rel_std_err, sr.max_rel_mean_err);
    e.tol = 0.02;
    e.pass = e.value <= e.tol;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace detail

inline VerifyReport run_verify(const RunConfig& cfg,
                               long long sampling_n = 200000) {
  switch (cfg.model) {
    case ModelKind::kDamage:
      return detail::run_verify_impl<DamageModel>(
          cfg, [&](const ParamRealization& r) { return make_damage(cfg, r); },
          sampling_n);
    case ModelKind::kPhase:
      return detail::run_verify_impl<PhaseModel>(
          cfg, [&](const ParamRealization& r) { return make_phase(cfg, r); },
          sampling_n);
    case ModelKind::kViscoplastic:
      return detail::run_verify_impl<ViscoplasticModel>(
          cfg,
          [&](const ParamRealization& r) { return make_viscoplastic(cfg, r); },
          sampling_n);
  }
  throw ValidationError("unknown model kind");
}

}  // namespace tsm
