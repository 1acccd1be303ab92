#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsm/engine.hpp"
#include "tsm/errors.hpp"
#include "tsm/loadcase.hpp"
#include "tsm/monte_carlo.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

struct FdReport {
  double max_rel_err = 0.0;  // worst |fd - tangent| / scale over kept steps
  double scale = 0.0;        // max |tangent contraction| over the run
  int compared_steps = 0;
  int excluded_steps = 0;    // steps near a flow/event mismatch
};

/// Central finite-difference check of the tangent trajectory: perturbs one
/// fluctuation source of the model by +-h along `dir`, reruns the
/// deterministic problem and compares the difference quotient of the
/// internal variables against the tangent contraction along the reference
/// trajectory. Steps where the two perturbed runs disagree on the event
/// indicator (within a +-2 step window) are excluded; the difference
/// quotient is one-sided across such kinks and says nothing about the
/// tangent there.
///
/// `source` in [0, n_sources()) perturbs an elasticity tensor (dir is the
/// perturbation direction); source == n_sources() perturbs the yield limit
/// (dir is ignored).
template <class Model>
FdReport fd_tangent_check(const Model& model, const LoadCase& load,
                          const TimeGrid& grid,
                          const std::vector<typename Model::State>& traj,
                          int source, const Mat6& dir, double h = 0.0) {
  const bool is_yield = source == model.n_sources();
  if (h <= 0.0)
    h = 1e-6 * (is_yield ? model.yield_value() : model.tensor_norm(source));

  const int n_rows = grid.n_steps + 1;
  const int d = model.iv_dim();

  auto run = [&](const Model& m, std::vector<double>& iv,
                 std::vector<char>& flags) {
    iv.resize(std::size_t(n_rows) * d);
    flags.resize(n_rows);
    integrate_deterministic(
        m, load, grid,
        [&](int step, const typename Model::State& s, const Vec6& eps) {
          m.iv_values(s, iv.data() + std::size_t(step) * d);
          flags[step] = m.event_flag(s, eps) ? 1 : 0;
        });
  };

  std::vector<double> iv_p, iv_m;
  std::vector<char> fl_p, fl_m;
  if (is_yield) {
    run(model.perturbed_yield(h), iv_p, fl_p);
    run(model.perturbed_yield(-h), iv_m, fl_m);
  } else {
    run(model.perturbed_tensor(source, h * dir), iv_p, fl_p);
    run(model.perturbed_tensor(source, -h * dir), iv_m, fl_m);
  }

  std::vector<char> excluded(n_rows, 0);
  constexpr int kWindow = 2;
  for (int n = 0; n < n_rows; ++n) {
    if (fl_p[n] == fl_m[n]) continue;
    for (int k = std::max(0, n - kWindow);
         k <= std::min(n_rows - 1, n + kWindow); ++k)
      excluded[k] = 1;
  }

  std::vector<double> pred(std::size_t(n_rows) * d);
  for (int n = 0; n < n_rows; ++n)
    model.tangent_contraction(traj[n], source, dir,
                              pred.data() + std::size_t(n) * d);

  FdReport rep;
  for (double v : pred) rep.scale = std::max(rep.scale, std::abs(v));
  // normalize by the larger of the two derivative magnitudes so the check
  // is invariant under the (tiny) natural units of a per-Pa sensitivity
  double scale = rep.scale;
  double max_abs = 0.0;
  for (int n = 0; n < n_rows; ++n) {
    if (excluded[n]) {
      ++rep.excluded_steps;
      continue;
    }
    ++rep.compared_steps;
    for (int i = 0; i < d; ++i) {
      const std::size_t k = std::size_t(n) * d + i;
      const double fd = (iv_p[k] - iv_m[k]) / (2.0 * h);
      scale = std::max(scale, std::abs(fd));
      max_abs = std::max(max_abs, std::abs(fd - pred[k]));
    }
  }
  rep.max_rel_err = max_abs / std::max(scale, 1e-300);
  return rep;
}

struct SamplingReport {
  double max_rel_std_err = 0.0;  // worst |std_mc - std_pred| / scale
  double max_rel_mean_err = 0.0;
  long long n = 0;
};

/// Validates the moment-contraction statistics at one frozen state:
/// samples the fluctuations directly, pushes them through the linearized
/// quantity map and compares empirical mean/std against the closed-form
/// contraction with the analytic Gaussian moments.
template <class Model>
SamplingReport frozen_state_sampling_check(const Model& model,
                                           const typename Model::State& state,
                                           const Vec6& eps,
                                           const StochasticParams& sp,
                                           long long n_samples,
                                           std::uint64_t base_seed) {
  if (n_samples < 2)
    throw InsufficientSamples("sampling check needs at least 2 samples");
  const MomentSet ms = analytic_gaussian_moments(sp);
  model.check_moments(ms);

  const int nq = model.n_quantities();
  const int niv = model.n_iv_quantities();
  std::vector<double> pred_mean(nq), pred_var(nq);
  model.det_quantities(state, eps, pred_mean.data());
  model.iv_variances(state, ms, pred_var.data());
  model.stress_variances(state, eps, ms, pred_var.data() + niv);

  const int nt = static_cast<int>(sp.tensors.size());
  ParamSampler sampler(sp);
  std::mt19937_64 rng = make_rng(base_seed, kVerifyStream);
  WelfordAccumulator acc(nq);
  std::vector<Mat6> D(nt);
  std::vector<double> row(nq);
  for (long long k = 0; k < n_samples; ++k) {
    const Eigen::VectorXd phi = sampler.sample_phi(rng);
    for (int j = 0; j < nt; ++j)
      D[j] = phi[2 * j] * voigt::j_lambda() + phi[2 * j + 1] * voigt::j_mu();
    const double sy = sp.yield ? phi[2 * nt] : 0.0;
    model.linearized_quantities(state, eps, D.data(), sy, row.data());
    acc.add(row);
  }

  SamplingReport rep;
  rep.n = n_samples;
  // quantities mix units (internal variables vs Pa), so errors are
  // normalized per quantity, with a global floor absorbing rounding on
  // identically-zero predictions
  double std_scale = 0.0, mean_scale = 0.0;
  for (int q = 0; q < nq; ++q) {
    std_scale = std::max(std_scale, std::sqrt(pred_var[q]));
    mean_scale = std::max(mean_scale, std::abs(pred_mean[q]));
  }
  const double floor = std::max(1e-9 * std::max(std_scale, mean_scale),
                                1e-300);
  for (int q = 0; q < nq; ++q) {
    const double std_pred = std::sqrt(pred_var[q]);
    const double std_mc = std::sqrt(acc.variance(q));
    rep.max_rel_std_err =
        std::max(rep.max_rel_std_err,
                 std::abs(std_mc - std_pred) / std::max(std_pred, floor));
    const double mean_denom =
        std::max({std::abs(pred_mean[q]), std_pred, floor});
    rep.max_rel_mean_err =
        std::max(rep.max_rel_mean_err,
                 std::abs(acc.mean(q) - pred_mean[q]) / mean_denom);
  }
  return rep;
}

}  // namespace tsm
