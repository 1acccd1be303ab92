#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/loadcase.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

/// Fixed-step time discretization.
struct TimeGrid {
  double t_end = 0.0;
  double dt = 0.0;
  int n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double t_end_, double dt_) : t_end(t_end_), dt(dt_) {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    n_steps = static_cast<int>(std::llround(t_end / dt));
    if (n_steps < 1 || std::abs(n_steps * dt - t_end) > 1e-9 * t_end)
      throw ValidationError("t_end must be an integer multiple of dt");
  }
  double time(int step) const { return step * dt; }
};

/// Wall-clock breakdown of one TSM run, in seconds.
struct Timing {
  double mean_eval = 0.0;     // deterministic RHS evaluations
  double tangent_eval = 0.0;  // tangent RHS evaluations
  double iv_stats = 0.0;      // internal-variable statistics
  double stress_stats = 0.0;  // stress statistics
  double total() const {
    return mean_eval + tangent_eval + iv_stats + stress_stats;
  }
};

/// Per-step expectation and variance of the tracked quantities.
struct StatSeries {
  std::vector<std::string> names;
  int n_iv = 0;  // leading names are internal-variable quantities
  std::vector<double> times;
  std::vector<std::vector<double>> mean;  // [step][quantity]
  std::vector<std::vector<double>> var;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

/// Staggered explicit Euler integration of the extended material model:
/// both the deterministic and the tangent rates are evaluated at the
/// step-n state, then applied together.
template <class Model>
std::vector<typename Model::State> integrate_extended(const Model& model,
                                                      const LoadCase& load,
                                                      const TimeGrid& grid,
                                                      Timing* timing = nullptr) {
  using State = typename Model::State;
  std::vector<State> traj;
  traj.reserve(grid.n_steps + 1);
  State state = model.initial_state();
  traj.push_back(state);
  State rate = state;
  for (int n = 0; n < grid.n_steps; ++n) {
    const Vec6 eps = strain_at(load, grid.time(n));
    auto t0 = std::chrono::steady_clock::now();
    model.det_rate(state, eps, rate);
    auto t1 = std::chrono::steady_clock::now();
    model.tangent_rate(state, eps, rate);
    if (timing) {
      timing->mean_eval += std::chrono::duration<double>(t1 - t0).count();
      timing->tangent_eval += detail::seconds_since(t1);
    }
    model.apply_det(state, rate, grid.dt);
    model.apply_tangent(state, rate, grid.dt);
    if (!model.state_finite(state)) throw NonFiniteState(n + 1);
    traj.push_back(state);
  }
  return traj;
}

/// Deterministic-only integration (tangents untouched); the callback is
/// invoked for every output row including the initial state.
template <class Model, class Callback>
void integrate_deterministic(const Model& model, const LoadCase& load,
                             const TimeGrid& grid, Callback&& cb) {
  using State = typename Model::State;
  State state = model.initial_state();
  State rate = state;
  cb(0, state, strain_at(load, 0.0));
  for (int n = 0; n < grid.n_steps; ++n) {
    const Vec6 eps = strain_at(load, grid.time(n));
    model.det_rate(state, eps, rate);
    model.apply_det(state, rate, grid.dt);
    if (!model.state_finite(state)) throw NonFiniteState(n + 1);
    cb(n + 1, state, strain_at(load, grid.time(n + 1)));
  }
}

/// Moment-contraction post-processing: expectation from the deterministic
/// trajectory, variance from the tangents contracted with the moment set.
template <class Model>
StatSeries postprocess(const Model& model,
                       const std::vector<typename Model::State>& traj,
                       const LoadCase& load, const TimeGrid& grid,
                       const MomentSet& moments, Timing* timing = nullptr) {
  model.check_moments(moments);
  StatSeries out;
  out.names = model.quantity_names();
  out.n_iv = model.n_iv_quantities();
  const int nq = model.n_quantities();
  const int niv = out.n_iv;
  out.times.resize(traj.size());
  out.mean.assign(traj.size(), std::vector<double>(nq, 0.0));
  out.var.assign(traj.size(), std::vector<double>(nq, 0.0));
  for (std::size_t n = 0; n < traj.size(); ++n) {
    out.times[n] = grid.time(static_cast<int>(n));
    const Vec6 eps = strain_at(load, out.times[n]);
    model.det_quantities(traj[n], eps, out.mean[n].data());
    auto t0 = std::chrono::steady_clock::now();
    model.iv_variances(traj[n], moments, out.var[n].data());
    auto t1 = std::chrono::steady_clock::now();
    model.stress_variances(traj[n], eps, moments, out.var[n].data() + niv);
    if (timing) {
      timing->iv_stats += std::chrono::duration<double>(t1 - t0).count();
      timing->stress_stats += detail::seconds_since(t1);
    }
  }
  return out;
}

}  // namespace tsm
