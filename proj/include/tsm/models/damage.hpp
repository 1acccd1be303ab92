#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

/// Viscous damage: scalar damage variable d with stiffness decay exp(-d),
/// driven by the undamaged strain energy, plus the 6x6 tangent of d with
/// respect to the fluctuating elasticity tensor.
class DamageModel {
 public:
  int n_sources() const { return 1; }
  bool has_yield_source() const { return false; }
  int iv_dim() const { return 1; }

  struct State {
    double d = 0.0;
    Mat6 I = Mat6::Zero();
  };

  DamageModel(const Mat6& stiffness, double eta) : E0_(stiffness), eta_(eta) {
    if (!(eta > 0.0)) throw ValidationError("damage viscosity must be positive");
  }

  State initial_state() const { return State{}; }

  void det_rate(const State& s, const Vec6& eps, State& rate) const {
    rate.d = std::exp(-s.d) / eta_ * voigt::quad_form(eps, E0_);
  }

  void tangent_rate(const State& s, const Vec6& eps, State& rate) const {
    const double energy2 = eps.dot(E0_ * eps);  // eps.E0.eps = 2 Psi0
    rate.I = std::exp(-s.d) / (2.0 * eta_) *
             (-energy2 * s.I + eps * eps.transpose());
  }

  void apply_det(State& s, const State& rate, double dt) const {
    s.d += dt * rate.d;
  }
  void apply_tangent(State& s, const State& rate, double dt) const {
    s.I += dt * rate.I;
  }

  bool state_finite(const State& s) const {
    return std::isfinite(s.d) && s.I.allFinite();
  }

  // --- verification hooks ---------------------------------------------

  void iv_values(const State& s, double* out) const { out[0] = s.d; }

  void tangent_contraction(const State& s, int /*source*/, const Mat6& dir,
                           double* out) const {
    out[0] = s.I.cwiseProduct(dir).sum();
  }

  DamageModel perturbed_tensor(int /*source*/, const Mat6& delta) const {
    return DamageModel(E0_ + delta, eta_);
  }
  DamageModel perturbed_yield(double /*dy*/) const {
    throw Error("damage model has no yield limit");
  }
  double tensor_norm(int /*source*/) const { return E0_.norm(); }
  double yield_value() const {
    throw Error("damage model has no yield limit");
  }
  bool event_flag(const State&, const Vec6&) const { return false; }

  // --- quantities and statistics --------------------------------------

  int n_quantities() const { return 7; }
  int n_iv_quantities() const { return 1; }
  std::vector<std::string> quantity_names() const {
    return {"d", "sig_x", "sig_y", "sig_z", "sig_yz", "sig_xz", "sig_xy"};
  }

  void det_quantities(const State& s, const Vec6& eps, double* out) const {
    out[0] = s.d;
    const Vec6 sig = std::exp(-s.d) * (E0_ * eps);
    for (int a = 0; a < 6; ++a) out[1 + a] = sig[a];
  }

  void check_moments(const MomentSet& ms) const {
    if (ms.dd.size() != 1)
      throw ShapeMismatch("damage model expects one elasticity source");
  }

  void iv_variances(const State& s, const MomentSet& ms, double* out) const {
    const Vec36 vi = voigt::vec(s.I);
    out[0] = vi.dot(ms.dd[0] * vi);
  }

  void stress_variances(const State& s, const Vec6& eps, const MomentSet& ms,
                        double* out) const {
    for (int a = 0; a < 6; ++a) {
      const Vec36 t = voigt::vec(stress_tangent(s, eps, a));
      out[a] = t.dot(ms.dd[0] * t);
    }
  }

  void linearized_quantities(const State& s, const Vec6& eps, const Mat6* D,
                             double /*sy*/, double* out) const {
    out[0] = s.d + s.I.cwiseProduct(D[0]).sum();
    const Vec6 sig0 = std::exp(-s.d) * (E0_ * eps);
    for (int a = 0; a < 6; ++a)
      out[1 + a] = sig0[a] + stress_tangent(s, eps, a).cwiseProduct(D[0]).sum();
  }

  const Mat6& stiffness() const { return E0_; }
  double eta() const { return eta_; }

 private:
  /// T_a[b][c] = exp(-d) (delta_ab eps_c - I_bc (E0 eps)_a)
  Mat6 stress_tangent(const State& s, const Vec6& eps, int a) const {
    const double f = std::exp(-s.d);
    Mat6 t = -f * (E0_.row(a) * eps)(0) * s.I;
    t.row(a) += f * eps.transpose();
    return t;
  }

  Mat6 E0_;
  double eta_;
};

}  // namespace tsm
