#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

/// Perzyna-type viscoplasticity with a von Mises overstress: the plastic
/// strain flows along the stress deviator once its tensor norm exceeds the
/// yield limit. Fluctuation sources are the elasticity tensor and the
/// yield limit; the tangents are gated by the flow indicator of the
/// deterministic trajectory.
class ViscoplasticModel {
 public:
  using Mat6x36 = Eigen::Matrix<double, 6, 36>;

  struct State {
    Vec6 evp = Vec6::Zero();         // plastic strain, engineering shear
    Mat6x36 IE = Mat6x36::Zero();    // d(evp_a)/d(E_st), column 6s+t
    Vec6 IY = Vec6::Zero();          // d(evp_a)/d(sigma_y)
  };

  ViscoplasticModel(const Mat6& stiffness, double sigma_y, double eta)
      : E0_(stiffness), sigy_(sigma_y), eta_(eta) {
    if (!(eta_ > 0.0)) throw ValidationError("viscosity must be positive");
    if (!(sigy_ > 0.0)) throw ValidationError("yield limit must be positive");
  }

  int n_sources() const { return 1; }
  bool has_yield_source() const { return true; }
  int iv_dim() const { return 6; }

  State initial_state() const { return State{}; }

  void det_rate(const State& s, const Vec6& eps, State& rate) const {
    const Flow f = flow(s, eps);
    rate.evp = f.active ? Vec6(f.over / (eta_ * f.ns) * f.dev)
                        : Vec6(Vec6::Zero());
  }

  void tangent_rate(const State& s, const Vec6& eps, State& rate) const {
    const Flow f = flow(s, eps);
    if (!f.active) {
      rate.IE.setZero();
      rate.IY.setZero();
      return;
    }
    const Mat6& S = voigt::deviator_op();
    const Vec6 ws = voigt::shear_weights().cwiseProduct(f.dev);  // W s

    // elasticity source: stress variation per component of E
    Mat6x36 V = -(E0_ * s.IE);  // explicit part added below
    const Vec6 w = eps - s.evp;
    for (int a = 0; a < 6; ++a)
      for (int t = 0; t < 6; ++t) V(a, 6 * a + t) += w[t];
    const Mat6x36 DS = S * V;
    const Eigen::Matrix<double, 1, 36> dns = (ws.transpose() * DS) / f.ns;
    rate.IE = (f.dev / f.ns) * dns +
              (f.over / f.ns) * (DS - (f.dev / f.ns) * dns);
    rate.IE /= eta_;

    // yield source: d(sigma)/d(sigma_y) = -E IY, d(sigma_y)/d(sigma_y) = 1
    const Vec6 dsy = S * Vec6(-(E0_ * s.IY));
    const double dnsy = ws.dot(dsy) / f.ns;
    rate.IY = ((dnsy - 1.0) / f.ns) * f.dev +
              (f.over / f.ns) * (dsy - (dnsy / f.ns) * f.dev);
    rate.IY /= eta_;
  }

  void apply_det(State& s, const State& rate, double dt) const {
    s.evp += dt * rate.evp;
  }
  void apply_tangent(State& s, const State& rate, double dt) const {
    s.IE += dt * rate.IE;
    s.IY += dt * rate.IY;
  }

  bool state_finite(const State& s) const {
    return s.evp.allFinite() && s.IE.allFinite() && s.IY.allFinite();
  }

  // --- verification hooks ---------------------------------------------

  void iv_values(const State& s, double* out) const {
    for (int a = 0; a < 6; ++a) out[a] = s.evp[a];
  }

  /// source 0: IE : dir; source 1 (== n_sources()): yield tangent IY.
  void tangent_contraction(const State& s, int source, const Mat6& dir,
                           double* out) const {
    if (source == 0) {
      const Vec6 c = s.IE * voigt::vec(dir);
      for (int a = 0; a < 6; ++a) out[a] = c[a];
    } else {
      for (int a = 0; a < 6; ++a) out[a] = s.IY[a];
    }
  }

  ViscoplasticModel perturbed_tensor(int /*source*/, const Mat6& delta) const {
    return ViscoplasticModel(E0_ + delta, sigy_, eta_);
  }
  ViscoplasticModel perturbed_yield(double dy) const {
    return ViscoplasticModel(E0_, sigy_ + dy, eta_);
  }
  double tensor_norm(int /*source*/) const { return E0_.norm(); }
  double yield_value() const { return sigy_; }

  /// True while the overstress drives plastic flow; used to exclude
  /// nonsmooth onset steps from finite-difference comparisons.
  bool event_flag(const State& s, const Vec6& eps) const {
    return flow(s, eps).active;
  }

  // --- quantities and statistics --------------------------------------

  int n_quantities() const { return 12; }
  int n_iv_quantities() const { return 6; }
  std::vector<std::string> quantity_names() const {
    return {"evp_x",  "evp_y",  "evp_z",  "evp_yz", "evp_xz", "evp_xy",
            "sig_x",  "sig_y",  "sig_z",  "sig_yz", "sig_xz", "sig_xy"};
  }

  void det_quantities(const State& s, const Vec6& eps, double* out) const {
    const Vec6 sig = E0_ * (eps - s.evp);
    for (int a = 0; a < 6; ++a) out[a] = s.evp[a];
    for (int a = 0; a < 6; ++a) out[6 + a] = sig[a];
  }

  void check_moments(const MomentSet& ms) const {
    if (ms.dd.size() != 1)
      throw ShapeMismatch("viscoplastic model expects one elasticity source");
    if (!ms.has_yield)
      throw ShapeMismatch("viscoplastic model needs yield moments");
  }

  void iv_variances(const State& s, const MomentSet& ms, double* out) const {
    const Vec36 vyd = voigt::vec(ms.yd);
    for (int a = 0; a < 6; ++a) {
      const Vec36 t = s.IE.row(a).transpose();
      out[a] = t.dot(ms.dd[0] * t) + s.IY[a] * s.IY[a] * ms.yy +
               2.0 * s.IY[a] * vyd.dot(t);
    }
  }

  void stress_variances(const State& s, const Vec6& eps, const MomentSet& ms,
                        double* out) const {
    const Mat6x36 TE = stress_tangent_e(s, eps);
    const Vec6 TY = -(E0_ * s.IY);
    const Vec36 vyd = voigt::vec(ms.yd);
    for (int a = 0; a < 6; ++a) {
      const Vec36 t = TE.row(a).transpose();
      out[a] = t.dot(ms.dd[0] * t) + TY[a] * TY[a] * ms.yy +
               2.0 * TY[a] * vyd.dot(t);
    }
  }

  void linearized_quantities(const State& s, const Vec6& eps, const Mat6* D,
                             double sy, double* out) const {
    const Vec36 vd = voigt::vec(D[0]);
    const Vec6 devp = s.IE * vd + sy * s.IY;
    const Vec6 sig0 = E0_ * (eps - s.evp);
    const Vec6 dsig = stress_tangent_e(s, eps) * vd - sy * (E0_ * s.IY);
    for (int a = 0; a < 6; ++a) out[a] = s.evp[a] + devp[a];
    for (int a = 0; a < 6; ++a) out[6 + a] = sig0[a] + dsig[a];
  }

  const Mat6& stiffness() const { return E0_; }
  double eta() const { return eta_; }

 private:
  struct Flow {
    Vec6 dev;     // deviator of the stress
    double ns;    // tensor norm of the deviator
    double over;  // overstress ns - sigma_y
    bool active;
  };

  Flow flow(const State& s, const Vec6& eps) const {
    Flow f;
    f.dev = voigt::deviator(E0_ * (eps - s.evp));
    f.ns = voigt::stress_norm(f.dev);
    f.over = f.ns - sigy_;
    f.active = f.over > 0.0;
    return f;
  }

  /// T^E(a, 6s+t) = d(sigma_a)/d(E_st) = delta_as (eps-evp)_t - (E IE)_a,st
  Mat6x36 stress_tangent_e(const State& s, const Vec6& eps) const {
    Mat6x36 te = -(E0_ * s.IE);
    const Vec6 w = eps - s.evp;
    for (int a = 0; a < 6; ++a)
      for (int t = 0; t < 6; ++t) te(a, 6 * a + t) += w[t];
    return te;
  }

  Mat6 E0_;
  double sigy_;
  double eta_;
};

}  // namespace tsm
