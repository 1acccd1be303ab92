#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/stochastic.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

namespace detail {

/// Overflow-stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Viscous multi-phase transformation model. Internal variables are the
/// unconstrained driving variables chi_i with volume fractions
/// lam_i = sigmoid(chi_i); the effective stiffness is the Reuss-type
/// average Ebar = (sum_i lam_i E_i^-1)^-1 and a polynomial wall energy
/// keeps every fraction inside (0,1). Each phase stiffness is an
/// independent fluctuation source, so the tangent block I_ij tracks
/// d(chi_i)/d(E_j).
class PhaseModel {
 public:
  struct Phase {
    Mat6 E = Mat6::Zero();       // stiffness
    Vec6 eigenstrain = Vec6::Zero();
  };

  struct State {
    Eigen::VectorXd chi;       // n
    std::vector<Mat6> I;       // n*n blocks, index i*n + j
  };

  PhaseModel(std::vector<Phase> phases, double eta, double wall,
             const Eigen::VectorXd& chi0)
      : phases_(std::move(phases)), eta_(eta), wall_(wall), chi0_(chi0) {
    const int n = static_cast<int>(phases_.size());
    if (n < 2) throw ValidationError("phase model needs at least two phases");
    if (!(eta_ > 0.0))
      throw ValidationError("phase viscosity must be positive");
    if (!(wall_ >= 0.0))
      throw ValidationError("wall energy scale must be non-negative");
    if (chi0_.size() != n)
      throw ValidationError("initial chi must have one entry per phase");
    Einv_.reserve(phases_.size());
    for (const Phase& ph : phases_) Einv_.push_back(ph.E.inverse());
  }

  int n_phases() const { return static_cast<int>(phases_.size()); }
  int n_sources() const { return n_phases(); }
  bool has_yield_source() const { return false; }
  int iv_dim() const { return n_phases(); }

  State initial_state() const {
    State s;
    s.chi = chi0_;
    s.I.assign(static_cast<std::size_t>(n_phases()) * n_phases(), Mat6::Zero());
    return s;
  }

  void det_rate(const State& s, const Vec6& eps, State& rate) const {
    const Work w = compute_work(s, eps);
    const int n = n_phases();
    for (int i = 0; i < n; ++i) rate.chi[i] = w.f[i] / (eta_ * w.p[i]);
  }

  void tangent_rate(const State& s, const Vec6& eps, State& rate) const {
    const Work w = compute_work(s, eps);
    const int n = n_phases();
    // B_j = Ebar Einv_j, r_ij = B_j^T (eta_i + q_i), S_ik = (eta_i+q_i).A_k
    std::vector<Mat6> B(n);
    for (int j = 0; j < n; ++j) B[j] = w.Ebar * Einv_[j];
    std::vector<Vec6> eq(n);  // eta_i + q_i
    for (int i = 0; i < n; ++i) eq[i] = phases_[i].eigenstrain + w.q[i];
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) S(i, k) = eq[i].dot(w.A[k]);
    Eigen::VectorXd gp(n);
    for (int i = 0; i < n; ++i) gp[i] = wall_force_deriv(w.lam[i]);

    // dpsi_ij = d(dPsi/dlam_i)/dE_j as a 6x6 block
    std::vector<Mat6> dpsi(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Mat6 m = Mat6::Zero();
        for (int k = 0; k < n; ++k) m += w.p[k] * S(i, k) * s.I[k * n + j];
        m += gp[i] * w.p[i] * s.I[i * n + j];
        m -= w.lam[j] * ((B[j].transpose() * eq[i]) * w.q[j].transpose());
        if (i == j) m += 0.5 * (w.q[i] * w.q[i].transpose());
        dpsi[i * n + j] = m;
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Mat6 df = Mat6::Zero();
        for (int m = 0; m < n; ++m) df += dpsi[m * n + j] - dpsi[i * n + j];
        df /= double(n);
        rate.I[i * n + j] =
            (-(1.0 - 2.0 * w.lam[i]) * w.f[i] * s.I[i * n + j] + df) /
            (eta_ * w.p[i]);
      }
    }
  }

  void apply_det(State& s, const State& rate, double dt) const {
    s.chi += dt * rate.chi;
  }
  void apply_tangent(State& s, const State& rate, double dt) const {
    for (std::size_t k = 0; k < s.I.size(); ++k) s.I[k] += dt * rate.I[k];
  }

  bool state_finite(const State& s) const {
    if (!s.chi.allFinite()) return false;
    for (const Mat6& m : s.I)
      if (!m.allFinite()) return false;
    return true;
  }

  // --- verification hooks ---------------------------------------------

  void iv_values(const State& s, double* out) const {
    for (int i = 0; i < n_phases(); ++i) out[i] = s.chi[i];
  }

  void tangent_contraction(const State& s, int source, const Mat6& dir,
                           double* out) const {
    const int n = n_phases();
    for (int i = 0; i < n; ++i)
      out[i] = s.I[i * n + source].cwiseProduct(dir).sum();
  }

  PhaseModel perturbed_tensor(int source, const Mat6& delta) const {
    std::vector<Phase> ph = phases_;
    ph[source].E += delta;
    return PhaseModel(std::move(ph), eta_, wall_, chi0_);
  }
  PhaseModel perturbed_yield(double /*dy*/) const {
    throw Error("phase model has no yield limit");
  }
  double tensor_norm(int source) const { return phases_[source].E.norm(); }
  double yield_value() const {
    throw Error("phase model has no yield limit");
  }
  bool event_flag(const State&, const Vec6&) const { return false; }

  // --- quantities and statistics --------------------------------------

  int n_quantities() const { return n_phases() + 6; }
  int n_iv_quantities() const { return n_phases(); }
  std::vector<std::string> quantity_names() const {
    std::vector<std::string> names;
    for (int i = 0; i < n_phases(); ++i)
      names.push_back("lam_" + std::to_string(i + 1));
    for (const char* c : {"sig_x", "sig_y", "sig_z", "sig_yz", "sig_xz",
                          "sig_xy"})
      names.push_back(c);
    return names;
  }

  void det_quantities(const State& s, const Vec6& eps, double* out) const {
    const Work w = compute_work(s, eps);
    const int n = n_phases();
    for (int i = 0; i < n; ++i) out[i] = w.lam[i];
    for (int a = 0; a < 6; ++a) out[n + a] = w.u[a];
  }

  void check_moments(const MomentSet& ms) const {
    if (static_cast<int>(ms.dd.size()) != n_phases())
      throw ShapeMismatch("phase model expects one elasticity source per phase");
    if (ms.has_yield)
      throw ShapeMismatch("phase model has no yield limit");
  }

  void iv_variances(const State& s, const MomentSet& ms, double* out) const {
    const int n = n_phases();
    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) {
      const double lam = detail::sigmoid(s.chi[i]);
      p[i] = lam * (1.0 - lam);
    }
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) {
        const Vec36 t = p[i] * voigt::vec(s.I[i * n + j]);
        v += t.dot(ms.dd[j] * t);
      }
      out[i] = v;
    }
  }

  void stress_variances(const State& s, const Vec6& eps, const MomentSet& ms,
                        double* out) const {
    const Work w = compute_work(s, eps);
    const int n = n_phases();
    std::vector<Mat6> B(n);
    for (int j = 0; j < n; ++j) B[j] = w.Ebar * Einv_[j];
    for (int a = 0; a < 6; ++a) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) {
        const Vec36 t = voigt::vec(stress_tangent(s, w, B, j, a));
        v += t.dot(ms.dd[j] * t);
      }
      out[a] = v;
    }
  }

  void linearized_quantities(const State& s, const Vec6& eps, const Mat6* D,
                             double /*sy*/, double* out) const {
    const Work w = compute_work(s, eps);
    const int n = n_phases();
    std::vector<Mat6> B(n);
    for (int j = 0; j < n; ++j) B[j] = w.Ebar * Einv_[j];
    for (int i = 0; i < n; ++i) {
      double dl = 0.0;
      for (int j = 0; j < n; ++j)
        dl += w.p[i] * s.I[i * n + j].cwiseProduct(D[j]).sum();
      out[i] = w.lam[i] + dl;
    }
    for (int a = 0; a < 6; ++a) {
      double ds = 0.0;
      for (int j = 0; j < n; ++j)
        ds += stress_tangent(s, w, B, j, a).cwiseProduct(D[j]).sum();
      out[n + a] = w.u[a] + ds;
    }
  }

  const Phase& phase(int i) const { return phases_[i]; }
  double eta() const { return eta_; }
  double wall() const { return wall_; }

 private:
  struct Work {
    Eigen::VectorXd lam, p, psi, f;  // per phase
    Mat6 Ebar = Mat6::Zero();
    Vec6 w = Vec6::Zero();  // eps - mean eigenstrain
    Vec6 u = Vec6::Zero();  // stress Ebar w
    std::vector<Vec6> q;    // Einv_k u
    std::vector<Vec6> A;    // Ebar (q_k + eta_k)
  };

  /// Derivative of the wall energy: dPsi_wall/dlam = 2 W (2 lam - 1) /
  /// (lam^3 (1-lam)^3).
  double wall_force(double lam) const {
    const double a = lam * (1.0 - lam);
    return 2.0 * wall_ * (2.0 * lam - 1.0) / (a * a * a);
  }
  double wall_force_deriv(double lam) const {
    const double a = lam * (1.0 - lam);
    const double b = 2.0 * lam - 1.0;
    return 2.0 * wall_ * (2.0 * a + 3.0 * b * b) / (a * a * a * a);
  }

  Work compute_work(const State& s, const Vec6& eps) const {
    const int n = n_phases();
    Work w;
    w.lam.resize(n);
    w.p.resize(n);
    w.psi.resize(n);
    w.f.resize(n);
    w.q.resize(n);
    w.A.resize(n);
    Mat6 G = Mat6::Zero();
    Vec6 etabar = Vec6::Zero();
    for (int i = 0; i < n; ++i) {
      w.lam[i] = detail::sigmoid(s.chi[i]);
      if (!(w.lam[i] > kFractionTol) || !(w.lam[i] < 1.0 - kFractionTol))
        throw DegeneratePhase("phase fraction " + std::to_string(i + 1) +
                              " reached the boundary of (0,1)");
      w.p[i] = w.lam[i] * (1.0 - w.lam[i]);
      G += w.lam[i] * Einv_[i];
      etabar += w.lam[i] * phases_[i].eigenstrain;
    }
    w.Ebar = G.inverse();
    w.w = eps - etabar;
    w.u = w.Ebar * w.w;
    for (int i = 0; i < n; ++i) {
      w.q[i] = Einv_[i] * w.u;
      w.psi[i] = -phases_[i].eigenstrain.dot(w.u) - 0.5 * w.q[i].dot(w.u) +
                 wall_force(w.lam[i]);
      w.A[i] = w.Ebar * (w.q[i] + phases_[i].eigenstrain);
    }
    // f_i = -psi_i + mean(psi); pairwise form keeps n = 2 antisymmetric
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += w.psi[j] - w.psi[i];
      w.f[i] = acc / double(n);
    }
    return w;
  }

  /// T_j(a)[s][t] = d(sigma_a)/d(E_j)_st at fixed strain.
  Mat6 stress_tangent(const State& s, const Work& w,
                      const std::vector<Mat6>& B, int j, int a) const {
    const int n = n_phases();
    Mat6 t = Mat6::Zero();
    for (int k = 0; k < n; ++k)
      t -= w.p[k] * w.A[k][a] * s.I[k * n + j];
    t += w.lam[j] * (B[j].row(a).transpose() * w.q[j].transpose());
    return t;
  }

  static constexpr double kFractionTol = 1e-12;

  std::vector<Phase> phases_;
  std::vector<Mat6> Einv_;
  double eta_;
  double wall_;
  Eigen::VectorXd chi0_;
};

}  // namespace tsm
