#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace tsm {

using Vec6  = Eigen::Matrix<double, 6, 1>;
using Mat6  = Eigen::Matrix<double, 6, 6>;
using Vec36 = Eigen::Matrix<double, 36, 1>;
using Mat36 = Eigen::Matrix<double, 36, 36>;

/// Voigt-notation tensor algebra. Stress vectors are ordered
/// (sx, sy, sz, syz, sxz, sxy); strain vectors carry engineering shear
/// (gamma = 2*eps_shear) so that 1/2 eps.E.eps is the tensor contraction.
namespace voigt {

/// Basis matrix multiplying the first Lame parameter: ones in the
/// upper-left 3x3 block.
inline const Mat6& j_lambda() {
  static const Mat6 j = [] {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>().setOnes();
    return m;
  }();
  return j;
}

/// Basis matrix multiplying the shear modulus: diag(2,2,2,1,1,1).
inline const Mat6& j_mu() {
  static const Mat6 j = [] {
    Mat6 m = Mat6::Zero();
    m.diagonal() << 2, 2, 2, 1, 1, 1;
    return m;
  }();
  return j;
}

/// E(lambda, mu) = lambda * j_lambda + mu * j_mu, exactly.
inline Mat6 isotropic_stiffness(double lambda, double mu) {
  return lambda * j_lambda() + mu * j_mu();
}

/// Deviator operator S in Voigt notation (idempotent, shear block = identity).
inline const Mat6& deviator_op() {
  static const Mat6 s = [] {
    Mat6 m = Mat6::Identity();
    m.topLeftCorner<3, 3>().array() -= 1.0 / 3.0;
    return m;
  }();
  return s;
}

inline Vec6 deviator(const Vec6& sigma) { return deviator_op() * sigma; }

/// Componentwise weights turning the Voigt dot product into the tensor
/// Frobenius inner product for stress-role vectors.
inline const Vec6& shear_weights() {
  static const Vec6 w = (Vec6() << 1, 1, 1, 2, 2, 2).finished();
  return w;
}

/// Tensor Frobenius norm of a stress-role vector (factor 2 on shear entries).
inline double stress_norm(const Vec6& s) {
  return std::sqrt(s.dot(shear_weights().cwiseProduct(s)));
}

/// Strain energy density 1/2 eps.E.eps.
inline double quad_form(const Vec6& eps, const Mat6& E) {
  return 0.5 * eps.dot(E * eps);
}

/// Row-major flattening of a 6x6 matrix; index (s,t) -> 6*s + t.
inline Vec36 vec(const Mat6& m) {
  Vec36 v;
  for (int s = 0; s < 6; ++s)
    for (int t = 0; t < 6; ++t) v[6 * s + t] = m(s, t);
  return v;
}

inline Mat6 unvec(const Vec36& v) {
  Mat6 m;
  for (int s = 0; s < 6; ++s)
    for (int t = 0; t < 6; ++t) m(s, t) = v[6 * s + t];
  return m;
}

}  // namespace voigt
}  // namespace tsm
