#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsm/errors.hpp"
#include "tsm/voigt.hpp"

namespace tsm {

enum class Distribution { kNormal };

/// A fluctuating scalar material parameter m = <m> + phi.
struct FluctuatingScalar {
  double mean = 0.0;
  double std = 0.0;
  Distribution distribution = Distribution::kNormal;
};

enum class CorrelationMode { kIndependent, kFullyDependent, kMatrix };

struct CorrelationSpec {
  CorrelationMode mode = CorrelationMode::kIndependent;
  Eigen::MatrixXd matrix;  // used when mode == kMatrix
};

/// The random material parameters of one model: one (lambda, mu) pair per
/// fluctuating elasticity tensor, plus an optional yield limit.
struct StochasticParams {
  struct TensorSource {
    FluctuatingScalar lambda, mu;
  };
  std::vector<TensorSource> tensors;
  std::optional<FluctuatingScalar> yield;
  CorrelationSpec correlation;

  int scalar_count() const {
    return 2 * static_cast<int>(tensors.size()) + (yield ? 1 : 0);
  }
  FluctuatingScalar scalar(int i) const {
    int nt = static_cast<int>(tensors.size());
    if (i < 2 * nt) return (i % 2 == 0) ? tensors[i / 2].lambda : tensors[i / 2].mu;
    return *yield;
  }
};

/// One concrete draw of the material parameters.
struct ParamRealization {
  std::vector<double> lambda, mu;  // one entry per tensor source, Pa
  std::optional<double> sigma_y;   // Pa
};

/// Precomputed second moments of the fluctuations, acting as additional
/// material parameters: <D (x) D> per elasticity source (flattened to
/// 36x36), the yield second moment and the yield-elasticity coupling.
struct MomentSet {
  std::vector<Mat36> dd;
  Mat6 yd = Mat6::Zero();
  double yy = 0.0;
  bool has_yield = false;
  long long n_samples = 0;  // 0 for the analytic closed form
  // diagnostics from estimation: empirical means of the fluctuations
  std::vector<Mat6> d_mean;
  double y_mean = 0.0;
};

// ---------------------------------------------------------------------------
// counter-based RNG stream derivation

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent RNG stream derived from (base seed, stream index).
inline std::mt19937_64 make_rng(std::uint64_t base_seed, std::uint64_t stream) {
  return std::mt19937_64(
      splitmix64(base_seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

// reserved stream indices; Monte Carlo realizations use 0..n-1
inline constexpr std::uint64_t kMomentStream = 1ULL << 62;
inline constexpr std::uint64_t kVerifyStream = (1ULL << 62) + 1;

// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd correlation_matrix(const StochasticParams& sp) {
  int m = sp.scalar_count();
  switch (sp.correlation.mode) {
    case CorrelationMode::kIndependent:
      return Eigen::MatrixXd::Identity(m, m);
    case CorrelationMode::kFullyDependent:
      return Eigen::MatrixXd::Ones(m, m);
    case CorrelationMode::kMatrix: {
      const Eigen::MatrixXd& c = sp.correlation.matrix;
      if (c.rows() != m || c.cols() != m)
        throw ValidationError("correlation matrix must be " +
                              std::to_string(m) + "x" + std::to_string(m));
      if (!c.isApprox(c.transpose(), 1e-12))
        throw ValidationError("correlation matrix must be symmetric");
      for (int i = 0; i < m; ++i)
        if (std::abs(c(i, i) - 1.0) > 1e-12)
          throw ValidationError("correlation matrix diagonal must be 1");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
      if (eig.eigenvalues().minCoeff() < -1e-10)
        throw ValidationError("correlation matrix is not PSD");
      return c;
    }
  }
  throw ValidationError("unknown correlation mode");
}

/// Covariance matrix of the scalar fluctuations.
inline Eigen::MatrixXd covariance_matrix(const StochasticParams& sp) {
  int m = sp.scalar_count();
  Eigen::VectorXd stds(m);
  for (int i = 0; i < m; ++i) {
    const FluctuatingScalar s = sp.scalar(i);
    if (s.distribution != Distribution::kNormal)
      throw UnsupportedDistribution("only normal distributions are supported");
    if (s.std < 0) throw ValidationError("negative standard deviation");
    stds[i] = s.std;
  }
  return stds.asDiagonal() * correlation_matrix(sp) * stds.asDiagonal();
}

/// Factor F with cov = F F^T used to draw correlated fluctuations.
inline Eigen::MatrixXd covariance_factor(const StochasticParams& sp) {
  int m = sp.scalar_count();
  Eigen::VectorXd stds(m);
  for (int i = 0; i < m; ++i) stds[i] = sp.scalar(i).std;
  switch (sp.correlation.mode) {
    case CorrelationMode::kIndependent:
      return Eigen::MatrixXd(stds.asDiagonal());
    case CorrelationMode::kFullyDependent:
      return stds;  // one shared standard-normal factor
    case CorrelationMode::kMatrix: {
      Eigen::MatrixXd c = correlation_matrix(sp);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
      Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      return stds.asDiagonal() * (eig.eigenvectors() * ev.asDiagonal());
    }
  }
  throw ValidationError("unknown correlation mode");
}

inline bool realization_admissible(const ParamRealization& r) {
  for (std::size_t i = 0; i < r.lambda.size(); ++i) {
    if (!(r.mu[i] > 0.0)) return false;
    if (!(r.lambda[i] + 2.0 * r.mu[i] / 3.0 > 0.0)) return false;
  }
  if (r.sigma_y && !(*r.sigma_y > 0.0)) return false;
  return true;
}

inline ParamRealization realization_from_phi(const StochasticParams& sp,
                                             const Eigen::VectorXd& phi) {
  ParamRealization r;
  int nt = static_cast<int>(sp.tensors.size());
  r.lambda.resize(nt);
  r.mu.resize(nt);
  for (int j = 0; j < nt; ++j) {
    r.lambda[j] = sp.tensors[j].lambda.mean + phi[2 * j];
    r.mu[j] = sp.tensors[j].mu.mean + phi[2 * j + 1];
  }
  if (sp.yield) r.sigma_y = sp.yield->mean + phi[2 * nt];
  return r;
}

}  // namespace detail

/// Draws realizations with the specified correlation; rejection-samples
/// until the stiffness is positive definite (and the yield limit positive).
class ParamSampler {
 public:
  explicit ParamSampler(const StochasticParams& sp)
      : sp_(sp), factor_(detail::covariance_factor(sp)) {}

  /// phi = F z with z standard normal; no admissibility filter. The
  /// distribution is local so draws depend only on the rng stream.
  Eigen::VectorXd sample_phi(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(factor_.cols());
    for (int i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return factor_ * z;
  }

  ParamRealization sample(std::mt19937_64& rng) {
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      ParamRealization r = detail::realization_from_phi(sp_, sample_phi(rng));
      if (detail::realization_admissible(r)) return r;
      ++rejections_;
    }
    throw RetryExhausted(
        "1000 consecutive draws violated stiffness positivity; "
        "standard deviations are non-physical");
  }

  long long rejections() const { return rejections_; }
  const StochasticParams& params() const { return sp_; }

 private:
  static constexpr int kMaxRetries = 1000;
  StochasticParams sp_;
  Eigen::MatrixXd factor_;
  long long rejections_ = 0;
};

inline ParamRealization sample_realization(const StochasticParams& sp,
                                           std::mt19937_64& rng) {
  ParamSampler sampler(sp);
  return sampler.sample(rng);
}

/// The mean parameters as a realization (all fluctuations zero).
inline ParamRealization mean_realization(const StochasticParams& sp) {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(sp.scalar_count());
  return detail::realization_from_phi(sp, zero);
}

namespace detail {

/// Multiple fluctuating elasticity tensors are only representable in a
/// MomentSet without cross terms; a yield limit may correlate only with a
/// single elasticity tensor.
inline void validate_representable(const StochasticParams& sp) {
  if (sp.tensors.size() <= 1) return;
  if (sp.yield)
    throw ShapeMismatch(
        "yield limit with multiple elasticity tensors is not supported");
  Eigen::MatrixXd c = correlation_matrix(sp);
  for (std::size_t a = 0; a < sp.tensors.size(); ++a)
    for (std::size_t b = 0; b < sp.tensors.size(); ++b) {
      if (a == b) continue;
      if (c.block(2 * a, 2 * b, 2, 2).cwiseAbs().maxCoeff() > 1e-12)
        throw ShapeMismatch(
            "cross-correlated elasticity tensors are not representable");
    }
}

/// Builds the dense moment tensors from the (raw) second-moment matrix of
/// the scalar fluctuations. Exact because D is linear in (phi_l, phi_m).
inline MomentSet assemble_moments(const StochasticParams& sp,
                                  const Eigen::MatrixXd& second_moment,
                                  const Eigen::VectorXd& phi_mean,
                                  long long n_samples) {
  const Vec36 vl = voigt::vec(voigt::j_lambda());
  const Vec36 vm = voigt::vec(voigt::j_mu());
  int nt = static_cast<int>(sp.tensors.size());
  MomentSet ms;
  ms.n_samples = n_samples;
  ms.has_yield = sp.yield.has_value();
  for (int j = 0; j < nt; ++j) {
    double cll = second_moment(2 * j, 2 * j);
    double clm = second_moment(2 * j, 2 * j + 1);
    double cmm = second_moment(2 * j + 1, 2 * j + 1);
    Mat36 m = cll * (vl * vl.transpose()) + cmm * (vm * vm.transpose()) +
              clm * (vl * vm.transpose() + vm * vl.transpose());
    ms.dd.push_back(m);
    ms.d_mean.push_back(phi_mean[2 * j] * voigt::j_lambda() +
                        phi_mean[2 * j + 1] * voigt::j_mu());
  }
  if (sp.yield) {
    int y = 2 * nt;
    ms.yy = second_moment(y, y);
    ms.yd = second_moment(y, 0) * voigt::j_lambda() +
            second_moment(y, 1) * voigt::j_mu();
    ms.y_mean = phi_mean[y];
  }
  return ms;
}

}  // namespace detail

/// Empirical moment tensors from n_samples admissible realizations.
inline MomentSet estimate_moments(const StochasticParams& sp,
                                  long long n_samples, std::mt19937_64& rng) {
  if (n_samples < 10000)
    throw InsufficientSamples("moment estimation needs at least 1e4 samples");
  detail::validate_representable(sp);
  ParamSampler sampler(sp);
  ParamRealization means = mean_realization(sp);
  int m = sp.scalar_count();
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd phi(m);
  for (long long k = 0; k < n_samples; ++k) {
    ParamRealization r = sampler.sample(rng);
    int nt = static_cast<int>(sp.tensors.size());
    for (int j = 0; j < nt; ++j) {
      phi[2 * j] = r.lambda[j] - means.lambda[j];
      phi[2 * j + 1] = r.mu[j] - means.mu[j];
    }
    if (sp.yield) phi[2 * nt] = *r.sigma_y - *means.sigma_y;
    sum1 += phi;
    sum2 += phi * phi.transpose();
  }
  return detail::assemble_moments(sp, sum2 / double(n_samples),
                                  sum1 / double(n_samples), n_samples);
}

/// Closed-form Gaussian moments; serves as the oracle for the estimator.
inline MomentSet analytic_gaussian_moments(const StochasticParams& sp) {
  detail::validate_representable(sp);
  Eigen::MatrixXd cov = detail::covariance_matrix(sp);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(sp.scalar_count());
  return detail::assemble_moments(sp, cov, zero, 0);
}

// ---------------------------------------------------------------------------
// flat CSV serialization of a MomentSet (caching between runs)

inline void save_moments_csv(const MomentSet& ms, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  out << "# kind,source,a,b,c,d,value\n";
  out << "meta,n_samples," << ms.n_samples << "\n";
  out << "meta,has_yield," << (ms.has_yield ? 1 : 0) << "\n";
  out << "meta,n_sources," << ms.dd.size() << "\n";
  for (std::size_t j = 0; j < ms.dd.size(); ++j)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        for (int c = 0; c < 6; ++c)
          for (int d = 0; d < 6; ++d)
            out << "dd," << j << ',' << a << ',' << b << ',' << c << ',' << d
                << ',' << ms.dd[j](6 * a + b, 6 * c + d) << "\n";
  if (ms.has_yield) {
    out << "yy,," << ms.yy << "\n";
    for (int b = 0; b < 6; ++b)
      for (int c = 0; c < 6; ++c)
        out << "yd," << b << ',' << c << ',' << ms.yd(b, c) << "\n";
  }
}

inline MomentSet load_moments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  MomentSet ms;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string kind;
    std::getline(row, kind, ',');
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (kind == "meta") {
      if (cells[0] == "n_samples") ms.n_samples = std::stoll(cells[1]);
      if (cells[0] == "has_yield") ms.has_yield = cells[1] == "1";
      if (cells[0] == "n_sources") {
        ms.dd.assign(std::stoul(cells[1]), Mat36::Zero());
        ms.d_mean.assign(std::stoul(cells[1]), Mat6::Zero());
      }
    } else if (kind == "dd") {
      std::size_t j = std::stoul(cells[0]);
      if (j >= ms.dd.size()) throw ParseError("bad source index in " + path);
      ms.dd[j](6 * std::stoi(cells[1]) + std::stoi(cells[2]),
               6 * std::stoi(cells[3]) + std::stoi(cells[4])) =
          std::stod(cells[5]);
    } else if (kind == "yy") {
      ms.yy = std::stod(cells[1]);
    } else if (kind == "yd") {
      ms.yd(std::stoi(cells[0]), std::stoi(cells[1])) = std::stod(cells[2]);
    } else {
      throw ParseError("unknown row kind '" + kind + "' in " + path);
    }
  }
  return ms;
}

}  // namespace tsm
