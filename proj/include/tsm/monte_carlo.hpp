#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tsm/engine.hpp"
#include "tsm/errors.hpp"
#include "tsm/loadcase.hpp"
#include "tsm/stochastic.hpp"

namespace tsm {

/// Streaming mean/variance over fixed-length sample vectors (Welford
/// update, Chan merge). Merging b into a is exact in the same order
/// regardless of how the samples were partitioned into accumulators.
class WelfordAccumulator {
 public:
  explicit WelfordAccumulator(std::size_t dim)
      : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(const std::vector<double>& x) {
    ++n_;
    const double inv = 1.0 / double(n_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double delta = x[i] - mean_[i];
      mean_[i] += delta * inv;
      m2_[i] += delta * (x[i] - mean_[i]);
    }
  }

  void merge(const WelfordAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = double(n_), nb = double(o.n_);
    const double w = nb / (na + nb);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double delta = o.mean_[i] - mean_[i];
      mean_[i] += delta * w;
      m2_[i] += o.m2_[i] + delta * delta * na * w;
    }
    n_ += o.n_;
  }

  long long count() const { return n_; }
  double mean(std::size_t i) const { return mean_[i]; }
  /// Unbiased sample variance; requires at least two samples.
  double variance(std::size_t i) const {
    if (n_ < 2) throw InsufficientSamples("variance needs two samples");
    return m2_[i] / double(n_ - 1);
  }

 private:
  long long n_ = 0;
  std::vector<double> mean_, m2_;
};

/// Standard error of a Monte Carlo mean estimate.
inline double se_mean(double variance, long long n) {
  if (n < 2) throw InsufficientSamples("standard error needs two samples");
  return std::sqrt(variance / double(n));
}

/// Standard error of a Monte Carlo standard-deviation estimate
/// (Gaussian large-sample approximation).
inline double se_std(double variance, long long n) {
  if (n < 2) throw InsufficientSamples("standard error needs two samples");
  return std::sqrt(variance) / std::sqrt(2.0 * double(n - 1));
}

struct MCStats {
  StatSeries stats;         // var holds the unbiased sample variance
  long long n = 0;
  long long rejections = 0;
  bool variance_defined = false;  // false for n < 2 (var reported as 0)
  // up to 20 raw trajectories [realization][step][quantity] for envelopes
  std::vector<std::vector<std::vector<double>>> samples;
};

/// Per-step standard errors of the MC mean and std estimates
/// (SE(std) uses the Gaussian large-sample approximation).
struct SESeries {
  std::vector<std::vector<double>> mean_se, std_se;  // [step][quantity]
};

namespace detail {

// realizations per merge chunk; fixed so the merge tree is independent
// of the worker count
inline constexpr long long kMcChunk = 25;

}  // namespace detail

/// Monte Carlo reference: n_real independent parameter realizations, each
/// integrated deterministically. Realization k draws from rng stream k of
/// the base seed and results are reduced in a fixed chunk order, so the
/// output is bit-identical for any number of workers.
template <class Model, class Factory>
MCStats run_mc(const Factory& make_model, const StochasticParams& sp,
               const LoadCase& load, const TimeGrid& grid, long long n_real,
               std::uint64_t base_seed, int workers, int store_samples = 0) {
  if (n_real < 1)
    throw InsufficientSamples("Monte Carlo needs at least 1 realization");
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }

  const Model probe = make_model(mean_realization(sp));
  const int nq = probe.n_quantities();
  const std::size_t n_rows = static_cast<std::size_t>(grid.n_steps) + 1;
  const std::size_t dim = n_rows * static_cast<std::size_t>(nq);
  const long long n_chunks =
      (n_real + detail::kMcChunk - 1) / detail::kMcChunk;

  std::atomic<long long> next_chunk{0};
  std::atomic<long long> rejections{0};
  const long long n_store = std::min<long long>({n_real, store_samples, 20});
  std::vector<std::vector<std::vector<double>>> samples(
      static_cast<std::size_t>(std::max<long long>(n_store, 0)));

  std::mutex mu;
  std::condition_variable cv;
  std::map<long long, WelfordAccumulator> pending;
  long long next_merge = 0;
  WelfordAccumulator total(dim);
  bool failed = false;
  std::exception_ptr error;
  const std::size_t max_pending = static_cast<std::size_t>(2 * workers + 2);

  auto work = [&]() {
    try {
      ParamSampler sampler(sp);
      std::vector<double> row(dim);
      for (;;) {
        const long long c = next_chunk.fetch_add(1);
        if (c >= n_chunks) break;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (failed) break;
        }
        WelfordAccumulator acc(dim);
        const long long k_begin = c * detail::kMcChunk;
        const long long k_end = std::min(n_real, k_begin + detail::kMcChunk);
        for (long long k = k_begin; k < k_end; ++k) {
          try {
            std::mt19937_64 rng = make_rng(base_seed, std::uint64_t(k));
            const Model model = make_model(sampler.sample(rng));
            integrate_deterministic(
                model, load, grid,
                [&](int step, const typename Model::State& state,
                    const Vec6& eps) {
                  model.det_quantities(state, eps,
                                       row.data() + std::size_t(step) * nq);
                });
          } catch (const Error& e) {
            throw Error("realization " + std::to_string(k) + ": " + e.what());
          }
          acc.add(row);
          if (k < n_store) {
            auto& traj = samples[static_cast<std::size_t>(k)];
            traj.assign(n_rows, std::vector<double>(nq, 0.0));
            for (std::size_t r = 0; r < n_rows; ++r)
              for (int q = 0; q < nq; ++q)
                traj[r][q] = row[r * nq + q];
          }
        }
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] {
          return failed || c == next_merge || pending.size() < max_pending;
        });
        if (failed) break;
        pending.emplace(c, std::move(acc));
        while (!pending.empty() && pending.begin()->first == next_merge) {
          total.merge(pending.begin()->second);
          pending.erase(pending.begin());
          ++next_merge;
        }
        cv.notify_all();
      }
      rejections += sampler.rejections();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      failed = true;
      cv.notify_all();
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  MCStats out;
  out.n = total.count();
  out.rejections = rejections.load();
  out.variance_defined = out.n >= 2;
  out.samples = std::move(samples);
  out.stats.names = probe.quantity_names();
  out.stats.n_iv = probe.n_iv_quantities();
  out.stats.times.resize(n_rows);
  out.stats.mean.assign(n_rows, std::vector<double>(nq, 0.0));
  out.stats.var.assign(n_rows, std::vector<double>(nq, 0.0));
  for (std::size_t r = 0; r < n_rows; ++r) {
    out.stats.times[r] = grid.time(static_cast<int>(r));
    for (int q = 0; q < nq; ++q) {
      out.stats.mean[r][q] = total.mean(r * nq + q);
      out.stats.var[r][q] =
          out.variance_defined ? total.variance(r * nq + q) : 0.0;
    }
  }
  return out;
}

/// Standard-error series for every tracked quantity of an MC run.
inline SESeries mc_standard_error(const MCStats& mc) {
  if (mc.n < 2)
    throw InsufficientSamples("standard error needs at least 2 realizations");
  SESeries se;
  se.mean_se.assign(mc.stats.var.size(),
                    std::vector<double>(mc.stats.names.size(), 0.0));
  se.std_se = se.mean_se;
  for (std::size_t r = 0; r < mc.stats.var.size(); ++r)
    for (std::size_t q = 0; q < mc.stats.names.size(); ++q) {
      se.mean_se[r][q] = se_mean(mc.stats.var[r][q], mc.n);
      se.std_se[r][q] = se_std(mc.stats.var[r][q], mc.n);
    }
  return se;
}

}  // namespace tsm
