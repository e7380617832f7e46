#pragma once

// Central multivariate t (and normal) probabilities over hyper-rectangles
// and equicoordinate quantiles.
//
// Probabilities use the Genz-Bretz separation-of-variables transform:
// T = Z / s with s = chi_df / sqrt(df) and Z = L y, y standard normal, L a
// pivoted Cholesky factor of R. The chi variable is the first integration
// coordinate; each normal coordinate is sampled from its truncated
// conditional given the previous ones. Rank-deficient R is supported: a row
// with zero conditional variance is a deterministic combination of earlier
// coordinates and its constraint is folded into the bounds of the last
// coordinate it depends on.
//
// The integral over the unit cube is estimated with a Richtmyer (Kronecker)
// lattice, randomly shifted, tent-periodized and antithetic. The error is
// the standard error across independent shifts; each shift owns a
// substream derived from (seed, shift index) so results are bit-identical
// for fixed inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "trendsim/contrasts.hpp"
#include "trendsim/detail/chi_scale.hpp"
#include "trendsim/detail/normal.hpp"
#include "trendsim/errors.hpp"
#include "trendsim/model.hpp"

namespace trendsim {

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();
inline constexpr std::int64_t kMaxTotalEvaluations = 10'000'000;

class CorrelationMatrix {
 public:
  CorrelationMatrix() : entries_(Eigen::MatrixXd::Identity(1, 1)) {}

  // Validates symmetry, unit diagonal and range, then repairs slightly
  // indefinite input by clipping eigenvalues in [-1e-8, 0) to zero and
  // renormalizing the diagonal. More negative eigenvalues are an error.
  explicit CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    const Eigen::Index q = entries_.rows();
    if (q < 1 || entries_.cols() != q) throw std::invalid_argument("correlation matrix must be square and nonempty");
    if (!entries_.allFinite()) throw NumericalError("correlation matrix has non-finite entries");
    for (Eigen::Index i = 0; i < q; ++i) {
      if (std::fabs(entries_(i, i) - 1.0) > 1e-10) {
        throw NumericalError("correlation matrix diagonal entry " + std::to_string(i + 1) + " is not 1");
      }
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::fabs(entries_(i, j) - entries_(j, i)) > 1e-10) {
          throw NumericalError("correlation matrix is not symmetric");
        }
        if (std::fabs(entries_(i, j)) > 1.0 + 1e-10) throw NumericalError("correlation entry outside [-1, 1]");
      }
    }
    entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
    entries_.diagonal().setOnes();
    if (q > 1) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_);
      min_eigenvalue_ = eig.eigenvalues().minCoeff();
      if (min_eigenvalue_ < -1e-8) {
        throw NumericalError("correlation matrix is not positive semidefinite (smallest eigenvalue " +
                             std::to_string(min_eigenvalue_) + ")");
      }
      if (min_eigenvalue_ < 0.0) {
        const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
        Eigen::MatrixXd fixed = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::VectorXd d = fixed.diagonal().cwiseSqrt().cwiseInverse();
        entries_ = d.asDiagonal() * fixed * d.asDiagonal();
        entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
        entries_.diagonal().setOnes();
        entries_ = entries_.cwiseMax(-1.0).cwiseMin(1.0);
        repaired_ = true;
      }
    } else {
      min_eigenvalue_ = 1.0;
    }
  }

  const Eigen::MatrixXd& matrix() const { return entries_; }
  Eigen::Index dimension() const { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  bool repaired() const { return repaired_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  Eigen::MatrixXd entries_;
  double min_eigenvalue_ = 1.0;
  bool repaired_ = false;
};

struct QmcConfig {
  std::int64_t sample_budget = 100'000;  // max integrand evaluations per randomization
  int randomizations = 12;
  std::uint64_t seed = 20210611;
  double target_abs_error = 1e-4;
  // Worker threads across shifts; 0 means hardware concurrency. The result
  // does not depend on this value.
  int threads = 1;

  void validate() const {
    if (sample_budget < 1000) throw std::invalid_argument("QMC sample budget must be at least 1000");
    if (randomizations < 8) throw std::invalid_argument("QMC needs at least 8 randomizations");
    if (!(target_abs_error > 0.0 && target_abs_error <= 0.01)) {
      throw std::invalid_argument("QMC target absolute error must lie in (0, 0.01]");
    }
    if (threads < 0) throw std::invalid_argument("QMC thread count must be >= 0");
  }
};

struct MvtProbability {
  double value = 0.0;
  double error = 0.0;             // standard error across randomizations
  std::int64_t evaluations = 0;   // integrand evaluations, all shifts
  bool converged = true;          // false: budget exhausted above target error
};

// R = D^-1/2 (C S C') D^-1/2 with D = diag(C S C').
inline CorrelationMatrix correlation_from_contrasts(const ContrastMatrix& c, const CovarianceEstimate& sigma) {
  if (c.cols() != sigma.matrix.rows()) {
    throw std::invalid_argument("contrast matrix has " + std::to_string(c.cols()) + " columns but covariance is " +
                                std::to_string(sigma.matrix.rows()) + "x" + std::to_string(sigma.matrix.rows()));
  }
  const Eigen::MatrixXd v = c.weights * sigma.matrix * c.weights.transpose();
  const double scale = std::max(1e-300, v.diagonal().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    if (!(v(i, i) > 1e-14 * scale)) {
      throw NumericalError("contrast '" + (static_cast<std::size_t>(i) < c.row_labels.size()
                                               ? c.row_labels[static_cast<std::size_t>(i)]
                                               : std::to_string(i + 1)) +
                           "' has zero variance");
    }
  }
  const Eigen::VectorXd d = v.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = d.asDiagonal() * v * d.asDiagonal();
  r = 0.5 * (r + r.transpose()).eval();
  r.diagonal().setOnes();
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  return CorrelationMatrix(std::move(r));
}

namespace detail {

inline bool is_infinite_df(double df) { return std::isinf(df); }

inline double univariate_cdf(double x, double df) {
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  if (is_infinite_df(df)) return normal_cdf(x);
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

inline double univariate_quantile(double p, double df) {
  if (is_infinite_df(df)) return boost::math::quantile(boost::math::normal_distribution<double>(), p);
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent deterministic substream for (seed, stream index).
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Fractional parts of sqrt(prime_j).
inline const std::vector<double>& richtmyer_generators(std::size_t dims) {
  static const std::vector<double> gens = [] {
    std::vector<double> g;
    for (int n = 2; g.size() < 128; ++n) {
      bool prime = true;
      for (int d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
          prime = false;
          break;
        }
      }
      if (prime) {
        const double s = std::sqrt(static_cast<double>(n));
        g.push_back(s - std::floor(s));
      }
    }
    return g;
  }();
  if (dims > gens.size()) throw std::invalid_argument("dimension too large for the lattice generator");
  return gens;
}

inline double truncated_normal_mean(double lo, double hi) {
  const double mass = normal_cdf(hi) - normal_cdf(lo);
  if (mass > 1e-300) {
    const double m = (normal_pdf(lo) - normal_pdf(hi)) / mass;
    if (std::isfinite(m)) return std::clamp(m, std::isinf(lo) ? m : lo, std::isinf(hi) ? m : hi);
  }
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  return 0.0;
}

// (bound - shift) / scale with infinities preserved.
inline double standardize(double bound, double shift, double scale) {
  if (std::isinf(bound)) return bound;
  return (bound - shift) / scale;
}

// Phi with exact 0/1 far in the tails (beyond double resolution of 1 - Phi).
inline double clipped_normal_cdf(double x) {
  if (x <= -38.5) return 0.0;
  if (x >= 8.3) return 1.0;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

// Integration plan: pivoted Cholesky factor, bounds in pivot order, and for
// every sampled coordinate the constraints it closes.
class IntegrationPlan {
 public:
  IntegrationPlan(std::vector<double> lower, std::vector<double> upper, const Eigen::MatrixXd& r, double df)
      : df_(df) {
    const auto q = static_cast<Eigen::Index>(lower.size());
    Eigen::MatrixXd c = r;
    factor_ = RowMatrix::Zero(q, q);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
    constexpr double kSingular = 1e-10;

    // Genz-Bretz variable reordering: at each step pick the remaining
    // coordinate with the smallest conditional interval probability.
    for (Eigen::Index i = 0; i < q; ++i) {
      Eigen::Index best = -1;
      double best_score = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = i; j < q; ++j) {
        const double cv = c(j, j) - factor_.row(j).head(i).squaredNorm();
        if (cv <= kSingular) continue;
        const double s = std::sqrt(cv);
        const double shift = factor_.row(j).head(i).dot(y.head(i));
        const double score = normal_cdf(standardize(upper[static_cast<std::size_t>(j)], shift, s)) -
                             normal_cdf(standardize(lower[static_cast<std::size_t>(j)], shift, s));
        // near-ties go to the lower index so rounding noise cannot change the order
        if (score < best_score - 1e-10) {
          best_score = score;
          best = j;
        }
      }
      if (best < 0) break;
      if (best != i) {
        c.row(i).swap(c.row(best));
        c.col(i).swap(c.col(best));
        factor_.row(i).swap(factor_.row(best));
        std::swap(lower[static_cast<std::size_t>(i)], lower[static_cast<std::size_t>(best)]);
        std::swap(upper[static_cast<std::size_t>(i)], upper[static_cast<std::size_t>(best)]);
      }
      const double diag = std::sqrt(c(i, i) - factor_.row(i).head(i).squaredNorm());
      factor_(i, i) = diag;
      for (Eigen::Index j = i + 1; j < q; ++j) {
        factor_(j, i) = (c(j, i) - factor_.row(j).head(i).dot(factor_.row(i).head(i))) / diag;
      }
      const double shift = factor_.row(i).head(i).dot(y.head(i));
      y[i] = truncated_normal_mean(standardize(lower[static_cast<std::size_t>(i)], shift, diag),
                                   standardize(upper[static_cast<std::size_t>(i)], shift, diag));
      rank_ = i + 1;
    }
    if (rank_ == 0) throw NumericalError("correlation matrix has rank zero");

    // Rows past the rank are combinations of earlier coordinates; each one
    // bounds the last coordinate it depends on.
    std::vector<std::vector<Constraint>> by_step(static_cast<std::size_t>(rank_));
    auto make = [&](Eigen::Index row, Eigen::Index step) {
      Constraint k;
      k.row = row;
      k.coef = factor_(row, step);
      k.lower = lower[static_cast<std::size_t>(row)];
      k.upper = upper[static_cast<std::size_t>(row)];
      return k;
    };
    for (Eigen::Index i = 0; i < rank_; ++i) by_step[static_cast<std::size_t>(i)].push_back(make(i, i));
    for (Eigen::Index j = rank_; j < q; ++j) {
      Eigen::Index last = -1;
      for (Eigen::Index m = rank_ - 1; m >= 0; --m) {
        if (std::fabs(factor_(j, m)) > kSingular) {
          last = m;
          break;
        }
      }
      if (last < 0) throw NumericalError("degenerate coordinate in correlation matrix");
      by_step[static_cast<std::size_t>(last)].push_back(make(j, last));
    }
    step_begin_.push_back(0);
    for (const auto& list : by_step) {
      constraints_.insert(constraints_.end(), list.begin(), list.end());
      step_begin_.push_back(constraints_.size());
    }
    if (!is_infinite_df(df_)) chi_ = &ChiScaleTable::for_df(df_);
  }

  // Unit-cube coordinates consumed per evaluation.
  std::size_t dimension() const { return static_cast<std::size_t>(rank_ - 1) + (chi_ ? 1 : 0); }
  Eigen::Index rank() const { return rank_; }

  // Integrand at w; y is scratch of length >= rank.
  double evaluate(const double* w, double* y) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    std::size_t next = 0;
    if (chi_) scale = (*chi_)(std::clamp(w[next++], 1e-16, 1.0 - 1e-16));
    double value = 1.0;
    const Eigen::Index cols = factor_.cols();
    for (Eigen::Index p = 0; p < rank_; ++p) {
      double lo = -inf;
      double hi = inf;
      for (std::size_t k = step_begin_[static_cast<std::size_t>(p)]; k < step_begin_[static_cast<std::size_t>(p) + 1];
           ++k) {
        const Constraint& ct = constraints_[k];
        const double* row = factor_.data() + ct.row * cols;
        double shift = 0.0;
        for (Eigen::Index m = 0; m < p; ++m) shift += row[m] * y[m];
        double l = ct.lower == -inf ? -inf : (ct.lower * scale - shift) / ct.coef;
        double u = ct.upper == inf ? inf : (ct.upper * scale - shift) / ct.coef;
        if (ct.coef < 0.0) {
          if (ct.lower == -inf) l = inf;
          if (ct.upper == inf) u = -inf;
          std::swap(l, u);
        }
        if (l > lo) lo = l;
        if (u < hi) hi = u;
      }
      if (!(lo < hi)) return 0.0;
      const double plo = clipped_normal_cdf(lo);
      const double phi = clipped_normal_cdf(hi);
      const double mass = phi - plo;
      if (!(mass > 0.0)) return 0.0;
      value *= mass;
      if (p + 1 < rank_) y[p] = normal_quantile(std::clamp(plo + w[next++] * mass, 1e-300, 1.0 - 1e-16));
    }
    return value;
  }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  struct Constraint {
    Eigen::Index row = 0;  // row of the permuted factor
    double coef = 1.0;     // coefficient on the closing coordinate
    double lower = 0.0;
    double upper = 0.0;
  };

  double df_;
  const ChiScaleTable* chi_ = nullptr;
  RowMatrix factor_;
  Eigen::Index rank_ = 0;
  std::vector<Constraint> constraints_;
  std::vector<std::size_t> step_begin_;
};

// Stops the adaptive loop once the estimate is more than `sigmas` standard
// errors away from every threshold.
struct DecisionRule {
  std::span<const double> thresholds;
  double sigmas = 3.0;

  bool decided(double estimate, double error) const {
    if (thresholds.empty()) return false;
    for (double t : thresholds) {
      if (std::fabs(estimate - t) <= sigmas * error) return false;
    }
    return true;
  }
};

// Randomly shifted, tent-periodized, antithetic Richtmyer rule. Each round
// doubles the points per shift until the standard error across shifts
// reaches the target, the decision rule fires, or the budget is spent.
inline MvtProbability integrate(const IntegrationPlan& plan, const QmcConfig& cfg, const DecisionRule& rule) {
  const std::size_t dims = plan.dimension();
  MvtProbability out;
  std::vector<double> y(static_cast<std::size_t>(plan.rank()) + 1, 0.0);
  if (dims == 0) {
    out.value = plan.evaluate(nullptr, y.data());
    out.evaluations = 1;
    return out;
  }
  const auto& gens = richtmyer_generators(dims);
  const auto shifts_n = static_cast<std::size_t>(cfg.randomizations);
  const std::int64_t budget = std::min<std::int64_t>(cfg.sample_budget, kMaxTotalEvaluations / cfg.randomizations);

  std::vector<std::vector<double>> shifts(shifts_n, std::vector<double>(dims));
  for (std::size_t s = 0; s < shifts_n; ++s) {
    auto rng = substream(cfg.seed, s);
    for (auto& v : shifts[s]) v = uniform01(rng);
  }
  std::vector<double> sums(shifts_n, 0.0);
  std::int64_t pairs_done = 0;
  std::int64_t pairs_target = std::min<std::int64_t>(128, budget / 2);

  auto run_shifts = [&](std::size_t first, std::size_t last, std::int64_t from, std::int64_t to) {
    std::vector<double> x(dims), xa(dims);
    std::vector<double> y(static_cast<std::size_t>(plan.rank()) + 1, 0.0);
    for (std::size_t s = first; s < last; ++s) {
      double acc = 0.0;
      for (std::int64_t i = from; i < to; ++i) {
        const double n = static_cast<double>(i + 1);
        for (std::size_t k = 0; k < dims; ++k) {
          double v = n * gens[k] + shifts[s][k];
          v -= std::floor(v);
          v = std::fabs(2.0 * v - 1.0);
          x[k] = v;
          xa[k] = 1.0 - v;
        }
        acc += 0.5 * (plan.evaluate(x.data(), y.data()) + plan.evaluate(xa.data(), y.data()));
      }
      sums[s] += acc;
    }
  };
  std::size_t workers = cfg.threads == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                         : static_cast<std::size_t>(cfg.threads);
  workers = std::min(workers, shifts_n);

  while (true) {
    const std::int64_t work = (pairs_target - pairs_done) * static_cast<std::int64_t>(shifts_n);
    if (workers > 1 && work >= 4096) {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(run_shifts, w * shifts_n / workers, (w + 1) * shifts_n / workers, pairs_done,
                          pairs_target);
      }
      for (auto& t : pool) t.join();
    } else {
      run_shifts(0, shifts_n, pairs_done, pairs_target);
    }
    pairs_done = pairs_target;

    double mean = 0.0;
    for (double s : sums) mean += s / static_cast<double>(pairs_done);
    mean /= static_cast<double>(shifts_n);
    double var = 0.0;
    for (double s : sums) {
      const double d = s / static_cast<double>(pairs_done) - mean;
      var += d * d;
    }
    var /= static_cast<double>(shifts_n - 1);
    out.value = std::clamp(mean, 0.0, 1.0);
    out.error = std::sqrt(var / static_cast<double>(shifts_n));
    out.evaluations = 2 * pairs_done * static_cast<std::int64_t>(shifts_n);

    if (out.error <= cfg.target_abs_error || rule.decided(out.value, out.error)) {
      out.converged = true;
      break;
    }
    if (2 * pairs_done >= budget) {
      out.converged = false;
      break;
    }
    pairs_target = std::min<std::int64_t>(2 * pairs_done, budget / 2);
  }
  return out;
}

}  // namespace detail

// P(lower <= T <= upper) for T ~ t_q(df, R); df = kInfiniteDf gives the
// multivariate normal. Coordinates with two infinite bounds are dropped and
// a single remaining coordinate is evaluated exactly. With decision
// thresholds the adaptive loop may stop early once the estimate is 3
// standard errors away from all of them.
inline MvtProbability mvt_rectangle_probability(std::span<const double> lower, std::span<const double> upper,
                                                const CorrelationMatrix& r, double df, const QmcConfig& cfg = {},
                                                std::span<const double> decision_thresholds = {}) {
  cfg.validate();
  const auto q = r.dimension();
  if (static_cast<Eigen::Index>(lower.size()) != q || static_cast<Eigen::Index>(upper.size()) != q) {
    throw std::invalid_argument("bound vectors must match the correlation dimension");
  }
  if (!(df >= 1.0)) throw std::invalid_argument("degrees of freedom must be >= 1 or infinite");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < q; ++i) {
    const double a = lower[static_cast<std::size_t>(i)];
    const double b = upper[static_cast<std::size_t>(i)];
    if (std::isnan(a) || std::isnan(b)) throw std::invalid_argument("NaN bound");
    if (!(a < b)) throw std::invalid_argument("lower bound must be below upper bound in every coordinate");
    if (!(std::isinf(a) && std::isinf(b))) keep.push_back(i);
  }
  MvtProbability out;
  if (keep.empty()) {
    out.value = 1.0;
    return out;
  }
  if (keep.size() == 1) {
    const auto i = static_cast<std::size_t>(keep.front());
    out.value = detail::univariate_cdf(upper[i], df) - detail::univariate_cdf(lower[i], df);
    out.evaluations = 1;
    return out;
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd sub(k, k);
  std::vector<double> lo(static_cast<std::size_t>(k)), hi(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto src = static_cast<std::size_t>(keep[static_cast<std::size_t>(i)]);
    lo[static_cast<std::size_t>(i)] = lower[src];
    hi[static_cast<std::size_t>(i)] = upper[src];
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = r(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  }
  const detail::IntegrationPlan plan(std::move(lo), std::move(hi), sub, df);
  return detail::integrate(plan, cfg, detail::DecisionRule{decision_thresholds});
}

// Which box the equicoordinate quantile refers to: TwoSidedBox [-t, t]^q,
// UpperOneSided (-inf, t]^q, LowerOneSided [-t, inf)^q. The two one-sided
// boxes have equal probability by symmetry.
enum class BoxTail { TwoSidedBox, LowerOneSided, UpperOneSided };

inline void equicoordinate_box(double t, std::size_t q, BoxTail tail, std::vector<double>& lower,
                               std::vector<double>& upper) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  lower.assign(q, tail == BoxTail::UpperOneSided ? -inf : -t);
  upper.assign(q, tail == BoxTail::LowerOneSided ? inf : t);
}

struct CriticalValue {
  double value = 0.0;
  double probability = 0.0;  // box probability at value
  double error = 0.0;        // its QMC standard error
  int evaluations = 0;       // box probabilities computed
};

// Smallest t with P(box(t)) >= 1 - alpha.
//
// The box probability is evaluated with a fixed seed (common random numbers)
// so it is a deterministic, monotone-up-to-noise function of t. The root is
// bracketed between the single-coordinate quantile (a lower bound) and the
// Bonferroni quantile (an upper bound) and refined by Illinois regula falsi,
// which keeps the bracket, until the probability is within 1e-5 of target
// or the bracket is narrower than 1e-4.
inline CriticalValue equicoordinate_critical_value(double alpha, const CorrelationMatrix& r, double df, BoxTail tail,
                                                   const QmcConfig& cfg = {}) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in (0, 0.5]");
  cfg.validate();
  const auto q = static_cast<std::size_t>(r.dimension());
  const double side = tail == BoxTail::TwoSidedBox ? 2.0 : 1.0;
  const double target = 1.0 - alpha;

  CriticalValue out;
  const double t_single = detail::univariate_quantile(1.0 - alpha / side, df);
  if (q == 1) {
    out.value = t_single;
    out.probability = target;
    return out;
  }
  std::vector<double> lo, hi;
  auto eval = [&](double t) {
    equicoordinate_box(t, q, tail, lo, hi);
    ++out.evaluations;
    return mvt_rectangle_probability(lo, hi, r, df, cfg);
  };
  auto accept = [&](double t, const MvtProbability& p) {
    out.value = t;
    out.probability = p.value;
    out.error = p.error;
    return out;
  };

  double a = t_single;
  auto pa = eval(a);
  if (pa.value >= target) return accept(a, pa);
  double b = detail::univariate_quantile(1.0 - alpha / (side * static_cast<double>(q)), df);
  auto pb = eval(b);
  for (int grow = 0; pb.value < target; ++grow) {
    if (grow == 20) throw NumericalError("equicoordinate quantile: could not bracket the root");
    a = b;
    pa = pb;
    b *= 1.1;
    pb = eval(b);
  }

  double fa = pa.value - target;
  double fb = pb.value - target;
  int side_kept = 0;
  for (int iter = 0; iter < 60; ++iter) {
    if (fb < 1e-5 || b - a < 1e-4) return accept(b, pb);
    double t = (a * fb - b * fa) / (fb - fa);
    if (!(t > a && t < b)) t = 0.5 * (a + b);
    const auto pt = eval(t);
    const double ft = pt.value - target;
    if (ft >= 0.0) {
      b = t;
      fb = ft;
      pb = pt;
      if (side_kept == -1) fa *= 0.5;
      side_kept = -1;
    } else {
      if (std::fabs(ft) < 1e-5) return accept(b, pb);
      a = t;
      fa = ft;
      if (side_kept == 1) fb *= 0.5;
      side_kept = 1;
    }
  }
  throw NumericalError("equicoordinate quantile: root finder did not converge");
}

inline double equicoordinate_quantile(double alpha, const CorrelationMatrix& r, double df, BoxTail tail,
                                      const QmcConfig& cfg = {}) {
  return equicoordinate_critical_value(alpha, r, df, tail, cfg).value;
}

}  // namespace trendsim
