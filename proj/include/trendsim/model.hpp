#pragma once

// Cell-means model y = mu_cell + e, its classical and
// heteroscedasticity-consistent covariance, and the classical two-way
// interaction F-test.

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "trendsim/dataset.hpp"
#include "trendsim/errors.hpp"

namespace trendsim {

struct FittedCellMeansModel {
  Eigen::VectorXd cell_means;           // K cells, lab-major
  std::vector<int> cell_sizes;          // K
  Eigen::VectorXd residuals;            // per observation, input order
  std::vector<std::size_t> observation_cells;
  Eigen::VectorXd cell_rss;             // per-cell sum of squared residuals
  long df_resid = 0;                    // N - K
  double pooled_variance = 0.0;         // RSS / df_resid
  bool degenerate = false;              // zero residual variance
  FactorLevels lab_factor;
  FactorLevels dose_factor;

  Eigen::Index cells() const { return cell_means.size(); }
  long observations() const { return static_cast<long>(residuals.size()); }
};

inline FittedCellMeansModel fit_cell_means(const Dataset& d) {
  const std::size_t K = d.cell_count();
  const long N = static_cast<long>(d.size());
  FittedCellMeansModel m;
  m.df_resid = N - static_cast<long>(K);
  if (m.df_resid <= 0) {
    throw DataError("cell means model has df_resid = N - K = " + std::to_string(N) + " - " + std::to_string(K) +
                    " = " + std::to_string(m.df_resid) + "; need replicates within cells");
  }
  m.cell_sizes = d.cell_sizes();
  m.lab_factor = d.lab_factor;
  m.dose_factor = d.dose_factor;
  m.cell_means = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  m.observation_cells.reserve(d.size());
  for (const auto& o : d.observations) {
    const auto c = d.cell_index(o.lab, o.dose);
    m.observation_cells.push_back(c);
    m.cell_means[static_cast<Eigen::Index>(c)] += o.response;
  }
  for (std::size_t c = 0; c < K; ++c) {
    if (m.cell_sizes[c] == 0) throw DataError("empty cell " + d.cell_label(c));
    m.cell_means[static_cast<Eigen::Index>(c)] /= m.cell_sizes[c];
  }
  m.residuals.resize(N);
  m.cell_rss = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  for (long i = 0; i < N; ++i) {
    const auto c = static_cast<Eigen::Index>(m.observation_cells[static_cast<std::size_t>(i)]);
    const double e = d.observations[static_cast<std::size_t>(i)].response - m.cell_means[c];
    m.residuals[i] = e;
    m.cell_rss[c] += e * e;
  }
  const double rss = m.cell_rss.sum();
  m.pooled_variance = rss / static_cast<double>(m.df_resid);
  // relative to the response scale so that constant data is caught exactly
  const double scale = m.cell_means.cwiseAbs().maxCoeff();
  m.degenerate = !(m.pooled_variance > 1e-28 * std::fmax(1.0, scale * scale));
  return m;
}

enum class CovarianceKind { Classical, HC0, HC1, HC3 };

inline std::string_view to_string(CovarianceKind k) {
  switch (k) {
    case CovarianceKind::Classical: return "classical";
    case CovarianceKind::HC0: return "hc0";
    case CovarianceKind::HC1: return "hc1";
    case CovarianceKind::HC3: return "hc3";
  }
  return "classical";
}

inline CovarianceKind parse_covariance_kind(std::string_view s) {
  for (auto k : {CovarianceKind::Classical, CovarianceKind::HC0, CovarianceKind::HC1, CovarianceKind::HC3}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown covariance estimator '" + std::string(s) + "'");
}

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;  // K x K over cell means
  CovarianceKind estimator = CovarianceKind::Classical;
  long df = 0;
};

// Covariance of the cell means. The cell-means design is orthogonal, so the
// sandwich (X'X)^-1 X' diag(w) X (X'X)^-1 is diagonal with entries
// sum_c(w e^2) / n_c^2, and every leverage in cell c equals 1 / n_c.
// The residual df N - K is kept for every estimator.
inline CovarianceEstimate covariance(const FittedCellMeansModel& m, CovarianceKind kind) {
  const Eigen::Index K = m.cells();
  CovarianceEstimate out;
  out.estimator = kind;
  out.df = m.df_resid;
  out.matrix = Eigen::MatrixXd::Zero(K, K);
  const double N = static_cast<double>(m.observations());
  for (Eigen::Index c = 0; c < K; ++c) {
    const double n = m.cell_sizes[static_cast<std::size_t>(c)];
    double v = 0.0;
    switch (kind) {
      case CovarianceKind::Classical:
        v = m.pooled_variance / n;
        break;
      case CovarianceKind::HC0:
        v = m.cell_rss[c] / (n * n);
        break;
      case CovarianceKind::HC1:
        v = m.cell_rss[c] / (n * n) * N / (N - static_cast<double>(K));
        break;
      case CovarianceKind::HC3: {
        if (n < 2) {
          throw DataError("HC3 covariance needs at least 2 observations per cell; cell " +
                          m.lab_factor.levels[static_cast<std::size_t>(c) / m.dose_factor.size()] + ":" +
                          m.dose_factor.levels[static_cast<std::size_t>(c) % m.dose_factor.size()] +
                          " has 1");
        }
        const double h = 1.0 / n;
        v = m.cell_rss[c] / ((1.0 - h) * (1.0 - h)) / (n * n);
        break;
      }
    }
    out.matrix(c, c) = v;
  }
  return out;
}

struct FTestResult {
  double F = 0.0;
  long df1 = 0;
  long df2 = 0;
  double p = 1.0;
};

// Classical two-way ANOVA test of the lab x dose interaction: extra residual
// sum of squares of the additive model over the cell-means model.
inline FTestResult interaction_f_test(const Dataset& d) {
  const auto l = static_cast<Eigen::Index>(d.lab_count());
  const auto doses = static_cast<Eigen::Index>(d.dose_count());
  if (l < 2) throw DataError("interaction F-test needs at least 2 laboratories");
  const auto full = fit_cell_means(d);
  if (full.degenerate) throw NumericalError("interaction F-test: zero residual variance");

  const auto N = static_cast<Eigen::Index>(d.size());
  const Eigen::Index p = 1 + (l - 1) + (doses - 1);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, p);
  Eigen::VectorXd y(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& o = d.observations[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    if (o.lab > 0) X(i, static_cast<Eigen::Index>(o.lab)) = 1.0;
    if (o.dose > 0) X(i, (l - 1) + static_cast<Eigen::Index>(o.dose)) = 1.0;
    y[i] = o.response;
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  const double rss_additive = (y - X * beta).squaredNorm();
  const double rss_full = full.cell_rss.sum();

  FTestResult r;
  r.df1 = static_cast<long>((l - 1) * (doses - 1));
  r.df2 = full.df_resid;
  r.F = std::fmax(0.0, (rss_additive - rss_full) / static_cast<double>(r.df1)) /
        (rss_full / static_cast<double>(r.df2));
  const boost::math::fisher_f_distribution<double> dist(static_cast<double>(r.df1), static_cast<double>(r.df2));
  r.p = boost::math::cdf(boost::math::complement(dist, r.F));
  return r;
}

}  // namespace trendsim
