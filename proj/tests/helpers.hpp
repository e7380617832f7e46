#pragma once

// Shared fixtures for the inference tests and the acceptance runner.

#include <random>
#include <string>
#include <vector>

#include "trendsim/inference.hpp"
#include "trendsim/model.hpp"

namespace fixture {

inline trendsim::MaxTResult analyze(const trendsim::Dataset& d, trendsim::CovarianceKind kind,
                                    trendsim::Alternative alt, double alpha, const trendsim::QmcConfig& cfg = {},
                                    trendsim::ContrastKind dose_kind = trendsim::ContrastKind::Williams) {
  const auto m = trendsim::fit_cell_means(d);
  const auto cov = trendsim::covariance(m, kind);
  const auto c = trendsim::interaction_contrasts(m.lab_factor, m.dose_factor, dose_kind);
  return trendsim::max_t_test(m, c, cov, alt, alpha, cfg);
}

// Result shell carrying only labels and p-values, for the equivalence rules.
inline trendsim::MaxTResult labelled_result(std::size_t labs, std::size_t doses, trendsim::ContrastKind dose_kind,
                                            const std::vector<double>& p_adjusted) {
  std::vector<double> values;
  for (std::size_t i = 0; i < doses; ++i) values.push_back(static_cast<double>(i));
  const auto c = trendsim::interaction_contrasts(trendsim::balanced_lab_factor(labs),
                                                 trendsim::balanced_dose_factor(values), dose_kind);
  trendsim::MaxTResult r;
  for (std::size_t j = 0; j < c.row_labels.size(); ++j) {
    trendsim::ContrastResult row;
    row.label = c.row_labels[j];
    row.p_adjusted = p_adjusted.at(j);
    row.p_raw = p_adjusted.at(j);
    r.contrasts.push_back(row);
  }
  return r;
}

// Small random crossed dataset: 2-4 labs, 2-4 doses, n in [2, 5], optional
// interaction so that rejections occur.
inline trendsim::Dataset random_design(std::mt19937_64& rng, double interaction = 0.0) {
  std::uniform_int_distribution<int> labs(2, 4), doses(2, 4), n(2, 5);
  std::normal_distribution<double> z;
  const int l = labs(rng), k = doses(rng);
  std::vector<std::string> lab;
  std::vector<double> dose, y;
  for (int i = 0; i < l; ++i) {
    const double shift = z(rng);
    for (int j = 0; j < k; ++j) {
      const int cells = n(rng);
      const double mu = shift + 0.5 * j + (i == 0 ? interaction * j : 0.0);
      for (int r = 0; r < cells; ++r) {
        lab.push_back("L" + std::to_string(i + 1));
        dose.push_back(j);
        y.push_back(mu + (1.0 + 0.3 * j) * z(rng));
      }
    }
  }
  return trendsim::make_dataset(lab, dose, y);
}

}  // namespace fixture
