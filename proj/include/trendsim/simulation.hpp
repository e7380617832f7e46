#pragma once

// Replicated ring-trial simulation: generate labs x doses x n data from a
// cell-mean model, run the interaction max-t pipeline on each replicate and
// tabulate familywise rejection, power and equivalence rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "trendsim/contrasts.hpp"
#include "trendsim/dataset.hpp"
#include "trendsim/inference.hpp"
#include "trendsim/model.hpp"
#include "trendsim/mvt.hpp"

namespace trendsim {

enum class VariancePattern { Homoscedastic, IncreasingWithDose, PerCell };

inline std::string_view to_string(VariancePattern v) {
  switch (v) {
    case VariancePattern::Homoscedastic: return "homoscedastic";
    case VariancePattern::IncreasingWithDose: return "increasing";
    case VariancePattern::PerCell: return "per-cell";
  }
  return "homoscedastic";
}

inline VariancePattern parse_variance_pattern(std::string_view s) {
  for (auto v : {VariancePattern::Homoscedastic, VariancePattern::IncreasingWithDose, VariancePattern::PerCell}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown variance pattern '" + std::string(s) + "'");
}

struct SimulationScenario {
  std::size_t labs = 7;
  std::vector<double> doses = twofold_concentrations(6);  // control first
  int n = 6;
  double base = 0.0;
  std::vector<double> lab_shifts;  // per lab, empty = none
  std::vector<double> trend;       // per dose, empty = flat
  // Extra trend in one lab (0-based), `interaction_sigma` sigmas at the top
  // dose along the normalized trend shape (linear in dose rank if flat).
  std::size_t interaction_lab = 0;
  double interaction_sigma = 0.0;
  double sigma = 1.0;
  VariancePattern variance = VariancePattern::Homoscedastic;
  double variance_ratio = 4.0;          // top dose / control variance for IncreasingWithDose
  std::vector<double> sd_multipliers;   // per cell, lab-major, for PerCell
  std::size_t replicates = 1000;
  std::uint64_t seed = 20210611;

  std::size_t cells() const { return labs * doses.size(); }

  void validate() const {
    if (labs < 2) throw std::invalid_argument("scenario needs at least 2 labs");
    if (doses.size() < 2) throw std::invalid_argument("scenario needs a control and at least one dose");
    for (std::size_t i = 1; i < doses.size(); ++i) {
      if (!(doses[i] > doses[i - 1])) throw std::invalid_argument("scenario doses must be strictly ascending");
    }
    if (n < 1) throw std::invalid_argument("scenario needs n >= 1 per cell");
    if (replicates < 1) throw std::invalid_argument("scenario needs at least one replicate");
    if (!(sigma > 0.0)) throw std::invalid_argument("scenario sigma must be positive");
    if (!lab_shifts.empty() && lab_shifts.size() != labs) {
      throw std::invalid_argument("lab_shifts needs one entry per lab");
    }
    if (!trend.empty() && trend.size() != doses.size()) throw std::invalid_argument("trend needs one entry per dose");
    if (interaction_lab >= labs) throw std::invalid_argument("interaction lab out of range");
    if (variance == VariancePattern::IncreasingWithDose && !(variance_ratio > 0.0)) {
      throw std::invalid_argument("variance ratio must be positive");
    }
    if (variance == VariancePattern::PerCell) {
      if (sd_multipliers.size() != cells()) throw std::invalid_argument("sd_multipliers needs one entry per cell");
      for (double m : sd_multipliers) {
        if (!(m > 0.0)) throw std::invalid_argument("sd multipliers must be positive");
      }
    }
  }

  std::vector<double> cell_means() const {
    const std::size_t k = doses.size();
    std::vector<double> shape(k, 0.0);
    double top = 0.0;
    for (std::size_t d = 0; d < k && !trend.empty(); ++d) top = std::max(top, std::fabs(trend[d] - trend[0]));
    for (std::size_t d = 0; d < k; ++d) {
      shape[d] = top > 0.0 ? (trend[d] - trend[0]) / top : static_cast<double>(d) / static_cast<double>(k - 1);
    }
    std::vector<double> mu(cells());
    for (std::size_t l = 0; l < labs; ++l) {
      for (std::size_t d = 0; d < k; ++d) {
        double m = base + (lab_shifts.empty() ? 0.0 : lab_shifts[l]) + (trend.empty() ? 0.0 : trend[d]);
        if (l == interaction_lab) m += interaction_sigma * sigma * shape[d];
        mu[l * k + d] = m;
      }
    }
    return mu;
  }

  std::vector<double> cell_sds() const {
    const std::size_t k = doses.size();
    std::vector<double> sd(cells(), sigma);
    for (std::size_t c = 0; c < cells(); ++c) {
      const double frac = static_cast<double>(c % k) / static_cast<double>(k - 1);
      if (variance == VariancePattern::IncreasingWithDose) sd[c] = sigma * std::sqrt(std::pow(variance_ratio, frac));
      if (variance == VariancePattern::PerCell) sd[c] = sigma * sd_multipliers[c];
    }
    return sd;
  }
};

// Ring-trial-like design of the bundled dataset: 7 labs, control plus six
// concentrations up to 0.5, n = 6, additive lab shifts, saturating trend,
// mildly dose-increasing variance, no interaction.
inline SimulationScenario ames_like_scenario() {
  SimulationScenario s;
  s.labs = 7;
  s.doses = twofold_concentrations(6);
  s.n = 6;
  s.base = 3.0;
  s.lab_shifts = {0.0, 0.15, -0.2, 0.1, 0.05, -0.1, 0.25};
  for (double d : s.doses) s.trend.push_back(1.2 * (1.0 - std::exp(-d / 0.08)));
  s.sigma = 0.2;
  s.variance = VariancePattern::IncreasingWithDose;
  s.variance_ratio = 1.5;
  s.replicates = 1;
  s.seed = 4;
  return s;
}

// Replicate r of the scenario; depends only on (seed, r).
inline Dataset simulate_dataset(const SimulationScenario& s, std::size_t replicate) {
  s.validate();
  const auto mu = s.cell_means();
  const auto sd = s.cell_sds();
  const std::size_t k = s.doses.size();
  boost::random::mt19937_64 rng(detail::splitmix64(s.seed ^ detail::splitmix64(replicate + 0x5bd1e995ULL)));
  boost::random::normal_distribution<double> z;
  std::vector<std::string> labs;
  std::vector<double> doses, y;
  std::vector<std::size_t> rows;
  std::size_t row = 0;
  for (std::size_t l = 0; l < s.labs; ++l) {
    for (std::size_t d = 0; d < k; ++d) {
      for (int i = 0; i < s.n; ++i) {
        labs.push_back(std::to_string(l + 1));
        doses.push_back(s.doses[d]);
        y.push_back(mu[l * k + d] + sd[l * k + d] * z(rng));
        rows.push_back(++row);
      }
    }
  }
  return make_dataset(labs, doses, y, rows);
}

struct SimulationSettings {
  ContrastKind dose_contrast = ContrastKind::Williams;
  CovarianceKind estimator = CovarianceKind::HC3;
  Alternative alternative = Alternative::TwoSided;
  double alpha = 0.05;
  double p_threshold = 0.10;
  QmcConfig qmc{};
  int workers = 1;  // 0 = hardware concurrency; results do not depend on it
};

struct ReplicateOutcome {
  double min_p = 1.0;         // smallest adjusted p over all contrasts
  double target_min_p = 1.0;  // smallest adjusted p in the interaction lab's block
  bool f_reject = false;
  bool decided = true;        // mvt decision reached within budget
};

// Single-step adjusted p at the largest statistic, evaluated in decision
// mode: precise enough to place it against alpha and the threshold.
inline ReplicateOutcome analyze_replicate(const Dataset& d, const SimulationScenario& s, const SimulationSettings& cfg) {
  const auto model = fit_cell_means(d);
  if (model.degenerate) throw NumericalError("simulated replicate has zero residual variance");
  const auto cov = covariance(model, cfg.estimator);
  const auto c = interaction_contrasts(model.lab_factor, model.dose_factor, cfg.dose_contrast);
  const Eigen::VectorXd est = c.weights * model.cell_means;
  const Eigen::VectorXd se = (c.weights * cov.matrix * c.weights.transpose()).diagonal().cwiseSqrt();
  const auto r = correlation_from_contrasts(c, cov);
  const double df = static_cast<double>(cov.df);
  const std::vector<double> thresholds{1.0 - cfg.alpha, 1.0 - cfg.p_threshold};

  const std::string target = model.lab_factor.levels[s.interaction_lab];
  double s_all = -std::numeric_limits<double>::infinity(), s_target = s_all;
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    const double st = directed_statistic(est[j] / se[j], cfg.alternative);
    s_all = std::max(s_all, st);
    if (lab_of_contrast(c.row_labels[static_cast<std::size_t>(j)]) == target) s_target = std::max(s_target, st);
  }
  ReplicateOutcome out;
  auto qmc = cfg.qmc;
  qmc.threads = 1;
  const auto p_all = adjusted_p_value(s_all, r, df, cfg.alternative, qmc, thresholds);
  out.min_p = p_all.value;
  out.decided = p_all.converged;
  if (s_target == s_all) {
    out.target_min_p = p_all.value;
  } else {
    const auto p_t = adjusted_p_value(s_target, r, df, cfg.alternative, qmc, std::span(thresholds).first(1));
    out.target_min_p = p_t.value;
    out.decided = out.decided && p_t.converged;
  }
  out.f_reject = interaction_f_test(d).p < cfg.alpha;
  return out;
}

struct Rate {
  double rate = 0.0;
  double se = 0.0;  // binomial standard error
  std::size_t count = 0;
};

inline Rate binomial_rate(std::size_t hits, std::size_t n) {
  Rate r;
  r.count = hits;
  r.rate = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  r.se = n ? std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(n)) : 0.0;
  return r;
}

struct SimulationSummary {
  std::size_t replicates = 0;
  double interaction_sigma = 0.0;
  Rate any_rejection;       // min adjusted p < alpha: familywise error under the null
  Rate target_rejection;    // interaction lab's block rejects
  Rate global_equivalence;  // every adjusted p > p_threshold
  Rate f_rejection;         // classical interaction F-test at alpha
  std::size_t undecided = 0;
  std::vector<ReplicateOutcome> outcomes;
};

inline SimulationSummary simulate(const SimulationScenario& s, const SimulationSettings& cfg) {
  s.validate();
  cfg.qmc.validate();
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0 && cfg.p_threshold > 0.0 && cfg.p_threshold < 1.0)) {
    throw std::invalid_argument("alpha and p threshold must lie in (0, 1)");
  }
  if (cfg.estimator == CovarianceKind::HC3 && s.n < 2) {
    throw DataError("infeasible scenario: HC3 needs n >= 2 per cell");
  }
  if (s.n < 2) {
    throw DataError("infeasible scenario: n = 1 leaves no residual degrees of freedom");
  }
  SimulationSummary sum;
  sum.replicates = s.replicates;
  sum.interaction_sigma = s.interaction_sigma;
  sum.outcomes.resize(s.replicates);

  std::size_t workers = cfg.workers == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                         : static_cast<std::size_t>(std::max(1, cfg.workers));
  workers = std::min(workers, s.replicates);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t r = w; r < s.replicates; r += workers) {
        sum.outcomes[r] = analyze_replicate(simulate_dataset(s, r), s, cfg);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::size_t any = 0, target = 0, equiv = 0, f = 0;
  for (const auto& o : sum.outcomes) {
    any += o.min_p < cfg.alpha;
    target += o.target_min_p < cfg.alpha;
    equiv += o.min_p > cfg.p_threshold;
    f += o.f_reject;
    sum.undecided += !o.decided;
  }
  sum.any_rejection = binomial_rate(any, s.replicates);
  sum.target_rejection = binomial_rate(target, s.replicates);
  sum.global_equivalence = binomial_rate(equiv, s.replicates);
  sum.f_rejection = binomial_rate(f, s.replicates);
  return sum;
}

}  // namespace trendsim
