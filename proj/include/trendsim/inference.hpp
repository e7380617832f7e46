#pragma once

// Single-step max-t multiple contrast test over a fitted cell-means model:
// estimates, adjusted p-values from the multivariate t, compatible
// simultaneous confidence intervals, and equivalence verdicts.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trendsim/contrasts.hpp"
#include "trendsim/errors.hpp"
#include "trendsim/model.hpp"
#include "trendsim/mvt.hpp"

namespace trendsim {

enum class Alternative { TwoSided, Greater, Less };

inline std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Greater: return "greater";
    case Alternative::Less: return "less";
  }
  return "two-sided";
}

inline Alternative parse_alternative(std::string_view s) {
  for (auto a : {Alternative::TwoSided, Alternative::Greater, Alternative::Less}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown alternative '" + std::string(s) + "'");
}

inline BoxTail box_tail(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return BoxTail::TwoSidedBox;
    case Alternative::Greater: return BoxTail::UpperOneSided;
    case Alternative::Less: return BoxTail::LowerOneSided;
  }
  return BoxTail::TwoSidedBox;
}

// Statistic on the scale where large values speak against H0.
inline double directed_statistic(double t, Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return std::fabs(t);
    case Alternative::Greater: return t;
    case Alternative::Less: return -t;
  }
  return std::fabs(t);
}

// Interaction contrasts of the ring-trial analysis: grand-mean comparisons
// of the labs crossed with a dose contrast (Williams or highest dose).
inline ContrastMatrix interaction_contrasts(const FactorLevels& lab, const FactorLevels& dose, ContrastKind dose_kind) {
  ContrastMatrix c_dose;
  switch (dose_kind) {
    case ContrastKind::Williams: c_dose = williams_matrix(dose); break;
    case ContrastKind::HighestDose: c_dose = highest_dose_matrix(dose); break;
    case ContrastKind::Dunnett: c_dose = dunnett_matrix(dose); break;
    default: throw std::invalid_argument("dose contrast must be williams, highest or dunnett");
  }
  return kronecker_interaction(grand_mean_matrix(lab), c_dose);
}

struct ContrastResult {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double mvt_error = 0.0;
  // |t| so close to the critical value that QMC noise can flip the
  // p-value / interval agreement
  bool borderline = false;
};

struct MaxTResult {
  std::vector<ContrastResult> contrasts;
  Alternative alternative = Alternative::TwoSided;
  double alpha = 0.05;
  long df = 0;
  CorrelationMatrix correlation;
  double critical_value = 0.0;
  double critical_error = 0.0;
  CovarianceKind estimator = CovarianceKind::Classical;
  double mvt_error = 0.0;
  bool mvt_converged = true;
};

inline double raw_p_value(double t, double df, Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return std::min(1.0, 2.0 * detail::univariate_cdf(-std::fabs(t), df));
    case Alternative::Greater: return detail::univariate_cdf(-t, df);
    case Alternative::Less: return detail::univariate_cdf(t, df);
  }
  return 1.0;
}

// Single-step adjusted p-value for the directed statistic s: one minus the
// probability that every coordinate stays inside the box determined by s.
inline MvtProbability adjusted_p_value(double s, const CorrelationMatrix& r, double df, Alternative a,
                                       const QmcConfig& cfg, std::span<const double> decision_thresholds = {}) {
  const auto q = static_cast<std::size_t>(r.dimension());
  MvtProbability inside;
  if (a == Alternative::TwoSided && !(s > 0.0)) {
    inside.value = 0.0;
  } else {
    std::vector<double> lo, hi;
    equicoordinate_box(s, q, box_tail(a), lo, hi);
    inside = mvt_rectangle_probability(lo, hi, r, df, cfg, decision_thresholds);
  }
  inside.value = std::clamp(1.0 - inside.value, 0.0, 1.0);
  return inside;
}

inline MaxTResult max_t_test(const FittedCellMeansModel& model, const ContrastMatrix& c, const CovarianceEstimate& cov,
                             Alternative alternative, double alpha, const QmcConfig& cfg = {}) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in (0, 0.5]");
  if (const auto v = validate(c); !v.empty()) throw std::invalid_argument("invalid contrast matrix: " + v.front());
  if (c.cols() != model.cells() || cov.matrix.rows() != model.cells()) {
    throw std::invalid_argument("contrast matrix has " + std::to_string(c.cols()) + " columns for a model with " +
                                std::to_string(model.cells()) + " cells");
  }
  if (cov.df < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  if (model.degenerate) throw NumericalError("zero residual variance: t statistics are undefined");

  MaxTResult res;
  res.alternative = alternative;
  res.alpha = alpha;
  res.df = cov.df;
  res.estimator = cov.estimator;
  const double df = static_cast<double>(cov.df);

  const Eigen::VectorXd est = c.weights * model.cell_means;
  const Eigen::VectorXd var = (c.weights * cov.matrix * c.weights.transpose()).diagonal();
  const Eigen::Index q = c.rows();
  res.contrasts.resize(static_cast<std::size_t>(q));
  for (Eigen::Index j = 0; j < q; ++j) {
    auto& row = res.contrasts[static_cast<std::size_t>(j)];
    row.label = c.row_labels[static_cast<std::size_t>(j)];
    row.estimate = est[j];
    if (!(var[j] > 0.0) || !std::isfinite(var[j])) {
      throw NumericalError("degenerate standard error for contrast '" + row.label + "'");
    }
    row.se = std::sqrt(var[j]);
    row.t = row.estimate / row.se;
    row.p_raw = raw_p_value(row.t, df, alternative);
  }
  try {
    res.correlation = correlation_from_contrasts(c, cov);
    const auto crit = equicoordinate_critical_value(alpha, res.correlation, df, box_tail(alternative), cfg);
    res.critical_value = crit.value;
    res.critical_error = crit.error;
    res.mvt_error = crit.error;

    std::map<double, MvtProbability> cache;
    for (auto& row : res.contrasts) {
      const double s = directed_statistic(row.t, alternative);
      auto it = cache.find(s);
      if (it == cache.end()) it = cache.emplace(s, adjusted_p_value(s, res.correlation, df, alternative, cfg)).first;
      row.p_adjusted = it->second.value;
      row.mvt_error = it->second.error;
      res.mvt_error = std::max(res.mvt_error, it->second.error);
      res.mvt_converged = res.mvt_converged && it->second.converged;
    }
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("multivariate t evaluation failed: ") + e.what());
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  for (auto& row : res.contrasts) {
    const double half = res.critical_value * row.se;
    switch (alternative) {
      case Alternative::TwoSided:
        row.ci_lower = row.estimate - half;
        row.ci_upper = row.estimate + half;
        break;
      case Alternative::Greater:
        row.ci_lower = row.estimate - half;
        row.ci_upper = inf;
        break;
      case Alternative::Less:
        row.ci_lower = -inf;
        row.ci_upper = row.estimate + half;
        break;
    }
    const double slack = 3.0 * (row.mvt_error + res.critical_error);
    const double s = directed_statistic(row.t, alternative);
    row.borderline = std::fabs(row.p_adjusted - alpha) <= slack || std::fabs(s - res.critical_value) <= slack;
  }
  return res;
}

struct SimultaneousInterval {
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
};

inline std::vector<SimultaneousInterval> simultaneous_ci(const MaxTResult& result) {
  std::vector<SimultaneousInterval> out;
  out.reserve(result.contrasts.size());
  for (const auto& c : result.contrasts) out.push_back({c.label, c.ci_lower, c.ci_upper});
  return out;
}

// Coverage of the intervals in `result`: 1 - alpha two-sided, 1 - alpha
// one-sided. With alpha = 2 * policy alpha the two-sided intervals are the
// (1 - 2 alpha) intervals of the equivalence reading.
inline double ci_level(const MaxTResult& result) { return 1.0 - result.alpha; }

enum class EquivalenceMode { IUT_UIT, IUT_IUT };

inline std::string_view to_string(EquivalenceMode m) { return m == EquivalenceMode::IUT_UIT ? "iut-uit" : "iut-iut"; }

inline EquivalenceMode parse_equivalence_mode(std::string_view s) {
  if (s == "iut-uit") return EquivalenceMode::IUT_UIT;
  if (s == "iut-iut") return EquivalenceMode::IUT_IUT;
  throw std::invalid_argument("unknown equivalence policy '" + std::string(s) + "'");
}

struct EquivalencePolicy {
  EquivalenceMode mode = EquivalenceMode::IUT_UIT;
  double p_threshold = 0.10;
  double alpha = 0.05;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= p_threshold && p_threshold < 1.0)) {
      throw std::invalid_argument("equivalence policy needs 0 < alpha <= p_threshold < 1");
    }
  }
};

enum class GlobalVerdict { GlobalEquivalence, PartialEquivalence, NoEquivalence };

inline std::string_view to_string(GlobalVerdict g) {
  switch (g) {
    case GlobalVerdict::GlobalEquivalence: return "GlobalEquivalence";
    case GlobalVerdict::PartialEquivalence: return "PartialEquivalence";
    case GlobalVerdict::NoEquivalence: return "NoEquivalence";
  }
  return "NoEquivalence";
}

struct ContrastVerdict {
  std::string label;
  std::string lab;
  double p_used = 1.0;
  bool equivalent = false;
};

struct LabVerdict {
  std::string lab;
  bool all_equivalent = true;
  double min_p = 1.0;
  std::size_t contrasts = 0;
};

struct EquivalenceReport {
  EquivalencePolicy policy;
  std::vector<ContrastVerdict> contrasts;
  std::vector<LabVerdict> labs;  // first-appearance order
  GlobalVerdict global = GlobalVerdict::NoEquivalence;
  std::vector<std::string> equivalent_labs;
};

// Laboratory singled out by an interaction label
// "((lab - others):doses) - ((lab - others):control)".
inline std::string lab_of_contrast(std::string_view label) {
  if (label.substr(0, 2) != "((") throw DataError("cannot parse interaction label '" + std::string(label) + "'");
  const auto sep = label.find(" - ", 2);
  const auto close = label.find("):", 2);
  if (sep == std::string_view::npos || close == std::string_view::npos || sep > close || sep == 2) {
    throw DataError("cannot parse interaction label '" + std::string(label) + "'");
  }
  return std::string(label.substr(2, sep - 2));
}

// IUT_UIT compares adjusted p-values, IUT_IUT the marginal ones, against the
// threshold with a strict "p > threshold" rule.
inline EquivalenceReport equivalence_report(const MaxTResult& result, std::span<const double> raw_p,
                                            const EquivalencePolicy& policy) {
  policy.validate();
  if (raw_p.size() != result.contrasts.size()) {
    throw std::invalid_argument("raw p-value count does not match the contrast count");
  }
  EquivalenceReport rep;
  rep.policy = policy;
  std::map<std::string, std::size_t> lab_pos;
  for (std::size_t i = 0; i < result.contrasts.size(); ++i) {
    const auto& c = result.contrasts[i];
    ContrastVerdict v;
    v.label = c.label;
    v.lab = lab_of_contrast(c.label);
    v.p_used = policy.mode == EquivalenceMode::IUT_UIT ? c.p_adjusted : raw_p[i];
    v.equivalent = v.p_used > policy.p_threshold;
    auto [it, fresh] = lab_pos.emplace(v.lab, rep.labs.size());
    if (fresh) rep.labs.push_back(LabVerdict{v.lab, true, 1.0, 0});
    auto& lab = rep.labs[it->second];
    lab.all_equivalent = lab.all_equivalent && v.equivalent;
    lab.min_p = std::min(lab.min_p, v.p_used);
    ++lab.contrasts;
    rep.contrasts.push_back(std::move(v));
  }
  for (const auto& lab : rep.labs) {
    if (lab.all_equivalent) rep.equivalent_labs.push_back(lab.lab);
  }
  if (!rep.labs.empty() && rep.equivalent_labs.size() == rep.labs.size()) {
    rep.global = GlobalVerdict::GlobalEquivalence;
  } else if (!rep.equivalent_labs.empty()) {
    rep.global = GlobalVerdict::PartialEquivalence;
  } else {
    rep.global = GlobalVerdict::NoEquivalence;
  }
  return rep;
}

inline EquivalenceReport equivalence_report(const MaxTResult& result, const EquivalencePolicy& policy) {
  std::vector<double> raw;
  for (const auto& c : result.contrasts) raw.push_back(c.p_raw);
  return equivalence_report(result, raw, policy);
}

}  // namespace trendsim
