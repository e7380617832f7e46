#pragma once

// Contrast matrices for the dose factor, the laboratory factor, and their
// Kronecker-product interaction.
//
// Dose factors are ordered ascending with the control first. Cells of a
// two-way layout are ordered lab-major: all doses of lab 1, then lab 2, ...
// so the interaction entry (r * q_dose + s, i * m_dose + t) equals
// lab(r, i) * dose(s, t).

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "trendsim/detail/format.hpp"

namespace trendsim {

enum class ContrastKind { Williams, GrandMean, HighestDose, Dunnett, UserDefined, Interaction };

inline std::string_view to_string(ContrastKind kind) {
  switch (kind) {
    case ContrastKind::Williams: return "Williams";
    case ContrastKind::GrandMean: return "GrandMean";
    case ContrastKind::HighestDose: return "HighestDose";
    case ContrastKind::Dunnett: return "Dunnett";
    case ContrastKind::UserDefined: return "UserDefined";
    case ContrastKind::Interaction: return "Interaction";
  }
  return "UserDefined";
}

inline ContrastKind parse_contrast_kind(std::string_view s) {
  for (auto k : {ContrastKind::Williams, ContrastKind::GrandMean, ContrastKind::HighestDose,
                 ContrastKind::Dunnett, ContrastKind::UserDefined, ContrastKind::Interaction}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown contrast kind '" + std::string(s) + "'");
}

// Levels of one factor with per-level replicate counts.
struct FactorLevels {
  std::string name;
  std::vector<std::string> levels;
  std::vector<int> sizes;
  bool first_is_control = false;

  std::size_t size() const { return levels.size(); }
};

// Throws std::invalid_argument when the factor is unusable for contrast
// generation: fewer than 2 levels, nonpositive sizes, duplicate labels.
inline void check_factor(const FactorLevels& f) {
  if (f.levels.size() < 2) {
    throw std::invalid_argument("factor '" + f.name + "' needs at least 2 levels, got " +
                                std::to_string(f.levels.size()));
  }
  if (f.sizes.size() != f.levels.size()) {
    throw std::invalid_argument("factor '" + f.name + "': " + std::to_string(f.sizes.size()) +
                                " sizes for " + std::to_string(f.levels.size()) + " levels");
  }
  for (std::size_t i = 0; i < f.sizes.size(); ++i) {
    if (f.sizes[i] < 1) {
      throw std::invalid_argument("factor '" + f.name + "': level '" + f.levels[i] +
                                  "' has nonpositive size " + std::to_string(f.sizes[i]));
    }
  }
  std::set<std::string> seen;
  for (const auto& l : f.levels) {
    if (!seen.insert(l).second) {
      throw std::invalid_argument("factor '" + f.name + "': duplicate level '" + l + "'");
    }
  }
}

// Dose factor from numeric concentrations (ascending, control first).
inline FactorLevels make_dose_factor(const std::vector<double>& values, std::vector<int> sizes,
                                     std::string name = "dose") {
  FactorLevels f;
  f.name = std::move(name);
  f.first_is_control = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw std::invalid_argument("dose values must be strictly ascending");
    }
    f.levels.push_back(detail::format_number(values[i]));
  }
  f.sizes = std::move(sizes);
  check_factor(f);
  return f;
}

inline FactorLevels make_nominal_factor(std::vector<std::string> labels, std::vector<int> sizes,
                                        std::string name = "lab") {
  FactorLevels f{std::move(name), std::move(labels), std::move(sizes), false};
  check_factor(f);
  return f;
}

// Control 0 plus k concentrations in a 2-fold series ending at top,
// e.g. k=6: 0, 0.015625, 0.03125, 0.0625, 0.125, 0.25, 0.5.
inline std::vector<double> twofold_concentrations(std::size_t k, double top = 0.5) {
  if (k < 1) throw std::invalid_argument("need at least one non-control concentration");
  std::vector<double> v(k + 1, 0.0);
  for (std::size_t i = k; i >= 1; --i) v[i] = top / static_cast<double>(std::uint64_t{1} << (k - i));
  return v;
}

// Balanced helpers: every level has size n.
inline FactorLevels balanced_dose_factor(const std::vector<double>& values, int n = 1) {
  return make_dose_factor(values, std::vector<int>(values.size(), n));
}

inline FactorLevels balanced_lab_factor(std::size_t labs, int n = 1) {
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= labs; ++i) labels.push_back(std::to_string(i));
  return make_nominal_factor(std::move(labels), std::vector<int>(labs, n));
}

struct InteractionShape {
  Eigen::Index lab_rows = 0;
  Eigen::Index dose_rows = 0;
  Eigen::Index lab_levels = 0;
  Eigen::Index dose_levels = 0;
};

struct ContrastMatrix {
  ContrastKind kind = ContrastKind::UserDefined;
  Eigen::MatrixXd weights;  // q x m
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  // Per row: the singled-out level group and the group it is compared
  // against, e.g. focus "0.25,0.5" / reference "0" for a Williams row.
  // Empty for user-defined matrices.
  std::vector<std::string> focus_groups;
  std::vector<std::string> reference_groups;
  std::optional<InteractionShape> interaction;

  Eigen::Index rows() const { return weights.rows(); }
  Eigen::Index cols() const { return weights.cols(); }
};

namespace detail {

inline std::string row_label(const std::string& focus, const std::string& reference) {
  return focus + " - " + reference;
}

inline ContrastMatrix start_matrix(ContrastKind kind, const FactorLevels& f, Eigen::Index q) {
  ContrastMatrix c;
  c.kind = kind;
  c.weights = Eigen::MatrixXd::Zero(q, static_cast<Eigen::Index>(f.size()));
  c.column_labels = f.levels;
  return c;
}

inline void require_dose_factor(const FactorLevels& dose) {
  check_factor(dose);
  if (!dose.first_is_control) {
    throw std::invalid_argument("factor '" + dose.name + "' has no control designation on its first level");
  }
}

}  // namespace detail

// Williams-type contrasts: row j compares the replicate-weighted mean of the
// top j dose groups against the control, j = 1..k.
inline ContrastMatrix williams_matrix(const FactorLevels& dose) {
  detail::require_dose_factor(dose);
  const auto levels = static_cast<Eigen::Index>(dose.size());
  const Eigen::Index k = levels - 1;
  auto c = detail::start_matrix(ContrastKind::Williams, dose, k);
  for (Eigen::Index j = 1; j <= k; ++j) {
    const Eigen::Index first = levels - j;
    double pooled = 0.0;
    for (Eigen::Index i = first; i < levels; ++i) pooled += dose.sizes[static_cast<std::size_t>(i)];
    std::vector<std::string> names;
    c.weights(j - 1, 0) = -1.0;
    for (Eigen::Index i = first; i < levels; ++i) {
      c.weights(j - 1, i) = dose.sizes[static_cast<std::size_t>(i)] / pooled;
      names.push_back(dose.levels[static_cast<std::size_t>(i)]);
    }
    c.focus_groups.push_back(detail::join(names, ","));
    c.reference_groups.push_back(dose.levels.front());
    c.row_labels.push_back(detail::row_label(c.focus_groups.back(), c.reference_groups.back()));
  }
  return c;
}

// Each laboratory against the replicate-weighted mean of all others:
// -1 on lab j, n_i / sum_{i != j} n_i elsewhere.
inline ContrastMatrix grand_mean_matrix(const FactorLevels& lab) {
  check_factor(lab);
  const auto l = static_cast<Eigen::Index>(lab.size());
  auto c = detail::start_matrix(ContrastKind::GrandMean, lab, l);
  double total = 0.0;
  for (int n : lab.sizes) total += n;
  for (Eigen::Index j = 0; j < l; ++j) {
    const double others = total - lab.sizes[static_cast<std::size_t>(j)];
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < l; ++i) {
      if (i == j) {
        c.weights(j, i) = -1.0;
      } else {
        c.weights(j, i) = lab.sizes[static_cast<std::size_t>(i)] / others;
        names.push_back(lab.levels[static_cast<std::size_t>(i)]);
      }
    }
    c.focus_groups.push_back(lab.levels[static_cast<std::size_t>(j)]);
    c.reference_groups.push_back(detail::join(names, ","));
    c.row_labels.push_back(detail::row_label(c.focus_groups.back(), c.reference_groups.back()));
  }
  return c;
}

// Single row: highest dose against control.
inline ContrastMatrix highest_dose_matrix(const FactorLevels& dose) {
  detail::require_dose_factor(dose);
  auto c = detail::start_matrix(ContrastKind::HighestDose, dose, 1);
  c.weights(0, 0) = -1.0;
  c.weights(0, c.cols() - 1) = 1.0;
  c.focus_groups.push_back(dose.levels.back());
  c.reference_groups.push_back(dose.levels.front());
  c.row_labels.push_back(detail::row_label(c.focus_groups.back(), c.reference_groups.back()));
  return c;
}

// Every dose against control (many-to-one).
inline ContrastMatrix dunnett_matrix(const FactorLevels& dose) {
  detail::require_dose_factor(dose);
  const auto levels = static_cast<Eigen::Index>(dose.size());
  auto c = detail::start_matrix(ContrastKind::Dunnett, dose, levels - 1);
  for (Eigen::Index i = 1; i < levels; ++i) {
    c.weights(i - 1, 0) = -1.0;
    c.weights(i - 1, i) = 1.0;
    c.focus_groups.push_back(dose.levels[static_cast<std::size_t>(i)]);
    c.reference_groups.push_back(dose.levels.front());
    c.row_labels.push_back(detail::row_label(c.focus_groups.back(), c.reference_groups.back()));
  }
  return c;
}

inline ContrastMatrix user_defined_matrix(Eigen::MatrixXd weights, std::vector<std::string> row_labels,
                                          std::vector<std::string> column_labels) {
  ContrastMatrix c;
  c.kind = ContrastKind::UserDefined;
  c.weights = std::move(weights);
  c.row_labels = std::move(row_labels);
  c.column_labels = std::move(column_labels);
  return c;
}

// Returns one message per violated invariant; empty means valid.
inline std::vector<std::string> validate(const ContrastMatrix& c) {
  std::vector<std::string> out;
  const Eigen::Index q = c.rows();
  const Eigen::Index m = c.cols();
  if (q < 1) out.push_back("matrix has no rows");
  if (m < 2) out.push_back("matrix has " + std::to_string(m) + " columns, need at least 2");
  if (static_cast<Eigen::Index>(c.row_labels.size()) != q) {
    out.push_back(std::to_string(c.row_labels.size()) + " row labels for " + std::to_string(q) + " rows");
  }
  if (static_cast<Eigen::Index>(c.column_labels.size()) != m) {
    out.push_back(std::to_string(c.column_labels.size()) + " column labels for " + std::to_string(m) +
                  " columns");
  }
  for (Eigen::Index r = 0; r < q; ++r) {
    const std::string row = "row " + std::to_string(r + 1);
    if (!c.weights.row(r).allFinite()) {
      out.push_back(row + ": non-finite weight");
      continue;
    }
    if ((c.weights.row(r).array() == 0.0).all()) {
      out.push_back(row + ": all weights zero");
      continue;
    }
    const double sum = c.weights.row(r).sum();
    if (std::fabs(sum) >= 1e-12) {
      out.push_back(row + ": sum = " + detail::format_number(sum) + " ≠ 0");
    }
  }
  if (c.kind == ContrastKind::Interaction) {
    if (!c.interaction) {
      out.push_back("interaction matrix without parent shape");
    } else {
      const auto& s = *c.interaction;
      if (q != s.lab_rows * s.dose_rows) out.push_back("interaction rows != q_lab * q_dose");
      if (m != s.lab_levels * s.dose_levels) out.push_back("interaction columns != m_lab * m_dose");
    }
  }
  return out;
}

// Interaction contrasts C_lab (x) C_dose over lab-major cells. Row r * q_dose + s
// is the outer product of lab row r and dose row s.
inline ContrastMatrix kronecker_interaction(const ContrastMatrix& c_lab, const ContrastMatrix& c_dose) {
  for (const auto* parent : {&c_lab, &c_dose}) {
    const auto violations = validate(*parent);
    if (!violations.empty()) {
      throw std::invalid_argument("invalid parent contrast matrix (" + std::string(to_string(parent->kind)) +
                                  "): " + violations.front());
    }
  }
  const Eigen::Index qa = c_lab.rows(), qb = c_dose.rows();
  const Eigen::Index ma = c_lab.cols(), mb = c_dose.cols();
  ContrastMatrix c;
  c.kind = ContrastKind::Interaction;
  c.weights.resize(qa * qb, ma * mb);
  c.interaction = InteractionShape{qa, qb, ma, mb};
  for (Eigen::Index r = 0; r < qa; ++r) {
    for (Eigen::Index s = 0; s < qb; ++s) {
      for (Eigen::Index i = 0; i < ma; ++i) {
        for (Eigen::Index t = 0; t < mb; ++t) {
          c.weights(r * qb + s, i * mb + t) = c_lab.weights(r, i) * c_dose.weights(s, t);
        }
      }
      const auto& lab_label = c_lab.row_labels[static_cast<std::size_t>(r)];
      const bool structured = static_cast<Eigen::Index>(c_dose.focus_groups.size()) == qb;
      if (structured) {
        const auto& focus = c_dose.focus_groups[static_cast<std::size_t>(s)];
        const auto& ref = c_dose.reference_groups[static_cast<std::size_t>(s)];
        c.row_labels.push_back("((" + lab_label + "):" + focus + ") - ((" + lab_label + "):" + ref + ")");
      } else {
        c.row_labels.push_back("((" + lab_label + "):" + c_dose.row_labels[static_cast<std::size_t>(s)] + ")");
      }
      c.focus_groups.push_back(static_cast<Eigen::Index>(c_lab.focus_groups.size()) == qa
                                   ? c_lab.focus_groups[static_cast<std::size_t>(r)]
                                   : lab_label);
      c.reference_groups.push_back(static_cast<Eigen::Index>(c_lab.reference_groups.size()) == qa
                                       ? c_lab.reference_groups[static_cast<std::size_t>(r)]
                                       : std::string{});
    }
  }
  for (Eigen::Index i = 0; i < ma; ++i) {
    for (Eigen::Index t = 0; t < mb; ++t) {
      c.column_labels.push_back(c_lab.column_labels[static_cast<std::size_t>(i)] + ":" +
                                c_dose.column_labels[static_cast<std::size_t>(t)]);
    }
  }
  return c;
}

}  // namespace trendsim
