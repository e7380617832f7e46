#pragma once

// JSON and plain-text renderings of contrast matrices and analysis results.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendsim/contrasts.hpp"
#include "trendsim/dataset.hpp"
#include "trendsim/detail/format.hpp"
#include "trendsim/errors.hpp"
#include "trendsim/inference.hpp"
#include "trendsim/model.hpp"
#include "trendsim/mvt.hpp"

namespace trendsim {

using Json = nlohmann::ordered_json;

inline Json contrast_json(const ContrastMatrix& c) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < c.cols(); ++j) row.push_back(c.weights(r, j));
    rows.push_back(std::move(row));
  }
  return Json{{"kind", std::string(to_string(c.kind))},
              {"row_labels", c.row_labels},
              {"column_labels", c.column_labels},
              {"rows", std::move(rows)}};
}

inline ContrastMatrix contrast_from_json(const Json& j) {
  try {
    ContrastMatrix c;
    c.kind = parse_contrast_kind(j.at("kind").get<std::string>());
    c.row_labels = j.at("row_labels").get<std::vector<std::string>>();
    c.column_labels = j.at("column_labels").get<std::vector<std::string>>();
    const auto& rows = j.at("rows");
    const auto q = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(c.column_labels.size());
    c.weights.resize(q, m);
    for (Eigen::Index r = 0; r < q; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != m) throw DataError("contrast row length differs from column count");
      for (Eigen::Index k = 0; k < m; ++k) c.weights(r, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed contrast JSON: ") + e.what());
  }
}

// Aligned table with rational entries, one line per contrast row.
inline std::string contrast_table(const ContrastMatrix& c) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{""};
  head.insert(head.end(), c.column_labels.begin(), c.column_labels.end());
  cells.push_back(std::move(head));
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    std::vector<std::string> line{c.row_labels[static_cast<std::size_t>(r)]};
    for (Eigen::Index j = 0; j < c.cols(); ++j) line.push_back(detail::format_rational(c.weights(r, j)));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t j = 0; j < line.size(); ++j) width[j] = std::max(width[j], line[j].size());
  }
  std::string out;
  for (const auto& line : cells) {
    std::string text = detail::pad_right(line[0], width[0]);
    for (std::size_t j = 1; j < line.size(); ++j) text += "  " + detail::pad_left(line[j], width[j]);
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out += text + "\n";
  }
  return out;
}

struct AnalysisReport {
  std::string design;
  ContrastKind dose_contrast = ContrastKind::Williams;
  Transform transform = Transform::None;
  double alpha = 0.05;  // policy level; intervals have level 1 - 2 alpha
  MaxTResult result;
  EquivalenceReport equivalence;
  std::optional<FTestResult> f_test;
  QmcConfig qmc;
};

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const AnalysisReport& r) {
  Json contrasts = Json::array();
  for (std::size_t i = 0; i < r.result.contrasts.size(); ++i) {
    const auto& c = r.result.contrasts[i];
    const auto& v = r.equivalence.contrasts.at(i);
    contrasts.push_back(Json{{"label", c.label},
                             {"lab", v.lab},
                             {"estimate", c.estimate},
                             {"se", c.se},
                             {"t", c.t},
                             {"p_raw", c.p_raw},
                             {"p_adj", c.p_adjusted},
                             {"ci", Json::array({number_or_null(c.ci_lower), number_or_null(c.ci_upper)})},
                             {"equivalent", v.equivalent},
                             {"borderline", c.borderline}});
  }
  Json labs = Json::array();
  for (const auto& l : r.equivalence.labs) {
    labs.push_back(Json{{"lab", l.lab}, {"all_equivalent", l.all_equivalent}, {"min_p", l.min_p},
                        {"contrasts", l.contrasts}});
  }
  Json out{{"design", r.design},
           {"contrast_kind", std::string(to_string(r.dose_contrast)) + "-by-GrandMean"},
           {"transform", std::string(to_string(r.transform))},
           {"estimator", std::string(to_string(r.result.estimator))},
           {"alternative", std::string(to_string(r.result.alternative))},
           {"alpha", r.alpha},
           {"ci_level", ci_level(r.result)},
           {"df", r.result.df},
           {"critical_value", r.result.critical_value},
           {"policy", std::string(to_string(r.equivalence.policy.mode))},
           {"p_threshold", r.equivalence.policy.p_threshold},
           {"contrasts", std::move(contrasts)},
           {"per_lab", std::move(labs)},
           {"global_verdict", std::string(to_string(r.equivalence.global))},
           {"equivalent_labs", r.equivalence.equivalent_labs}};
  if (r.f_test) {
    out["f_test"] = Json{{"F", r.f_test->F}, {"df1", r.f_test->df1}, {"df2", r.f_test->df2}, {"p", r.f_test->p}};
  } else {
    out["f_test"] = nullptr;
  }
  out["mvt"] = Json{{"seed", r.qmc.seed},
                    {"samples", r.qmc.sample_budget},
                    {"randomizations", r.qmc.randomizations},
                    {"error", r.result.mvt_error},
                    {"converged", r.result.mvt_converged}};
  return out;
}

// p-values print with 4 decimals; above 0.999 as "0.999".
inline std::string format_p(double p) {
  if (p > 0.999) return "0.999";
  if (p < 0.0001) return "<0.0001";
  return detail::format_fixed(p, 4);
}

inline std::string render_text(const AnalysisReport& r) {
  std::ostringstream os;
  const auto& res = r.result;
  os << "design: " << r.design << "\n";
  os << "contrasts: " << to_string(r.dose_contrast) << "-by-GrandMean, " << res.contrasts.size() << " rows\n";
  os << "estimator: " << to_string(res.estimator) << ", df = " << res.df << ", alternative: "
     << to_string(res.alternative) << "\n";
  os << "critical value: " << detail::format_fixed(res.critical_value, 4) << " ("
     << detail::format_number(100.0 * ci_level(res)) << "% simultaneous intervals)\n\n";

  std::size_t lw = 5;
  for (const auto& c : res.contrasts) lw = std::max(lw, c.label.size());
  auto ci_bound = [](double v) { return std::isfinite(v) ? detail::format_fixed(v, 4) : (v > 0 ? "Inf" : "-Inf"); };
  os << detail::pad_left("#", 3) << "  " << detail::pad_right("label", lw) << detail::pad_left("estimate", 11)
     << detail::pad_left("se", 10) << detail::pad_left("t", 9) << detail::pad_left("p_raw", 9)
     << detail::pad_left("p_adj", 9) << detail::pad_left("lower", 11) << detail::pad_left("upper", 11) << "  verdict\n";
  for (std::size_t i = 0; i < res.contrasts.size(); ++i) {
    const auto& c = res.contrasts[i];
    const auto& v = r.equivalence.contrasts.at(i);
    os << detail::pad_left(std::to_string(i + 1), 3) << "  " << detail::pad_right(c.label, lw)
       << detail::pad_left(detail::format_fixed(c.estimate, 4), 11) << detail::pad_left(detail::format_fixed(c.se, 4), 10)
       << detail::pad_left(detail::format_fixed(c.t, 3), 9) << detail::pad_left(format_p(c.p_raw), 9)
       << detail::pad_left(format_p(c.p_adjusted), 9) << detail::pad_left(ci_bound(c.ci_lower), 11)
       << detail::pad_left(ci_bound(c.ci_upper), 11) << "  " << (v.equivalent ? "equivalent" : "not equivalent")
       << (c.borderline ? " (borderline)" : "") << "\n";
  }
  os << "\nper lab (" << to_string(r.equivalence.policy.mode) << ", p > "
     << detail::format_number(r.equivalence.policy.p_threshold) << "):\n";
  for (const auto& l : r.equivalence.labs) {
    os << "  lab " << l.lab << ": " << (l.all_equivalent ? "equivalent" : "not equivalent")
       << ", min p = " << format_p(l.min_p) << "\n";
  }
  os << "global: " << to_string(r.equivalence.global);
  if (r.equivalence.global == GlobalVerdict::PartialEquivalence) {
    os << " (labs " << detail::join(r.equivalence.equivalent_labs, ",") << ")";
  }
  os << "\n";
  if (r.f_test) {
    os << "interaction F-test: F = " << detail::format_fixed(r.f_test->F, 4) << " on " << r.f_test->df1 << " and "
       << r.f_test->df2 << " df, p = " << format_p(r.f_test->p) << "\n";
  }
  char err_buf[32];
  std::snprintf(err_buf, sizeof err_buf, "%.2g", res.mvt_error);
  os << "mvt: seed " << r.qmc.seed << ", error " << err_buf
     << (res.mvt_converged ? "" : " (budget exhausted)") << "\n";
  return os.str();
}

}  // namespace trendsim
