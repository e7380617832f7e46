#pragma once

// Subcommand implementations behind tools/trendsim. Each cmd_* writes to the
// given streams/files and returns an exit code: 0 success, 2 data or input
// error, 3 numerical failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trendsim/contrasts.hpp"
#include "trendsim/dataset.hpp"
#include "trendsim/errors.hpp"
#include "trendsim/forest_plot.hpp"
#include "trendsim/inference.hpp"
#include "trendsim/model.hpp"
#include "trendsim/mvt.hpp"
#include "trendsim/report.hpp"
#include "trendsim/simulation.hpp"

namespace trendsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

template <class F>
int run_guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitData;
  }
}

// Seed from TRENDSIM_SEED when no explicit seed is given.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed, std::uint64_t fallback) {
  if (explicit_seed) return *explicit_seed;
  if (const char* env = std::getenv("TRENDSIM_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used, 10);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("TRENDSIM_SEED is not an unsigned integer: '") + env + "'");
  }
  return fallback;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write output file '" + path + "'");
  out << content;
  if (!out) throw DataError("failed writing output file '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct AnalysisConfig {
  std::string input;
  CsvSchema schema;
  Transform transform = Transform::None;
  ContrastKind dose_contrast = ContrastKind::Williams;
  CovarianceKind estimator = CovarianceKind::HC3;
  Alternative alternative = Alternative::TwoSided;
  double alpha = 0.05;
  EquivalencePolicy policy;  // its alpha is overwritten by `alpha`
  QmcConfig qmc;
  bool text = true;
  std::string out_json;
  std::string out_svg;

  void validate() const {
    if (input.empty()) throw std::invalid_argument("no input file given");
    if (!text && out_json.empty() && out_svg.empty()) throw std::invalid_argument("no output requested");
    if (dose_contrast != ContrastKind::Williams && dose_contrast != ContrastKind::HighestDose) {
      throw std::invalid_argument("dose contrast must be williams or highest");
    }
    if (!(alpha > 0.0 && alpha < 0.25)) throw std::invalid_argument("alpha must lie in (0, 0.25)");
    auto p = policy;
    p.alpha = alpha;
    p.validate();
    qmc.validate();
  }
};

// Two-sided analyses report (1 - 2 alpha) simultaneous intervals, the
// equivalence reading; one-sided analyses use 1 - alpha.
inline double interval_alpha(const AnalysisConfig& cfg) {
  return cfg.alternative == Alternative::TwoSided ? 2.0 * cfg.alpha : cfg.alpha;
}

inline AnalysisReport run_analysis(const AnalysisConfig& cfg) {
  cfg.validate();
  const auto data = apply_transform(load_csv(cfg.input, cfg.schema), cfg.transform);
  const auto model = fit_cell_means(data);
  const auto cov = covariance(model, cfg.estimator);
  const auto c = interaction_contrasts(model.lab_factor, model.dose_factor, cfg.dose_contrast);

  AnalysisReport r;
  r.design = std::to_string(data.lab_count()) + " labs x " + std::to_string(data.dose_count()) + " doses, N = " +
             std::to_string(data.size());
  r.dose_contrast = cfg.dose_contrast;
  r.transform = cfg.transform;
  r.alpha = cfg.alpha;
  r.qmc = cfg.qmc;
  r.result = max_t_test(model, c, cov, cfg.alternative, interval_alpha(cfg), cfg.qmc);
  auto policy = cfg.policy;
  policy.alpha = cfg.alpha;
  r.equivalence = equivalence_report(r.result, policy);
  r.f_test = interaction_f_test(data);
  return r;
}

inline std::string plot_title(const AnalysisReport& r) {
  return detail::format_number(100.0 * ci_level(r.result)) + "% simultaneous confidence intervals, " +
         std::string(to_string(r.dose_contrast)) + "-by-GrandMean interaction contrasts";
}

inline std::vector<PlotRow> plot_rows(const MaxTResult& res) {
  std::vector<PlotRow> rows;
  for (const auto& c : res.contrasts) rows.push_back({c.label, c.estimate, c.ci_lower, c.ci_upper});
  return rows;
}

inline int cmd_analyze(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(
      [&] {
        const auto r = run_analysis(cfg);
        // render everything before touching the filesystem
        const std::string json = to_json(r).dump(2) + "\n";
        std::string svg;
        if (!cfg.out_svg.empty()) svg = forest_plot_svg(plot_rows(r.result), PlotOptions{plot_title(r)});
        if (!cfg.out_json.empty()) write_file(cfg.out_json, json);
        if (!cfg.out_svg.empty()) write_file(cfg.out_svg, svg);
        if (cfg.text) out << render_text(r);
        return kExitOk;
      },
      err);
}

struct ContrastsConfig {
  std::optional<std::size_t> labs;             // l
  std::optional<std::size_t> doses;            // k non-control doses
  std::vector<double> dose_values;             // control first; default 2-fold series to 0.5
  std::vector<int> lab_sizes;                  // default balanced
  std::vector<int> dose_sizes;
  ContrastKind dose_contrast = ContrastKind::Williams;
  bool json = false;
};

inline int cmd_contrasts(const ContrastsConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(
      [&] {
        std::optional<std::size_t> k = cfg.doses;
        if (!cfg.dose_values.empty()) {
          if (k && *k + 1 != cfg.dose_values.size()) {
            throw std::invalid_argument("--doses does not match the number of dose values minus the control");
          }
          k = cfg.dose_values.size() - 1;
        }
        if (!cfg.labs && !k) throw std::invalid_argument("give --labs and/or --doses");
        std::optional<ContrastMatrix> lab, dose;
        if (cfg.labs) {
          if (*cfg.labs < 2) throw std::invalid_argument("need at least 2 labs");
          auto f = balanced_lab_factor(*cfg.labs);
          if (!cfg.lab_sizes.empty()) f = make_nominal_factor(f.levels, cfg.lab_sizes);
          lab = grand_mean_matrix(f);
        }
        if (k) {
          if (*k < 1 || *k > 30) throw std::invalid_argument("need 1 to 30 non-control doses");
          const auto values = cfg.dose_values.empty() ? twofold_concentrations(*k) : cfg.dose_values;
          auto f = cfg.dose_sizes.empty() ? balanced_dose_factor(values) : make_dose_factor(values, cfg.dose_sizes);
          switch (cfg.dose_contrast) {
            case ContrastKind::Williams: dose = williams_matrix(f); break;
            case ContrastKind::HighestDose: dose = highest_dose_matrix(f); break;
            case ContrastKind::Dunnett: dose = dunnett_matrix(f); break;
            default: throw std::invalid_argument("dose contrast must be williams, highest or dunnett");
          }
        }
        if (cfg.json) {
          Json j = Json::object();
          if (dose) j["dose"] = contrast_json(*dose);
          if (lab) j["lab"] = contrast_json(*lab);
          if (lab && dose) j["interaction"] = contrast_json(kronecker_interaction(*lab, *dose));
          out << j.dump(2) << "\n";
        } else {
          bool first = true;
          auto section = [&](const std::string& title, const ContrastMatrix& c) {
            if (!first) out << "\n";
            first = false;
            out << title << " (" << c.rows() << " x " << c.cols() << ")\n" << contrast_table(c);
          };
          if (dose) section(std::string(to_string(dose->kind)) + " contrasts, dose", *dose);
          if (lab) section("GrandMean contrasts, lab", *lab);
          if (lab && dose) {
            const auto ia = kronecker_interaction(*lab, *dose);
            if (!first) out << "\n";
            first = false;
            out << "Interaction contrasts (" << ia.rows() << " x " << ia.cols() << ")\n";
            for (std::size_t i = 0; i < ia.row_labels.size(); ++i) {
              out << detail::pad_left(std::to_string(i + 1), 3) << "  " << ia.row_labels[i] << "\n";
            }
          }
        }
        return kExitOk;
      },
      err);
}

inline int cmd_plot(const std::string& report_path, const std::string& svg_path, std::ostream& err) {
  return run_guarded(
      [&] {
        Json report;
        try {
          report = Json::parse(read_file(report_path));
        } catch (const nlohmann::json::parse_error& e) {
          throw DataError("malformed report '" + report_path + "': " + e.what());
        }
        PlotOptions opt;
        if (report.contains("ci_level") && report["ci_level"].is_number()) {
          opt.title = detail::format_number(100.0 * report["ci_level"].get<double>()) +
                      "% simultaneous confidence intervals";
          if (report.contains("contrast_kind") && report["contrast_kind"].is_string()) {
            opt.title += ", " + report["contrast_kind"].get<std::string>() + " interaction contrasts";
          }
        }
        const auto svg = forest_plot_svg(plot_rows_from_report(report), opt);
        write_file(svg_path, svg);
        return kExitOk;
      },
      err);
}

struct SimulateConfig {
  SimulationScenario scenario = ames_like_scenario();
  SimulationSettings settings;
  std::vector<double> magnitudes{0.0};  // interaction sizes in sigma units, one table row each
  bool json = false;
};

inline int cmd_simulate(const SimulateConfig& cfg, std::ostream& out, std::ostream& err) {
  return run_guarded(
      [&] {
        if (cfg.magnitudes.empty()) throw std::invalid_argument("no interaction magnitudes given");
        std::vector<SimulationSummary> rows;
        for (double m : cfg.magnitudes) {
          auto s = cfg.scenario;
          s.interaction_sigma = m;
          rows.push_back(simulate(s, cfg.settings));
        }
        if (cfg.json) {
          Json arr = Json::array();
          auto rate = [](const Rate& r) { return Json{{"rate", r.rate}, {"se", r.se}, {"count", r.count}}; };
          for (const auto& r : rows) {
            arr.push_back(Json{{"interaction_sigma", r.interaction_sigma},
                               {"replicates", r.replicates},
                               {"familywise_rejection", rate(r.any_rejection)},
                               {"target_lab_rejection", rate(r.target_rejection)},
                               {"global_equivalence", rate(r.global_equivalence)},
                               {"f_test_rejection", rate(r.f_rejection)},
                               {"undecided", r.undecided}});
          }
          out << Json{{"seed", cfg.scenario.seed},
                      {"estimator", std::string(to_string(cfg.settings.estimator))},
                      {"alternative", std::string(to_string(cfg.settings.alternative))},
                      {"alpha", cfg.settings.alpha},
                      {"p_threshold", cfg.settings.p_threshold},
                      {"rows", std::move(arr)}}
                     .dump(2)
              << "\n";
          return kExitOk;
        }
        auto cell = [](const Rate& r) {
          return detail::pad_left(detail::format_fixed(r.rate, 4) + " (" + detail::format_fixed(r.se, 4) + ")", 17);
        };
        out << "estimator " << to_string(cfg.settings.estimator) << ", " << to_string(cfg.settings.alternative)
            << ", alpha " << detail::format_number(cfg.settings.alpha) << ", equivalence p > "
            << detail::format_number(cfg.settings.p_threshold) << ", seed " << cfg.scenario.seed << "\n";
        out << detail::pad_left("effect", 8) << detail::pad_left("reps", 7) << detail::pad_left("any rejection", 17)
            << detail::pad_left("target lab", 17) << detail::pad_left("global equiv", 17)
            << detail::pad_left("F-test", 17) << "\n";
        for (const auto& r : rows) {
          out << detail::pad_left(detail::format_number(r.interaction_sigma), 8)
              << detail::pad_left(std::to_string(r.replicates), 7) << cell(r.any_rejection) << cell(r.target_rejection)
              << cell(r.global_equivalence) << cell(r.f_rejection) << "\n";
        }
        return kExitOk;
      },
      err);
}

// Writes replicate `replicate` of the scenario as CSV (lab, conc, response),
// responses rounded to 4 decimals.
inline int cmd_generate(const SimulationScenario& s, std::size_t replicate, const std::string& path, std::ostream& out,
                        std::ostream& err) {
  return run_guarded(
      [&] {
        auto d = simulate_dataset(s, replicate);
        for (auto& o : d.observations) o.response = std::round(o.response * 1e4) / 1e4;
        if (path.empty() || path == "-") {
          write_csv(out, d);
        } else {
          std::ostringstream os;
          write_csv(os, d);
          write_file(path, os.str());
        }
        return kExitOk;
      },
      err);
}

}  // namespace trendsim
