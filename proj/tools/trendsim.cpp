// trendsim: interaction-contrast analysis of dose-response ring trials.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trendsim/trendsim.hpp"

namespace {

constexpr const char* kFooter =
    "Exit codes: 0 success, 1 usage error, 2 data or input error (missing file, bad CSV,\n"
    "empty cell, infeasible design), 3 numerical failure (degenerate variance, mvt failure).\n"
    "Seed: --seed, else the TRENDSIM_SEED environment variable, else a fixed default.";

void add_qmc_flags(CLI::App* cmd, trendsim::QmcConfig& qmc, std::optional<std::uint64_t>& seed) {
  cmd->add_option("--mvt-samples", qmc.sample_budget, "Max integrand evaluations per randomization")
      ->capture_default_str();
  cmd->add_option("--mvt-randomizations", qmc.randomizations, "Independent lattice shifts")->capture_default_str();
  cmd->add_option("--mvt-error", qmc.target_abs_error, "Target absolute error of each probability")
      ->capture_default_str();
  cmd->add_option("--threads", qmc.threads, "Worker threads inside the mvt engine (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--seed", seed, "QMC seed (default: TRENDSIM_SEED or 20210611)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace trendsim;
  CLI::App app{"Williams-by-grand-mean interaction contrasts for dose-response ring trials"};
  app.footer(kFooter);
  app.require_subcommand(1);

  // analyze
  AnalysisConfig acfg;
  std::optional<std::uint64_t> aseed;
  std::string dose_kind = "williams", alt = "two-sided", transform = "none", vcov = "hc3", policy = "iut-uit";
  bool quiet = false;
  auto* analyze = app.add_subcommand("analyze", "Run the max-t interaction analysis on a CSV file");
  analyze->add_option("--input,-i", acfg.input, "CSV in long format")->required();
  analyze->add_option("--lab-col", acfg.schema.lab_column, "Lab column")->capture_default_str();
  analyze->add_option("--dose-col", acfg.schema.dose_column, "Dose/concentration column")->capture_default_str();
  analyze->add_option("--response-col", acfg.schema.response_column, "Response column")->capture_default_str();
  analyze->add_option("--transform", transform, "Response transform")
      ->check(CLI::IsMember({"none", "log", "sqrt", "freeman-tukey"}))
      ->capture_default_str();
  analyze->add_option("--dose-contrast", dose_kind, "Dose contrast")
      ->check(CLI::IsMember({"williams", "highest"}))
      ->capture_default_str();
  analyze->add_option("--vcov", vcov, "Covariance estimator")
      ->check(CLI::IsMember({"classical", "hc0", "hc1", "hc3"}))
      ->capture_default_str();
  analyze->add_option("--alternative", alt, "two-sided, greater or less")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}))
      ->capture_default_str();
  analyze->add_option("--alpha", acfg.alpha, "Level; two-sided intervals have level 1 - 2 alpha")
      ->capture_default_str();
  analyze->add_option("--policy", policy, "Equivalence policy")
      ->check(CLI::IsMember({"iut-uit", "iut-iut"}))
      ->capture_default_str();
  analyze->add_option("--p-threshold", acfg.policy.p_threshold, "Equivalence needs p > threshold")
      ->capture_default_str();
  analyze->add_option("--out-json", acfg.out_json, "Write the JSON report here");
  analyze->add_option("--out-svg", acfg.out_svg, "Write the forest plot here");
  analyze->add_flag("--quiet,-q", quiet, "No text report on stdout");
  add_qmc_flags(analyze, acfg.qmc, aseed);

  // contrasts
  ContrastsConfig ccfg;
  std::size_t labs = 0, doses = 0;
  std::string c_dose_kind = "williams";
  auto* contrasts = app.add_subcommand("contrasts", "Print contrast matrices and their interaction product");
  contrasts->add_option("--labs,-l", labs, "Number of labs (grand-mean contrasts)");
  contrasts->add_option("--doses,-k", doses, "Number of doses above control (default values 2-fold up to 0.5)");
  contrasts->add_option("--dose-values", ccfg.dose_values, "Dose values, control first")->delimiter(',');
  contrasts->add_option("--lab-sizes", ccfg.lab_sizes, "Replicates per lab")->delimiter(',');
  contrasts->add_option("--dose-sizes", ccfg.dose_sizes, "Replicates per dose")->delimiter(',');
  contrasts->add_option("--dose-contrast", c_dose_kind, "Dose contrast")
      ->check(CLI::IsMember({"williams", "highest", "dunnett"}))
      ->capture_default_str();
  contrasts->add_flag("--json", ccfg.json, "Emit JSON instead of tables");

  // plot
  std::string report_path, svg_path;
  auto* plot = app.add_subcommand("plot", "Draw the forest plot of a JSON report");
  plot->add_option("--report,-r", report_path, "JSON report from analyze")->required();
  plot->add_option("--out-svg,-o", svg_path, "SVG output")->required();

  // simulate
  SimulateConfig scfg;
  std::optional<std::uint64_t> sseed;
  std::string s_alt = "two-sided", s_dose_kind = "williams", variance = "increasing", s_vcov = "hc3";
  auto* simulate_cmd = app.add_subcommand("simulate", "Operating characteristics by simulation");
  simulate_cmd->add_option("--labs", scfg.scenario.labs, "Labs")->capture_default_str();
  simulate_cmd->add_option("--n", scfg.scenario.n, "Replicates per cell")->capture_default_str();
  simulate_cmd->add_option("--replicates", scfg.scenario.replicates, "Simulated datasets per row")
      ->capture_default_str();
  simulate_cmd->add_option("--effect", scfg.magnitudes, "Interaction sizes in sigma units, one row each")
      ->delimiter(',')
      ->default_str("0");
  simulate_cmd->add_option("--target-lab", scfg.scenario.interaction_lab, "0-based lab receiving the interaction")
      ->capture_default_str();
  simulate_cmd->add_option("--variance", variance, "homoscedastic or increasing")
      ->check(CLI::IsMember({"homoscedastic", "increasing"}))
      ->capture_default_str();
  simulate_cmd->add_option("--variance-ratio", scfg.scenario.variance_ratio, "Top-dose / control variance")
      ->capture_default_str();
  simulate_cmd->add_option("--vcov", s_vcov, "Covariance estimator")
      ->check(CLI::IsMember({"classical", "hc0", "hc1", "hc3"}))
      ->capture_default_str();
  simulate_cmd->add_option("--dose-contrast", s_dose_kind, "Dose contrast")
      ->check(CLI::IsMember({"williams", "highest"}))
      ->capture_default_str();
  simulate_cmd->add_option("--alternative", s_alt, "two-sided, greater or less")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}))
      ->capture_default_str();
  simulate_cmd->add_option("--alpha", scfg.settings.alpha, "Familywise level")->capture_default_str();
  simulate_cmd->add_option("--p-threshold", scfg.settings.p_threshold, "Equivalence threshold")
      ->capture_default_str();
  simulate_cmd->add_option("--workers", scfg.settings.workers, "Threads across replicates (0 = all cores)")
      ->capture_default_str();
  simulate_cmd->add_flag("--json", scfg.json, "Emit JSON");
  add_qmc_flags(simulate_cmd, scfg.settings.qmc, sseed);

  // generate
  auto gen = ames_like_scenario();
  std::size_t gen_replicate = 0;
  std::optional<std::uint64_t> gseed;
  std::string gen_out = "-";
  auto* generate = app.add_subcommand("generate", "Write a synthetic ring-trial dataset (the bundled data)");
  generate->add_option("--out,-o", gen_out, "CSV output, - for stdout")->capture_default_str();
  generate->add_option("--seed", gseed, "Generator seed")->default_str("4");
  generate->add_option("--replicate", gen_replicate, "Replicate index")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0; every other parse failure is a usage error
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*analyze) {
    if (quiet) acfg.text = false;
    acfg.dose_contrast = dose_kind == "highest" ? ContrastKind::HighestDose : ContrastKind::Williams;
    acfg.alternative = parse_alternative(alt);
    acfg.transform = parse_transform(transform);
    acfg.estimator = parse_covariance_kind(vcov);
    acfg.policy.mode = parse_equivalence_mode(policy);
    return run_guarded(
        [&] {
          acfg.qmc.seed = resolve_seed(aseed, QmcConfig{}.seed);
          return cmd_analyze(acfg, std::cout, std::cerr);
        },
        std::cerr);
  }
  if (*contrasts) {
    if (labs) ccfg.labs = labs;
    if (doses) ccfg.doses = doses;
    ccfg.dose_contrast = c_dose_kind == "highest"   ? ContrastKind::HighestDose
                         : c_dose_kind == "dunnett" ? ContrastKind::Dunnett
                                                    : ContrastKind::Williams;
    return cmd_contrasts(ccfg, std::cout, std::cerr);
  }
  if (*plot) return cmd_plot(report_path, svg_path, std::cerr);
  if (*simulate_cmd) {
    scfg.settings.alternative = parse_alternative(s_alt);
    scfg.settings.estimator = parse_covariance_kind(s_vcov);
    scfg.settings.dose_contrast = s_dose_kind == "highest" ? ContrastKind::HighestDose : ContrastKind::Williams;
    scfg.scenario.variance = parse_variance_pattern(variance);
    return run_guarded(
        [&] {
          scfg.settings.qmc.seed = resolve_seed(sseed, QmcConfig{}.seed);
          scfg.scenario.seed = scfg.settings.qmc.seed;
          if (scfg.scenario.labs != scfg.scenario.lab_shifts.size()) {
            scfg.scenario.lab_shifts.assign(scfg.scenario.labs, 0.0);
          }
          return cmd_simulate(scfg, std::cout, std::cerr);
        },
        std::cerr);
  }
  if (*generate) {
    if (gseed) gen.seed = *gseed;
    return cmd_generate(gen, gen_replicate, gen_out, std::cout, std::cerr);
  }
  return 0;
}
