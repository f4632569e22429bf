// glider: shape family -> dataset -> surrogate -> design search -> glide simulation.
//
// Exit codes: 0 success, 1 invalid config/flags/inputs, 2 runtime failure,
// 3 acceptance failure (verify).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glider/acceptance.hpp"
#include "glider/errors.hpp"
#include "glider/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAcceptance = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--seed", common.seed, "global seed; stage seeds derive from it unless set in the config");
  cmd->add_option("--out", common.out, "output directory (overrides output_dir)");
  cmd->add_flag("--force", common.force, "overwrite existing outputs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Underwater glider hull design pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", glider::kToolVersion);

  Common common;
  std::optional<int> epochs;
  std::vector<double> sweep_aoas;
  std::optional<int> restarts;
  std::optional<long> budget;
  std::optional<double> dt;
  std::optional<double> export_aoa;
  std::optional<int> export_base;
  std::string export_format = "obj";
  std::vector<int> only;

  auto* gen = app.add_subcommand("gen", "generate the base-shape family and its meshes");
  auto* dataset = app.add_subcommand("dataset", "label base shapes and morphs with the analytic oracle");
  auto* train = app.add_subcommand("train", "train the surrogate network");
  train->add_option("--epochs", epochs, "number of training epochs");
  auto* optimize = app.add_subcommand("optimize", "search the base-shape hull for the best eta per angle");
  optimize->add_option("--aoa", sweep_aoas, "angles of attack to sweep (deg)")->delimiter(',');
  optimize->add_option("--restarts", restarts, "CMA-ES restarts per angle");
  optimize->add_option("--budget", budget, "objective evaluations per restart");
  auto* simulate = app.add_subcommand("simulate", "time-step a glide and summarize a dive cycle");
  simulate->add_option("--dt", dt, "integration step (s)");
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria and print a pass/fail table");
  verify->add_option("--only", only, "criterion ids to run")->delimiter(',');
  auto* exporter = app.add_subcommand("export", "write a design or base shape as OBJ/STL");
  auto* export_what = exporter->add_option_group("shape");
  export_what->add_option("--aoa", export_aoa, "optimized design at this angle (deg)");
  export_what->add_option("--base", export_base, "base shape index");
  export_what->require_option(1);
  exporter->add_option("--format", export_format, "obj, stl or both")->check(CLI::IsMember({"obj", "stl", "both"}));

  for (auto* cmd : {gen, dataset, train, optimize, simulate, verify, exporter}) add_common(cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    glider::PipelineConfig config =
        common.config_path.empty() ? glider::PipelineConfig{} : glider::load_config(common.config_path);
    if (common.seed) config.seed = *common.seed;
    if (!common.out.empty()) config.output_dir = common.out;
    if (epochs) config.training.epochs = *epochs;
    if (!sweep_aoas.empty()) config.optimization.aoas_deg = sweep_aoas;
    if (restarts) config.optimization.restarts = *restarts;
    if (budget) config.optimization.budget = *budget;
    if (dt) config.dynamics.dt = *dt;
    config.validate();

    glider::StageOptions options;
    options.out = config.output_dir;
    options.force = common.force;
    options.log = &std::cout;

    if (*gen) glider::cmd_gen(config, options);
    if (*dataset) glider::cmd_dataset(config, options);
    if (*train) glider::cmd_train(config, options);
    if (*optimize) glider::cmd_optimize(config, options);
    if (*simulate) glider::cmd_simulate(config, options);
    if (*exporter) {
      glider::ExportRequest request;
      request.design_aoa_deg = export_aoa;
      request.base_index = export_base;
      request.format = export_format;
      glider::cmd_export(config, options, request);
    }
    if (*verify) {
      glider::AcceptanceOptions acceptance;
      acceptance.config = config;
      acceptance.work_dir = std::filesystem::path(config.output_dir) / "verify";
      acceptance.only = only;
      acceptance.log = &std::cout;
      const auto results = glider::run_acceptance(acceptance);
      std::size_t failed = 0;
      std::cout << "\nacceptance summary\n";
      for (const auto& r : results) {
        std::cout << glider::format_result(r) << '\n';
        if (!r.passed) ++failed;
      }
      std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
      return failed == 0 ? 0 : kExitAcceptance;
    }
    return 0;
  } catch (const glider::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const glider::InvalidArgument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const glider::ParseError& err) {
    std::cerr << "parse error: " << err.what() << '\n';
    return kExitValidation;
  } catch (const glider::DivergenceError& err) {
    std::cerr << "training diverged in epoch " << err.epoch << ": " << err.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
}
