#pragma once

// End-to-end acceptance checks. Each returns the measured value next to its
// bound; `glider verify` and the acceptance test binary print the same table.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "glider/dynamics.hpp"
#include "glider/pipeline.hpp"

namespace glider {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;
  std::string bound;
  std::string provenance;  // where the bound comes from
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

// "PASS  1 closed-form glide vs simulation | measured ... | bound ... | tag | 0.4 s / 30 s"
std::string format_result(const CriterionResult& r);

// Largest relative deviation of the simulator's terminal speed and glide angle
// from the closed form over 50 seeded configs. `sim` allows fault injection.
CriterionResult criterion_closed_form_glide(const SimOptions& sim = {});
CriterionResult criterion_work_per_distance();
CriterionResult criterion_speed_ratio(const SimOptions& sim = {});
CriterionResult criterion_gradients();
CriterionResult criterion_planted_optimum();
CriterionResult criterion_cma_sanity();
CriterionResult criterion_geometry();

// Pipeline-level criteria read the outputs of a finished run.
CriterionResult criterion_surrogate(const std::filesystem::path& run_dir, const PipelineConfig& config);
CriterionResult criterion_sweep(const std::filesystem::path& run_dir, double pipeline_seconds);
// Byte comparison of every data output of two runs (manifests excluded).
CriterionResult criterion_determinism(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                                      double seconds);

// The planted-optimum fixture: low-efficiency base shapes plus one shape that
// dominates eta at 9 deg. The dominant shape is the last one.
BaseShapeFamily planted_family();

struct AcceptanceOptions {
  PipelineConfig config;              // used for the pipeline criteria 5, 9 and 10
  std::filesystem::path work_dir;     // pipeline runs go to work_dir/run_a and run_b
  std::vector<int> only;              // empty = all criteria
  std::ostream* log = nullptr;
};

// Runs the selected criteria and prints each line to `log` as it finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

}  // namespace glider
