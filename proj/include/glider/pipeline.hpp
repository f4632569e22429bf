#pragma once

// Config-driven pipeline stages shared by the CLI and the acceptance suite.
// Every stage reads its inputs from, and writes its outputs to, one output
// directory, and finishes by writing manifest_<stage>.json.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glider/dataset.hpp"
#include "glider/dynamics.hpp"
#include "glider/json_io.hpp"
#include "glider/surrogate.hpp"

namespace glider {

// Bad config, flag or missing stage input; maps to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FamilyConfig {
  int size = 20;
  std::optional<std::uint64_t> seed;  // defaults to the global seed
  bool write_meshes = true;
};

struct DatasetConfig {
  int morphs_per_pair = 10;
  std::vector<double> aoas_deg = {-30.0, -15.0, 0.0, 15.0, 30.0};
  double test_fraction = 0.2;
  std::optional<std::uint64_t> split_seed;  // defaults to global seed + 1
  unsigned workers = 0;
};

struct OptimizationConfig {
  int restarts = 5;
  long budget = 3000;
  double sigma0 = 1.0;
  std::vector<double> aoas_deg = {3.0, 6.0, 9.0, 15.0, 21.0, 30.0};
  std::optional<std::uint64_t> seed;  // defaults to global seed + 3
};

struct DynamicsConfig {
  // "direct" uses cd, cl and reference_area below; "design" takes the oracle
  // coefficients and hull reference area of the optimized design at design_aoa_deg.
  std::string source = "direct";
  double cd = 0.2;
  double cl = 0.5;
  double reference_area = 0.1;  // m^2
  double design_aoa_deg = 9.0;
  double hull_mass = 5.0;       // kg
  double ballast = 0.1;         // kg
  double ballast_capacity = 2.0;
  double pump_efficiency = 1.0;
  double depth = 100.0;          // m
  double chamber_pressure = kAtmosphere;
  double dt = 0.01;              // s
  double duration = 300.0;       // s
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  GeometrySettings geometry;
  FamilyConfig family;
  FlowConditions flow;
  DatasetConfig dataset;
  TrainConfig training;
  bool training_seed_set = false;  // training.seed was given explicitly
  OptimizationConfig optimization;
  DynamicsConfig dynamics;

  std::uint64_t family_seed() const { return family.seed.value_or(seed); }
  std::uint64_t split_seed() const { return dataset.split_seed.value_or(seed + 1); }
  std::uint64_t training_seed() const { return training_seed_set ? training.seed : seed + 2; }
  std::uint64_t optimization_seed() const { return optimization.seed.value_or(seed + 3); }

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const Json& j);
PipelineConfig load_config(const std::filesystem::path& path);
// Fully resolved config, seeds included; hashed into every manifest.
Json pipeline_config_to_json(const PipelineConfig& config);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Minimal SVG line plot.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = true;
};
struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool invert_y = false;  // depth plots grow downward
};
std::string render_svg(const PlotSpec& spec);

struct StageOptions {
  std::filesystem::path out;
  bool force = false;
  std::ostream* log = nullptr;  // progress lines; null silences them
};

struct StageResult {
  std::string stage;
  std::vector<std::filesystem::path> outputs;
  double seconds = 0.0;
};

// Standard file names inside the output directory.
namespace files {
inline constexpr const char* kFamily = "family.json";
inline constexpr const char* kBaseMeshDir = "base_meshes";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kDatasetMeta = "dataset_meta.json";
inline constexpr const char* kCheckpoint = "checkpoint.json";
inline constexpr const char* kTrainReport = "train_report.json";
inline constexpr const char* kTrainSummary = "train_summary.txt";
inline constexpr const char* kDesigns = "designs.json";
inline constexpr const char* kEtaTable = "eta_vs_aoa.csv";
inline constexpr const char* kEtaPlot = "eta_vs_aoa.svg";
inline constexpr const char* kDesignMeshDir = "designs";
inline constexpr const char* kTrajectory = "trajectory.csv";
inline constexpr const char* kCycle = "cycle.json";
inline constexpr const char* kSawtooth = "sawtooth.svg";
inline constexpr const char* kExportDir = "exports";
}  // namespace files

StageResult cmd_gen(const PipelineConfig& config, const StageOptions& options);
StageResult cmd_dataset(const PipelineConfig& config, const StageOptions& options);
StageResult cmd_train(const PipelineConfig& config, const StageOptions& options);
// Refuses angles outside the AoA range the surrogate was trained on.
StageResult cmd_optimize(const PipelineConfig& config, const StageOptions& options);
StageResult cmd_simulate(const PipelineConfig& config, const StageOptions& options);

struct ExportRequest {
  std::optional<double> design_aoa_deg;  // winner of an optimize run
  std::optional<int> base_index;         // or a base shape of the family
  std::string format = "obj";            // obj, stl or both
};
StageResult cmd_export(const PipelineConfig& config, const StageOptions& options, const ExportRequest& request);

// Design records as written by cmd_optimize.
struct DesignRecord {
  double aoa_deg = 0.0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd params;
  Eigen::VectorXd hull_weights;
  HydroCoeffs predicted;
  double predicted_eta = 0.0;
  HydroCoeffs oracle;
  double oracle_eta = 0.0;
  double eta_gap = 0.0;
  int restart = 0;
  long evaluations = 0;
  std::string mesh_obj;  // relative to the output directory
  std::string mesh_stl;
};
std::vector<DesignRecord> read_designs(const std::filesystem::path& path);

// File name fragment for an angle, e.g. 9 -> "p09", -15 -> "m15", 7.5 -> "p07.5".
std::string aoa_tag(double deg);

}  // namespace glider
