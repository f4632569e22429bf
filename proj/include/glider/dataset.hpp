#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "glider/geometry.hpp"
#include "glider/hydro.hpp"

namespace glider {

inline constexpr const char* kToolVersion = "0.1.0";

// Base ellipsoid and cage lattice shared by every shape of a family. The
// default semi-axes give a 1.1 m long hull.
struct GeometrySettings {
  double semi_x = 0.55;
  double semi_y = 0.175;
  double semi_z = 0.11;
  int subdivisions = 4;
  int nx = 4;
  int ny = 3;
  int nz = 3;
  double margin = 0.05;

  void validate() const;
};

struct BaseShape {
  std::string name;
  CageParams params;
};

struct BaseShapeFamily {
  GeometrySettings geometry;
  TriMesh base;
  DeformationCage cage;
  std::vector<BaseShape> shapes;
  std::uint64_t seed = 0;

  std::size_t size() const { return shapes.size(); }
};

// Ellipsoid mesh and bound cage for the given settings.
std::pair<TriMesh, DeformationCage> make_base_geometry(const GeometrySettings& geometry);

// Names of the procedural archetypes in generation order.
const std::vector<std::string>& archetype_names();

// Shape i uses archetype i mod K (K archetypes) with its amplitude growing every
// K shapes, plus seeded uniform jitter of at most 2% of body length per offset.
// Shape i depends only on (seed, i), so a smaller family is a prefix of a larger one.
BaseShapeFamily make_base_family(std::uint64_t seed, int n, const GeometrySettings& geometry = {});

// Wraps caller-provided shapes; every shape must deform to a positive volume.
BaseShapeFamily make_family(const GeometrySettings& geometry, std::vector<BaseShape> shapes);

// Where a sample's parameters came from: a base shape, or t along the pair (a, b).
struct Provenance {
  int base_a = -1;
  int base_b = -1;
  double t = 0.0;

  static Provenance base(int index) { return {index, -1, 0.0}; }
  static Provenance morph(int a, int b, double t) { return {a, b, t}; }
  bool is_base() const { return base_b < 0; }
};

struct LabeledSample {
  std::uint64_t id = 0;     // shape * |aoas| + aoa index
  std::uint64_t shape = 0;  // position in the enumeration bases, then pair morphs
  CageParams params;
  AngleOfAttack aoa;
  HydroCoeffs coeffs;
  Provenance provenance;
};

struct DatasetBuild {
  std::vector<LabeledSample> samples;
  std::size_t skipped_shapes = 0;
  std::size_t shape_count = 0;  // shapes enumerated, including skipped
};

std::vector<AngleOfAttack> default_aoas();

// Labels bases and all pairwise morphs at t = k / (morphs_per_pair + 1) with the
// analytic oracle. Shapes whose deformation is degenerate are skipped and
// counted. Labeling runs on `workers` threads (0 = hardware concurrency); the
// output order is independent of the worker count.
DatasetBuild build_dataset(const BaseShapeFamily& family, int morphs_per_pair,
                           const std::vector<AngleOfAttack>& aoas, const FlowConditions& flow,
                           unsigned workers = 0);

// Shape-level split: every row of a shape lands on the same side.
struct SplitResult {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::vector<std::uint64_t> test_shapes;  // sorted
};
SplitResult split(const std::vector<LabeledSample>& samples, double test_fraction, std::uint64_t seed);

// Per-dimension standardization of cage parameters.
struct InputNormalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const;
};

// Zero-variance dimensions get unit scale.
InputNormalization fit_normalization(const std::vector<LabeledSample>& samples);

struct DatasetMeta {
  std::string tool_version = kToolVersion;
  GeometrySettings geometry;
  FlowConditions flow;
  std::vector<double> aoas_deg;
  int morphs_per_pair = 0;
  int family_size = 0;
  std::uint64_t family_seed = 0;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  std::vector<std::uint64_t> test_shapes;
  std::size_t sample_count = 0;
  std::size_t skipped_shapes = 0;
  InputNormalization normalization;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  DatasetMeta meta;
};

// Builds, splits and normalizes in one go.
Dataset make_dataset(const BaseShapeFamily& family, int morphs_per_pair, const std::vector<AngleOfAttack>& aoas,
                     const FlowConditions& flow, double test_fraction, std::uint64_t split_seed,
                     unsigned workers = 0);

// Rows whose shape is (not) listed in meta.test_shapes.
std::vector<LabeledSample> train_rows(const Dataset& data);
std::vector<LabeledSample> test_rows(const Dataset& data);

// JSON-lines samples: {id, shape, params, aoa_deg, cd, cl, provenance}.
void write_samples_jsonl(const std::vector<LabeledSample>& samples, const std::filesystem::path& path);
std::vector<LabeledSample> read_samples_jsonl(const std::filesystem::path& path);

void write_dataset_meta(const DatasetMeta& meta, const std::filesystem::path& path);
DatasetMeta read_dataset_meta(const std::filesystem::path& path);

// Family file: geometry settings, seed and the named parameter vectors.
void write_family(const BaseShapeFamily& family, const std::filesystem::path& path);
BaseShapeFamily read_family(const std::filesystem::path& path);

}  // namespace glider
