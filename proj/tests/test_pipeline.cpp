#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "glider/dataset.hpp"
#include "glider/errors.hpp"
#include "glider/json_io.hpp"
#include "glider/mesh_io.hpp"
#include "glider/pipeline.hpp"
#include "glider/surrogate.hpp"

#ifndef GLIDER_CLI
#error "GLIDER_CLI must name the glider executable"
#endif

using namespace glider;
namespace fs = std::filesystem;

namespace {

// Small enough to run every stage in a few seconds.
Json tiny_json() {
  return Json{{"seed", 5},
              {"geometry", {{"subdivisions", 2}}},
              {"family", {{"size", 4}}},
              {"dataset", {{"morphs_per_pair", 2}, {"test_fraction", 0.25}}},
              {"training", {{"epochs", 2}, {"warmup_epochs", 1}, {"batch_size", 16}, {"hidden", {12, 10, 8}}}},
              {"optimization", {{"restarts", 1}, {"budget", 60}, {"aoas_deg", {3.0, 9.0}}}},
              {"dynamics", {{"duration", 60.0}}}};
}

PipelineConfig tiny() { return pipeline_config_from_json(tiny_json()); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "glider_pipeline_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

StageOptions opts(const fs::path& out, bool force = false) {
  StageOptions o;
  o.out = out;
  o.force = force;
  return o;
}

void run_all(const PipelineConfig& c, const fs::path& out) {
  cmd_gen(c, opts(out));
  cmd_dataset(c, opts(out));
  cmd_train(c, opts(out));
  cmd_optimize(c, opts(out));
  cmd_simulate(c, opts(out));
}

Json load(const fs::path& p) { return read_json_file(p); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GLIDER_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Config, DefaultsValidate) {
  const PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.family.size, 20);
  EXPECT_EQ(c.training.epochs, 200);
  EXPECT_EQ(c.optimization.restarts, 5);
  EXPECT_EQ(c.optimization.budget, 3000);
}

TEST(Config, UnknownKeysAreRejected) {
  Json top = tiny_json();
  top["colour"] = "red";
  EXPECT_THROW(pipeline_config_from_json(top), ValidationError);
  Json nested = tiny_json();
  nested["training"]["momentum"] = 0.9;
  try {
    pipeline_config_from_json(nested);
    FAIL() << "unknown nested key accepted";
  } catch (const ValidationError& err) {
    EXPECT_NE(std::string(err.what()).find("training.momentum"), std::string::npos) << err.what();
  }
}

TEST(Config, WrongTypesAndRangesAreRejected) {
  Json bad_type = tiny_json();
  bad_type["training"]["epochs"] = "many";
  EXPECT_THROW(pipeline_config_from_json(bad_type), ValidationError);
  Json one_shape = tiny_json();
  one_shape["family"]["size"] = 1;
  EXPECT_THROW(pipeline_config_from_json(one_shape).validate(), ValidationError);
  Json steep = tiny_json();
  steep["optimization"]["aoas_deg"] = {50.0};
  EXPECT_THROW(pipeline_config_from_json(steep).validate(), ValidationError);
}

TEST(Config, JsonRoundTrip) {
  const PipelineConfig c = tiny();
  const Json once = pipeline_config_to_json(c);
  EXPECT_EQ(pipeline_config_to_json(pipeline_config_from_json(once)), once);
}

TEST(Config, StageSeedsDeriveFromGlobalSeed) {
  PipelineConfig c;
  c.seed = 100;
  EXPECT_EQ(c.family_seed(), 100u);
  EXPECT_EQ(c.split_seed(), 101u);
  EXPECT_EQ(c.training_seed(), 102u);
  EXPECT_EQ(c.optimization_seed(), 103u);
  c.family.seed = 7;
  EXPECT_EQ(c.family_seed(), 7u);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  const PipelineConfig shipped = load_config(fs::path(GLIDER_SOURCE_DIR) / "configs" / "default.json");
  EXPECT_EQ(pipeline_config_to_json(shipped), pipeline_config_to_json(PipelineConfig{}));
}

TEST(Fingerprint, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Stages, GenWritesTwentyShapesDeterministically) {
  const fs::path out = fresh_dir("gen");
  PipelineConfig c;
  cmd_gen(c, opts(out));
  EXPECT_EQ(read_family(out / files::kFamily).size(), 20u);
  std::size_t meshes = 0;
  for (const auto& e : fs::directory_iterator(out / files::kBaseMeshDir)) meshes += e.path().extension() == ".obj";
  EXPECT_EQ(meshes, 20u);
  EXPECT_TRUE(fs::exists(out / "manifest_gen.json"));
  const std::string first = sha256_file(out / files::kFamily);

  // No silent overwrite; --force reproduces the same bytes.
  EXPECT_THROW(cmd_gen(c, opts(out)), ValidationError);
  cmd_gen(c, opts(out, true));
  EXPECT_EQ(sha256_file(out / files::kFamily), first);
}

TEST(Stages, SingleShapeFamilyFailsBeforeWork) {
  const fs::path out = fresh_dir("n1");
  PipelineConfig c = tiny();
  c.family.size = 1;
  EXPECT_THROW(cmd_gen(c, opts(out)), ValidationError);
  EXPECT_FALSE(fs::exists(out / files::kFamily));
}

TEST(Stages, MissingInputNamesProducer) {
  const fs::path out = fresh_dir("missing");
  try {
    cmd_dataset(tiny(), opts(out));
    FAIL() << "dataset ran without a family";
  } catch (const ValidationError& err) {
    const std::string what = err.what();
    EXPECT_NE(what.find(files::kFamily), std::string::npos) << what;
    EXPECT_NE(what.find("gen"), std::string::npos) << what;
  }
}

TEST(Stages, CorruptFamilyReportsLine) {
  const fs::path out = fresh_dir("corrupt");
  const PipelineConfig c = tiny();
  cmd_gen(c, opts(out));
  write_file(out / files::kFamily, "{\n  \"seed\": 5,\n  \"shapes\": [1, 2,,]\n}\n");
  try {
    cmd_dataset(c, opts(out));
    FAIL() << "corrupt family accepted";
  } catch (const ParseError& err) {
    EXPECT_EQ(err.line, 3u) << err.what();
  }
}

TEST(Stages, ZeroAngleDatasetHasNoLift) {
  const fs::path out = fresh_dir("aoa0");
  PipelineConfig c = tiny();
  c.dataset.aoas_deg = {0.0};
  cmd_gen(c, opts(out));
  cmd_dataset(c, opts(out));
  const auto samples = read_samples_jsonl(out / files::kDataset);
  EXPECT_EQ(samples.size(), 4u + 6u * 2u);
  for (const auto& s : samples) EXPECT_EQ(s.coeffs.cl, 0.0);
}

TEST(Stages, FullPipelineOutputs) {
  const fs::path out = fresh_dir("full");
  const PipelineConfig c = tiny();
  run_all(c, out);

  const Json meta = load(out / files::kDatasetMeta);
  EXPECT_EQ(meta.at("sample_count").get<std::size_t>() + 5 * meta.at("skipped_shapes").get<std::size_t>(),
            (4u + 6u * 2u) * 5u);

  const Json report = load(out / files::kTrainReport);
  EXPECT_EQ(report.at("epochs").get<int>(), 2);
  EXPECT_EQ(report.at("epoch_train_mse").size(), 2u);
  EXPECT_NO_THROW(load_checkpoint(out / files::kCheckpoint));
  EXPECT_TRUE(fs::exists(out / files::kTrainSummary));

  const auto designs = read_designs(out / files::kDesigns);
  ASSERT_EQ(designs.size(), 2u);
  const BaseShapeFamily family = read_family(out / files::kFamily);
  for (const auto& d : designs) {
    ASSERT_TRUE(d.ok) << d.error;
    EXPECT_TRUE(std::isfinite(d.predicted_eta));
    EXPECT_TRUE(std::isfinite(d.oracle_eta));
    // Reimported winner mesh reproduces the recorded oracle eta.
    const TriMesh mesh = read_obj(out / d.mesh_obj);
    const HydroCoeffs again = oracle_coefficients(mesh_features(mesh), AngleOfAttack::degrees(d.aoa_deg), c.flow);
    EXPECT_NEAR(efficiency(again), d.oracle_eta, 1e-9 * std::abs(d.oracle_eta));
    EXPECT_TRUE(fs::exists(out / d.mesh_stl));
  }
  EXPECT_TRUE(fs::exists(out / files::kEtaTable));
  EXPECT_TRUE(fs::exists(out / files::kEtaPlot));

  const Json cycle = load(out / files::kCycle);
  EXPECT_NEAR(cycle.at("cycle").at("theta_deg").get<double>(), 21.8014, 1e-4);
  EXPECT_LE(cycle.at("cycle").at("work_per_distance_relative_difference").get<double>(), 1e-9);
  std::ifstream csv(out / files::kTrajectory);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,x,z,v_x,v_z,theta_deg");
  EXPECT_TRUE(fs::exists(out / files::kSawtooth));
  for (const char* stage : {"gen", "dataset", "train", "optimize", "simulate"}) {
    const Json m = load(out / (std::string("manifest_") + stage + ".json"));
    EXPECT_EQ(m.at("stage").get<std::string>(), stage);
    EXPECT_FALSE(m.at("outputs").empty());
  }

  ExportRequest base;
  base.base_index = 1;
  base.format = "both";
  const StageResult exported = cmd_export(c, opts(out), base);
  EXPECT_EQ(exported.outputs.size(), 2u);
  ExportRequest design;
  design.design_aoa_deg = 9.0;
  EXPECT_EQ(cmd_export(c, opts(out), design).outputs.size(), 1u);
}

TEST(Stages, RerunIsByteIdentical) {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  const PipelineConfig c = tiny();
  run_all(c, a);
  run_all(c, b);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (rel.filename().string().rfind("manifest_", 0) == 0) continue;
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(sha256_file(e.path()), sha256_file(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
}

TEST(Stages, OptimizeRefusesExtrapolation) {
  const fs::path out = fresh_dir("extrap");
  PipelineConfig c = tiny();
  c.dataset.aoas_deg = {-15.0, 0.0, 15.0};
  cmd_gen(c, opts(out));
  cmd_dataset(c, opts(out));
  cmd_train(c, opts(out));
  c.optimization.aoas_deg = {9.0, 21.0};
  try {
    cmd_optimize(c, opts(out));
    FAIL() << "extrapolating sweep accepted";
  } catch (const ValidationError& err) {
    EXPECT_NE(std::string(err.what()).find("21.00"), std::string::npos) << err.what();
  }
}

TEST(Stages, TrainRejectsDimensionMismatch) {
  const fs::path out = fresh_dir("dims");
  PipelineConfig c = tiny();
  cmd_gen(c, opts(out));
  cmd_dataset(c, opts(out));
  c.geometry.nx = 3;
  EXPECT_THROW(cmd_train(c, opts(out)), ValidationError);
}

TEST(Stages, ZeroBallastGivesFlatCycle) {
  const fs::path out = fresh_dir("still");
  PipelineConfig c = tiny();
  c.dynamics.ballast = 0.0;
  cmd_simulate(c, opts(out));
  const Json cycle = load(out / files::kCycle);
  EXPECT_EQ(cycle.at("cycle").at("distance").get<double>(), 0.0);
  EXPECT_EQ(cycle.at("simulated_terminal").at("speed").get<double>(), 0.0);
}

TEST(Svg, RendersSeries) {
  PlotSpec spec;
  spec.title = "eta";
  spec.series.push_back({"a", {1, 2, 3}, {0.5, 1.5, 1.0}, "#000000", true});
  const std::string svg = render_svg(spec);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path out = fresh_dir("cli");
  const fs::path cfg = out / "tiny.json";
  write_file(cfg, tiny_json().dump());
  const std::string base = "--config " + cfg.string() + " --out " + (out / "run").string();
  EXPECT_EQ(run_cli("gen " + base), 0);
  EXPECT_EQ(run_cli("gen " + base), 1);  // refuses to overwrite
  EXPECT_EQ(run_cli("gen --force " + base), 0);
  EXPECT_EQ(run_cli("train " + base), 1);  // dataset missing
  EXPECT_EQ(run_cli("dataset " + base), 0);
  EXPECT_EQ(run_cli("train --epochs 1 " + base), 0);
  EXPECT_EQ(load(out / "run" / files::kTrainReport).at("epochs").get<int>(), 1);
  EXPECT_EQ(run_cli("optimize --aoa 3,40 " + base), 1);
  EXPECT_EQ(run_cli("optimize --aoa 6 --restarts 1 --budget 40 " + base), 0);
  EXPECT_EQ(run_cli("simulate --dt 0.02 " + base), 0);
  EXPECT_EQ(run_cli("export --base 0 " + base), 0);
  EXPECT_EQ(run_cli("gen --bogus " + base), 1);
  EXPECT_EQ(run_cli(""), 1);

  Json bad = tiny_json();
  bad["family"]["size"] = 1;
  write_file(out / "bad.json", bad.dump());
  EXPECT_EQ(run_cli("gen --config " + (out / "bad.json").string() + " --out " + (out / "bad").string()), 1);
  EXPECT_FALSE(fs::exists(out / "bad" / files::kFamily));
}

TEST(Cli, VerifyReportsPassFail) {
  const fs::path out = fresh_dir("verify");
  const std::string cmd =
      std::string(GLIDER_CLI) + " verify --only 2,3,8 --out " + out.string() + " > " + (out / "log.txt").string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  std::ifstream is(out / "log.txt");
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string log = ss.str();
  for (const char* line : {"PASS   2 ", "PASS   3 ", "PASS   8 ", "3/3 criteria passed"}) {
    EXPECT_NE(log.find(line), std::string::npos) << line << "\n" << log;
  }
}
