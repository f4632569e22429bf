#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "glider/errors.hpp"
#include "glider/mesh_io.hpp"
#include "glider/optimizer.hpp"
#include "glider/pipeline.hpp"

namespace glider {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stage {
 public:
  Stage(std::string name, const PipelineConfig& config, const StageOptions& options)
      : config_(config), options_(options), started_(std::chrono::steady_clock::now()) {
    result_.stage = std::move(name);
    config_.validate();
    std::error_code ec;
    fs::create_directories(options_.out, ec);
    if (ec || !fs::is_directory(options_.out)) {
      throw std::runtime_error("cannot create output directory " + options_.out.string() + ": " + ec.message());
    }
  }

  fs::path path(const std::string& name) const { return options_.out / name; }

  fs::path input(const std::string& name, const std::string& producer) {
    const fs::path p = path(name);
    if (!fs::exists(p)) {
      throw ValidationError("missing input " + p.string() + "; run `glider " + producer + "` with the same --out first");
    }
    inputs_.push_back(p);
    return p;
  }

  // Refuses to clobber existing outputs unless --force was given.
  fs::path output(const std::string& name) {
    const fs::path p = path(name);
    if (fs::exists(p) && !options_.force) {
      throw ValidationError(p.string() + " already exists; pass --force to overwrite");
    }
    return p;
  }

  // Directory output whose previous contents are discarded under --force.
  fs::path output_dir(const std::string& name) {
    const fs::path p = output(name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }

  void produced(const fs::path& p) { result_.outputs.push_back(p); }

  void log(const std::string& line) const {
    if (options_.log != nullptr) *options_.log << "[" << result_.stage << "] " << line << '\n';
  }

  StageResult finish(const Json& extra = Json::object()) {
    result_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    auto fingerprints = [&](const std::vector<fs::path>& paths) {
      Json j = Json::object();
      for (const auto& p : paths) j[fs::relative(p, options_.out).generic_string()] = sha256_file(p);
      return j;
    };
    const std::time_t now = std::time(nullptr);
    std::ostringstream stamp;
    stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    const Json manifest{{"tool_version", kToolVersion},
                        {"stage", result_.stage},
                        {"config_sha256", sha256_hex(pipeline_config_to_json(config_).dump())},
                        {"config", pipeline_config_to_json(config_)},
                        {"inputs", fingerprints(inputs_)},
                        {"outputs", fingerprints(result_.outputs)},
                        {"wall_seconds", result_.seconds},
                        {"finished_utc", stamp.str()},
                        {"details", extra}};
    write_text_atomic(path("manifest_" + result_.stage + ".json"), manifest.dump(2) + "\n");
    log("done in " + format_seconds(result_.seconds));
    return result_;
  }

  static std::string format_seconds(double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << s << " s";
    return os.str();
  }

 private:
  PipelineConfig config_;
  StageOptions options_;
  std::chrono::steady_clock::time_point started_;
  StageResult result_;
  std::vector<fs::path> inputs_;
};

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_from(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string safe_name(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == ' ') c = '_';
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Dataset load_dataset(Stage& stage) {
  Dataset data;
  data.samples = read_samples_jsonl(stage.input(files::kDataset, "dataset"));
  data.meta = read_dataset_meta(stage.input(files::kDatasetMeta, "dataset"));
  return data;
}

const DesignRecord& find_design(const std::vector<DesignRecord>& designs, double aoa_deg) {
  for (const auto& d : designs) {
    if (std::abs(d.aoa_deg - aoa_deg) < 1e-9) {
      if (!d.ok) throw ValidationError("design at " + fixed(aoa_deg, 2) + " deg failed: " + d.error);
      return d;
    }
  }
  throw ValidationError("no optimized design at " + fixed(aoa_deg, 2) + " deg in " + files::kDesigns);
}

Json coeffs_json(const HydroCoeffs& c, double eta) {
  return Json{{"cd", number_or_null(c.cd)}, {"cl", number_or_null(c.cl)}, {"eta", number_or_null(eta)}};
}

}  // namespace

std::string aoa_tag(double deg) {
  std::ostringstream os;
  os << (deg < 0.0 ? 'm' : 'p');
  const double mag = std::abs(deg);
  const double whole = std::floor(mag);
  os << std::setw(2) << std::setfill('0') << static_cast<long>(whole);
  if (mag != whole) {
    std::ostringstream frac;
    frac << std::setprecision(6) << (mag - whole);
    os << frac.str().substr(1);  // drop the leading zero
  }
  return os.str();
}

StageResult cmd_gen(const PipelineConfig& config, const StageOptions& options) {
  Stage stage("gen", config, options);
  const fs::path family_path = stage.output(files::kFamily);
  const fs::path dir = config.family.write_meshes ? stage.output_dir(files::kBaseMeshDir) : fs::path();
  const BaseShapeFamily family = make_base_family(config.family_seed(), config.family.size, config.geometry);
  write_family(family, family_path);
  stage.produced(family_path);
  if (config.family.write_meshes) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      std::ostringstream name;
      name << "base_" << std::setw(2) << std::setfill('0') << i << '_' << safe_name(family.shapes[i].name) << ".obj";
      const fs::path p = dir / name.str();
      write_obj(deform(family.cage, family.shapes[i].params, family.base), p);
      stage.produced(p);
    }
  }
  stage.log("generated " + std::to_string(family.size()) + " base shapes (" +
            std::to_string(family.cage.param_count()) + " cage parameters each)");
  return stage.finish({{"shape_count", family.size()}});
}

StageResult cmd_dataset(const PipelineConfig& config, const StageOptions& options) {
  Stage stage("dataset", config, options);
  const BaseShapeFamily family = read_family(stage.input(files::kFamily, "gen"));
  const fs::path samples_path = stage.output(files::kDataset);
  const fs::path meta_path = stage.output(files::kDatasetMeta);

  std::vector<AngleOfAttack> aoas;
  for (double a : config.dataset.aoas_deg) aoas.push_back(AngleOfAttack::degrees(a));
  const Dataset data = make_dataset(family, config.dataset.morphs_per_pair, aoas, config.flow,
                                    config.dataset.test_fraction, config.split_seed(), config.dataset.workers);
  write_samples_jsonl(data.samples, samples_path);
  write_dataset_meta(data.meta, meta_path);
  stage.produced(samples_path);
  stage.produced(meta_path);
  stage.log(std::to_string(data.meta.sample_count) + " samples, " + std::to_string(data.meta.skipped_shapes) +
            " degenerate shapes skipped, " + std::to_string(data.meta.test_shapes.size()) + " test shapes");
  return stage.finish({{"sample_count", data.meta.sample_count}, {"skipped_shapes", data.meta.skipped_shapes}});
}

StageResult cmd_train(const PipelineConfig& config, const StageOptions& options) {
  Stage stage("train", config, options);
  const Dataset data = load_dataset(stage);
  if (data.samples.empty()) throw ValidationError("dataset is empty");
  const auto expected = static_cast<std::size_t>(3 * config.geometry.nx * config.geometry.ny * config.geometry.nz);
  if (data.samples.front().params.size() != expected) {
    throw ValidationError("dataset rows carry " + std::to_string(data.samples.front().params.size()) +
                          " cage parameters but the config's cage needs " + std::to_string(expected));
  }
  if (static_cast<std::size_t>(data.meta.normalization.mean.size()) != expected) {
    throw ValidationError("dataset normalization does not match the config's cage dimension");
  }

  const fs::path checkpoint_path = stage.output(files::kCheckpoint);
  const fs::path report_path = stage.output(files::kTrainReport);
  const fs::path summary_path = stage.output(files::kTrainSummary);

  TrainConfig tc = config.training;
  tc.seed = config.training_seed();
  stage.log("training " + std::to_string(tc.epochs) + " epochs on " + std::to_string(train_rows(data).size()) +
            " rows");
  const TrainResult result = train(data, tc);
  const TrainReport& r = result.report;

  save_checkpoint({result.model, tc, sha256_file(stage.path(files::kDataset))}, checkpoint_path);

  const Json report{{"epochs", r.epoch_train_mse.size()},
                    {"epoch_train_mse", r.epoch_train_mse},
                    {"epoch_val_mse", r.epoch_val_mse},
                    {"initial_train_mse", r.initial_train_mse},
                    {"final_train_mse", r.final_train_mse},
                    {"test_mse", r.test_mse},
                    {"cd_relative_error", r.cd_relative_error},
                    {"cl_relative_error", r.cl_relative_error},
                    {"best_epoch", r.best_epoch},
                    {"learning_rate", r.learning_rate},
                    {"parameter_count", result.model.parameter_count()},
                    {"train_rows", train_rows(data).size()},
                    {"test_rows", test_rows(data).size()}};
  write_text_atomic(report_path, report.dump(2) + "\n");

  std::ostringstream summary;
  summary << "epochs            " << r.epoch_train_mse.size() << "\n"
          << "learning rate     " << r.learning_rate << "\n"
          << "initial train MSE " << r.initial_train_mse << "\n"
          << "final train MSE   " << r.final_train_mse << "\n"
          << "best epoch        " << r.best_epoch << "\n"
          << "test MSE          " << r.test_mse << "\n"
          << "test rel. error   cd " << fixed(100.0 * r.cd_relative_error, 2) << " %, cl "
          << fixed(100.0 * r.cl_relative_error, 2) << " %\n";
  write_text_atomic(summary_path, summary.str());

  for (const auto& p : {checkpoint_path, report_path, summary_path}) stage.produced(p);
  stage.log("test relative error cd " + fixed(100.0 * r.cd_relative_error, 2) + " %, cl " +
            fixed(100.0 * r.cl_relative_error, 2) + " % (best epoch " + std::to_string(r.best_epoch) + ")");
  return stage.finish({{"train_seconds", r.seconds}});
}

StageResult cmd_optimize(const PipelineConfig& config, const StageOptions& options) {
  Stage stage("optimize", config, options);
  const BaseShapeFamily family = read_family(stage.input(files::kFamily, "gen"));
  const DatasetMeta meta = read_dataset_meta(stage.input(files::kDatasetMeta, "dataset"));
  const Checkpoint checkpoint = load_checkpoint(stage.input(files::kCheckpoint, "train"));

  const auto [lo, hi] = std::minmax_element(meta.aoas_deg.begin(), meta.aoas_deg.end());
  for (double a : config.optimization.aoas_deg) {
    if (a < *lo - 1e-9 || a > *hi + 1e-9) {
      throw ValidationError("angle of attack " + fixed(a, 2) + " deg lies outside the training range [" +
                            fixed(*lo, 2) + ", " + fixed(*hi, 2) +
                            "] deg; the surrogate is not used to extrapolate");
    }
  }
  if (static_cast<std::size_t>(checkpoint.model.param_dim()) != family.cage.param_count()) {
    throw ValidationError("checkpoint expects " + std::to_string(checkpoint.model.param_dim()) +
                          " cage parameters but the family has " + std::to_string(family.cage.param_count()));
  }

  const fs::path designs_path = stage.output(files::kDesigns);
  const fs::path table_path = stage.output(files::kEtaTable);
  const fs::path plot_path = stage.output(files::kEtaPlot);
  const fs::path mesh_dir = stage.output_dir(files::kDesignMeshDir);

  std::vector<AngleOfAttack> aoas;
  for (double a : config.optimization.aoas_deg) aoas.push_back(AngleOfAttack::degrees(a));
  OptimizeSettings settings;
  settings.restarts = config.optimization.restarts;
  settings.budget_per_restart = config.optimization.budget;
  settings.sigma0 = config.optimization.sigma0;
  settings.seed = config.optimization_seed();
  settings.flow = meta.flow;
  stage.log("sweeping " + std::to_string(aoas.size()) + " angles, " + std::to_string(settings.restarts) +
            " restarts x " + std::to_string(settings.budget_per_restart) + " evaluations");
  const std::vector<DesignResult> results =
      sweep_aoa(aoas, surrogate_predictor(checkpoint.model), family, settings);

  Json records = Json::array();
  std::ostringstream table;
  table << std::setprecision(17);
  table << "aoa_deg,predicted_cd,predicted_cl,predicted_eta,oracle_cd,oracle_cl,oracle_eta,eta_gap\n";
  PlotSeries predicted{"surrogate", {}, {}, "#1f77b4", true};
  PlotSeries oracle{"oracle recheck", {}, {}, "#d62728", true};
  std::size_t failures = 0;
  for (const auto& r : results) {
    Json rec{{"aoa_deg", r.aoa_deg}, {"ok", r.ok}, {"error", r.error}};
    if (r.ok) {
      const std::string base = std::string("design_") + aoa_tag(r.aoa_deg);
      const TriMesh mesh = deform(family.cage, r.params, family.base);
      const fs::path obj = mesh_dir / (base + ".obj");
      const fs::path stl = mesh_dir / (base + ".stl");
      write_obj(mesh, obj);
      write_stl(mesh, stl, "glider design " + fixed(r.aoa_deg, 2) + " deg");
      stage.produced(obj);
      stage.produced(stl);
      rec["restart"] = r.restart;
      rec["evaluations"] = r.evaluations;
      rec["params"] = vector_to_json(r.params.offsets);
      rec["hull_weights"] = vector_to_json(r.hull_weights);
      rec["predicted"] = coeffs_json(r.predicted, r.predicted_eta);
      rec["oracle"] = coeffs_json(r.oracle, r.oracle_eta);
      rec["eta_gap"] = number_or_null(r.eta_gap);
      rec["mesh_obj"] = fs::relative(obj, options.out).generic_string();
      rec["mesh_stl"] = fs::relative(stl, options.out).generic_string();
      table << r.aoa_deg << ',' << r.predicted.cd << ',' << r.predicted.cl << ',' << r.predicted_eta << ','
            << r.oracle.cd << ',' << r.oracle.cl << ',' << r.oracle_eta << ',' << r.eta_gap << '\n';
      predicted.x.push_back(r.aoa_deg);
      predicted.y.push_back(r.predicted_eta);
      oracle.x.push_back(r.aoa_deg);
      oracle.y.push_back(r.oracle_eta);
      stage.log(fixed(r.aoa_deg, 1) + " deg: eta surrogate " + fixed(r.predicted_eta, 4) + ", oracle " +
                fixed(r.oracle_eta, 4) + (r.error.empty() ? "" : " (" + r.error + ")"));
    } else {
      ++failures;
      stage.log(fixed(r.aoa_deg, 1) + " deg failed: " + r.error);
    }
    records.push_back(std::move(rec));
  }
  if (failures == results.size()) throw OptimizationFailed("every angle of the sweep failed");

  const Json doc{{"tool_version", kToolVersion},
                 {"dataset_fingerprint", checkpoint.dataset_fingerprint},
                 {"family_size", family.size()},
                 {"results", records}};
  write_text_atomic(designs_path, doc.dump(2) + "\n");
  write_text_atomic(table_path, table.str());
  write_text_atomic(plot_path, render_svg({"Optimized lift-to-drag ratio vs angle of attack", "angle of attack (deg)",
                                           "eta = cl / cd", {predicted, oracle}, false}));
  for (const auto& p : {designs_path, table_path, plot_path}) stage.produced(p);
  return stage.finish({{"failed_angles", failures}});
}

std::vector<DesignRecord> read_designs(const fs::path& path) {
  const Json j = read_json_file(path);
  std::vector<DesignRecord> out;
  try {
    for (const auto& r : j.at("results")) {
      DesignRecord d;
      d.aoa_deg = r.at("aoa_deg").get<double>();
      d.ok = r.at("ok").get<bool>();
      d.error = r.at("error").get<std::string>();
      if (d.ok) {
        d.restart = r.at("restart").get<int>();
        d.evaluations = r.at("evaluations").get<long>();
        d.params = vector_from_json(r.at("params"));
        d.hull_weights = vector_from_json(r.at("hull_weights"));
        const Json& p = r.at("predicted");
        d.predicted = {number_from(p.at("cd")), number_from(p.at("cl"))};
        d.predicted_eta = number_from(p.at("eta"));
        const Json& o = r.at("oracle");
        d.oracle = {number_from(o.at("cd")), number_from(o.at("cl"))};
        d.oracle_eta = number_from(o.at("eta"));
        d.eta_gap = number_from(r.at("eta_gap"));
        d.mesh_obj = r.at("mesh_obj").get<std::string>();
        d.mesh_stl = r.at("mesh_stl").get<std::string>();
      }
      out.push_back(std::move(d));
    }
  } catch (const Json::exception& err) {
    throw ParseError(path.string() + ": " + err.what(), 0);
  }
  return out;
}

StageResult cmd_simulate(const PipelineConfig& config, const StageOptions& options) {
  Stage stage("simulate", config, options);
  const DynamicsConfig& d = config.dynamics;

  HydroCoeffs coeffs{d.cd, d.cl};
  double reference_area = d.reference_area;
  if (d.source == "design") {
    const auto designs = read_designs(stage.input(files::kDesigns, "optimize"));
    const DesignRecord& rec = find_design(designs, d.design_aoa_deg);
    if (!std::isfinite(rec.oracle.cd) || !std::isfinite(rec.oracle.cl) || !(rec.oracle.cl > 0.0)) {
      throw ValidationError("design at " + fixed(d.design_aoa_deg, 2) + " deg has no usable oracle coefficients");
    }
    coeffs = rec.oracle;
    reference_area = mesh_features(read_obj(stage.input(rec.mesh_obj, "optimize"))).reference_area;
  }

  GliderPhysical phys;
  phys.hull_mass = d.hull_mass;
  phys.ballast = d.ballast;
  phys.ballast_capacity = d.ballast_capacity;
  phys = with_coefficients(phys, coeffs, reference_area);
  BuoyancyConfig buoyancy;
  buoyancy.depth = d.depth;
  buoyancy.chamber_pressure = d.chamber_pressure;
  buoyancy.pump_efficiency = d.pump_efficiency;
  buoyancy.density = config.flow.density;

  const fs::path trajectory_path = stage.output(files::kTrajectory);
  const fs::path cycle_path = stage.output(files::kCycle);
  const fs::path plot_path = stage.output(files::kSawtooth);

  const std::vector<GlideState> states = simulate(phys, buoyancy, d.dt, d.duration);
  write_trajectory_csv(states, trajectory_path);
  const GlideState& end = states.back();
  const double eta = coeffs.cl / coeffs.cd;
  const double rad_to_deg = 180.0 / kPi;

  Json cycle_json;
  PlotSeries sawtooth{"steady dive cycle", {}, {}, "#1f77b4", true};
  double theta_deg = 0.0;
  double wd = 0.0;
  double speed = 0.0;
  if (phys.ballast != 0.0) {
    const CycleSummary c = dive_cycle(phys, buoyancy, d.depth);
    const double closed = work_per_distance(std::abs(phys.ballast), coeffs.cd, coeffs.cl, d.pump_efficiency,
                                            buoyancy.gravity);
    theta_deg = c.theta * rad_to_deg;
    wd = c.work_per_distance;
    speed = c.speed;
    cycle_json = Json{{"depth", c.depth},
                      {"speed", c.speed},
                      {"theta_deg", theta_deg},
                      {"vx", c.vx},
                      {"vz", c.vz},
                      {"descent_distance", c.descent_distance},
                      {"ascent_distance", c.ascent_distance},
                      {"distance", c.distance},
                      {"duration", c.duration},
                      {"energy", c.energy},
                      {"work_per_distance", c.work_per_distance},
                      {"closed_form_work_per_distance", closed},
                      {"work_per_distance_relative_difference", std::abs(c.work_per_distance - closed) / closed}};
    sawtooth.x = {0.0, c.descent_distance, c.distance};
    sawtooth.y = {0.0, c.depth, 0.0};
  } else {
    // Neutral buoyancy: nothing drives the glider, so the cycle covers no ground.
    cycle_json = Json{{"depth", d.depth}, {"speed", 0.0},    {"theta_deg", nullptr}, {"distance", 0.0},
                      {"duration", nullptr}, {"energy", 0.0}, {"work_per_distance", nullptr}};
    sawtooth.x = {0.0, 0.0};
    sawtooth.y = {0.0, 0.0};
  }

  PlotSeries simulated{"simulated descent from rest", {}, {}, "#d62728", false};
  const std::size_t stride = std::max<std::size_t>(1, states.size() / 600);
  for (std::size_t i = 0; i < states.size(); i += stride) {
    if (states[i].z > d.depth) break;
    simulated.x.push_back(states[i].x);
    simulated.y.push_back(states[i].z);
  }

  const Json doc{{"coefficients",
                  {{"cd", coeffs.cd},
                   {"cl", coeffs.cl},
                   {"eta", eta},
                   {"reference_area", reference_area},
                   {"drag_area", phys.drag_area},
                   {"lift_area", phys.lift_area},
                   {"source", d.source}}},
                 {"ballast", phys.ballast},
                 {"pump_efficiency", d.pump_efficiency},
                 {"simulated_terminal",
                  {{"t", end.t},
                   {"speed", end.speed()},
                   {"theta_deg", end.speed() > 0.0 ? Json(end.theta() * rad_to_deg) : Json(nullptr)},
                   {"vx", end.vx},
                   {"vz", end.vz}}},
                 {"cycle", cycle_json}};
  write_text_atomic(cycle_path, doc.dump(2) + "\n");
  write_text_atomic(plot_path, render_svg({"Dive cycle", "horizontal distance (m)", "depth (m)",
                                           {sawtooth, simulated}, true}));
  for (const auto& p : {trajectory_path, cycle_path, plot_path}) stage.produced(p);

  stage.log("v = " + fixed(speed, 4) + " m/s, theta = " + fixed(theta_deg, 2) + " deg, eta = " + fixed(eta, 3) +
            ", W_d = " + (phys.ballast != 0.0 ? fixed(wd, 6) + " J/m" : std::string("n/a (no ballast)")));
  return stage.finish();
}

StageResult cmd_export(const PipelineConfig& config, const StageOptions& options, const ExportRequest& request) {
  Stage stage("export", config, options);
  if (request.design_aoa_deg.has_value() == request.base_index.has_value()) {
    throw ValidationError("export: choose exactly one of --aoa or --base");
  }
  if (request.format != "obj" && request.format != "stl" && request.format != "both") {
    throw ValidationError("export: format must be obj, stl or both");
  }
  const BaseShapeFamily family = read_family(stage.input(files::kFamily, "gen"));
  CageParams params;
  std::string name;
  if (request.design_aoa_deg) {
    const auto designs = read_designs(stage.input(files::kDesigns, "optimize"));
    params = CageParams(find_design(designs, *request.design_aoa_deg).params);
    name = std::string("design_") + aoa_tag(*request.design_aoa_deg);
  } else {
    const int i = *request.base_index;
    if (i < 0 || static_cast<std::size_t>(i) >= family.size()) {
      throw ValidationError("export: base index must lie in [0, " + std::to_string(family.size()) + ")");
    }
    params = family.shapes[static_cast<std::size_t>(i)].params;
    name = "base_" + std::to_string(i) + "_" + safe_name(family.shapes[static_cast<std::size_t>(i)].name);
  }
  const TriMesh mesh = deform(family.cage, params, family.base);
  fs::create_directories(stage.path(files::kExportDir));
  const std::string prefix = std::string(files::kExportDir) + "/" + name;
  if (request.format != "stl") {
    const fs::path p = stage.output(prefix + ".obj");
    write_obj(mesh, p);
    stage.produced(p);
  }
  if (request.format != "obj") {
    const fs::path p = stage.output(prefix + ".stl");
    write_stl(mesh, p, name);
    stage.produced(p);
  }
  stage.log("exported " + name);
  return stage.finish();
}

}  // namespace glider
