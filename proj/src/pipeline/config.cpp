#include <cmath>
#include <set>
#include <string>

#include "glider/errors.hpp"
#include "glider/optimizer.hpp"
#include "glider/pipeline.hpp"

namespace glider {
namespace {

// Reads the keys of one config object onto defaults and remembers which keys
// were consumed so leftovers can be reported.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + ": expected an object");
  }

  void read(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void read(const char* key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<int>();
    }
  }
  void read(const char* key, long& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      out = v->get<long>();
    }
  }
  void read(const char* key, unsigned& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) fail(key, "a non-negative integer");
      out = v->get<unsigned>();
    }
  }
  void read(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const char* key, std::optional<std::uint64_t>& out) {
    if (find(key) == nullptr) return;
    std::uint64_t value = 0;
    read(key, value);
    out = value;
  }
  void read(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "true or false");
      out = v->get<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void read(const char* key, std::vector<double>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void read(const char* key, std::vector<int>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) fail(key, "an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }

  // Nested object, or nullptr when absent.
  const Json* child(const char* key) { return find(key); }
  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (seen_.count(item.key()) == 0) throw ValidationError("unknown key '" + path_ + "." + item.key() + "'");
    }
  }

 private:
  const Json* find(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* expected) const {
    throw ValidationError(path_ + "." + key + ": expected " + expected);
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("config: " + message);
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    geometry.validate();
    flow.validate();
    training.validate();
  } catch (const InvalidArgument& err) {
    throw ValidationError(std::string("config: ") + err.what());
  }
  require(!output_dir.empty(), "output_dir must not be empty");
  require(family.size >= 2, "family.size must be at least 2");

  require(dataset.morphs_per_pair >= 0, "dataset.morphs_per_pair must be non-negative");
  require(!dataset.aoas_deg.empty(), "dataset.aoas_deg must not be empty");
  for (double a : dataset.aoas_deg) {
    require(std::isfinite(a) && std::abs(a) <= kOracleEnvelopeDeg,
            "dataset.aoas_deg entries must lie within +-" + std::to_string(static_cast<int>(kOracleEnvelopeDeg)) + " deg");
  }
  require(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0, "dataset.test_fraction must lie in (0, 1)");

  require(optimization.restarts >= 1, "optimization.restarts must be >= 1");
  require(optimization.budget >= default_population(family.size),
          "optimization.budget must be at least the CMA-ES population (" +
              std::to_string(default_population(family.size)) + ")");
  require(optimization.sigma0 > 0.0, "optimization.sigma0 must be positive");
  require(!optimization.aoas_deg.empty(), "optimization.aoas_deg must not be empty");
  for (double a : optimization.aoas_deg) {
    require(std::isfinite(a) && std::abs(a) <= kOracleEnvelopeDeg,
            "optimization.aoas_deg entries must lie within +-" + std::to_string(static_cast<int>(kOracleEnvelopeDeg)) +
                " deg");
  }

  const DynamicsConfig& d = dynamics;
  require(d.source == "direct" || d.source == "design", "dynamics.source must be \"direct\" or \"design\"");
  if (d.source == "direct") {
    require(d.cd > 0.0, "dynamics.cd must be positive");
    require(d.cl > 0.0, "dynamics.cl must be positive");
    require(d.reference_area > 0.0, "dynamics.reference_area must be positive");
  }
  require(d.hull_mass > 0.0, "dynamics.hull_mass must be positive");
  require(d.ballast_capacity > 0.0, "dynamics.ballast_capacity must be positive");
  require(std::abs(d.ballast) <= d.ballast_capacity, "|dynamics.ballast| exceeds dynamics.ballast_capacity");
  require(d.pump_efficiency > 0.0 && d.pump_efficiency <= 1.0, "dynamics.pump_efficiency must lie in (0, 1]");
  require(d.depth > 0.0, "dynamics.depth must be positive");
  require(d.dt > 0.0 && d.dt <= 0.1, "dynamics.dt must lie in (0, 0.1]");
  require(d.duration >= 10.0 * d.dt, "dynamics.duration must cover at least 10 steps");
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig c;
  Section top(j, "config");
  top.read("seed", c.seed);
  top.read("output_dir", c.output_dir);

  if (const Json* g = top.child("geometry")) {
    Section s(*g, top.path("geometry"));
    std::vector<double> axes = {c.geometry.semi_x, c.geometry.semi_y, c.geometry.semi_z};
    std::vector<int> cage = {c.geometry.nx, c.geometry.ny, c.geometry.nz};
    s.read("semi_axes", axes);
    s.read("cage", cage);
    if (axes.size() != 3) throw ValidationError("config.geometry.semi_axes: expected 3 entries");
    if (cage.size() != 3) throw ValidationError("config.geometry.cage: expected 3 entries");
    c.geometry.semi_x = axes[0];
    c.geometry.semi_y = axes[1];
    c.geometry.semi_z = axes[2];
    c.geometry.nx = cage[0];
    c.geometry.ny = cage[1];
    c.geometry.nz = cage[2];
    s.read("subdivisions", c.geometry.subdivisions);
    s.read("margin", c.geometry.margin);
    s.finish();
  }
  if (const Json* f = top.child("family")) {
    Section s(*f, top.path("family"));
    s.read("size", c.family.size);
    s.read("seed", c.family.seed);
    s.read("write_meshes", c.family.write_meshes);
    s.finish();
  }
  if (const Json* f = top.child("flow")) {
    Section s(*f, top.path("flow"));
    s.read("density", c.flow.density);
    s.read("viscosity", c.flow.viscosity);
    s.read("speed", c.flow.speed);
    s.finish();
  }
  if (const Json* d = top.child("dataset")) {
    Section s(*d, top.path("dataset"));
    s.read("morphs_per_pair", c.dataset.morphs_per_pair);
    s.read("aoas_deg", c.dataset.aoas_deg);
    s.read("test_fraction", c.dataset.test_fraction);
    s.read("split_seed", c.dataset.split_seed);
    s.read("workers", c.dataset.workers);
    s.finish();
  }
  if (const Json* t = top.child("training")) {
    Section s(*t, top.path("training"));
    s.read("learning_rate", c.training.learning_rate);
    s.read("batch_size", c.training.batch_size);
    s.read("warmup_epochs", c.training.warmup_epochs);
    s.read("epochs", c.training.epochs);
    s.read("beta1", c.training.beta1);
    s.read("beta2", c.training.beta2);
    s.read("epsilon", c.training.epsilon);
    std::optional<std::uint64_t> seed;
    s.read("seed", seed);
    if (seed) {
      c.training.seed = *seed;
      c.training_seed_set = true;
    }
    s.read("hidden", c.training.hidden);
    s.read("validation_fraction", c.training.validation_fraction);
    s.finish();
  }
  if (const Json* o = top.child("optimization")) {
    Section s(*o, top.path("optimization"));
    s.read("restarts", c.optimization.restarts);
    s.read("budget", c.optimization.budget);
    s.read("sigma0", c.optimization.sigma0);
    s.read("aoas_deg", c.optimization.aoas_deg);
    s.read("seed", c.optimization.seed);
    s.finish();
  }
  if (const Json* d = top.child("dynamics")) {
    Section s(*d, top.path("dynamics"));
    DynamicsConfig& y = c.dynamics;
    s.read("source", y.source);
    s.read("cd", y.cd);
    s.read("cl", y.cl);
    s.read("reference_area", y.reference_area);
    s.read("design_aoa_deg", y.design_aoa_deg);
    s.read("hull_mass", y.hull_mass);
    s.read("ballast", y.ballast);
    s.read("ballast_capacity", y.ballast_capacity);
    s.read("pump_efficiency", y.pump_efficiency);
    s.read("depth", y.depth);
    s.read("chamber_pressure", y.chamber_pressure);
    s.read("dt", y.dt);
    s.read("duration", y.duration);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  return pipeline_config_from_json(read_json_file(path));
}

Json pipeline_config_to_json(const PipelineConfig& c) {
  const GeometrySettings& g = c.geometry;
  const DynamicsConfig& d = c.dynamics;
  return Json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"geometry",
       {{"semi_axes", {g.semi_x, g.semi_y, g.semi_z}},
        {"cage", {g.nx, g.ny, g.nz}},
        {"subdivisions", g.subdivisions},
        {"margin", g.margin}}},
      {"family", {{"size", c.family.size}, {"seed", c.family_seed()}, {"write_meshes", c.family.write_meshes}}},
      {"flow", {{"density", c.flow.density}, {"viscosity", c.flow.viscosity}, {"speed", c.flow.speed}}},
      {"dataset",
       {{"morphs_per_pair", c.dataset.morphs_per_pair},
        {"aoas_deg", c.dataset.aoas_deg},
        {"test_fraction", c.dataset.test_fraction},
        {"split_seed", c.split_seed()},
        {"workers", c.dataset.workers}}},
      {"training",
       {{"learning_rate", c.training.learning_rate},
        {"batch_size", c.training.batch_size},
        {"warmup_epochs", c.training.warmup_epochs},
        {"epochs", c.training.epochs},
        {"beta1", c.training.beta1},
        {"beta2", c.training.beta2},
        {"epsilon", c.training.epsilon},
        {"seed", c.training_seed()},
        {"hidden", c.training.hidden},
        {"validation_fraction", c.training.validation_fraction}}},
      {"optimization",
       {{"restarts", c.optimization.restarts},
        {"budget", c.optimization.budget},
        {"sigma0", c.optimization.sigma0},
        {"aoas_deg", c.optimization.aoas_deg},
        {"seed", c.optimization_seed()}}},
      {"dynamics",
       {{"source", d.source},
        {"cd", d.cd},
        {"cl", d.cl},
        {"reference_area", d.reference_area},
        {"design_aoa_deg", d.design_aoa_deg},
        {"hull_mass", d.hull_mass},
        {"ballast", d.ballast},
        {"ballast_capacity", d.ballast_capacity},
        {"pump_efficiency", d.pump_efficiency},
        {"depth", d.depth},
        {"chamber_pressure", d.chamber_pressure},
        {"dt", d.dt},
        {"duration", d.duration}}},
  };
}

}  // namespace glider
