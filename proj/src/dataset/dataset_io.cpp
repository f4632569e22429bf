#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glider/errors.hpp"
#include "glider/json_io.hpp"

namespace glider {

Json to_json(const GeometrySettings& g) {
  return Json{{"semi_axes", {g.semi_x, g.semi_y, g.semi_z}},
              {"subdivisions", g.subdivisions},
              {"cage", {g.nx, g.ny, g.nz}},
              {"margin", g.margin}};
}

GeometrySettings geometry_from_json(const Json& j) {
  GeometrySettings g;
  const auto axes = j.at("semi_axes").get<std::vector<double>>();
  const auto cage = j.at("cage").get<std::vector<int>>();
  if (axes.size() != 3 || cage.size() != 3) throw InvalidArgument("geometry: semi_axes and cage need 3 entries");
  g.semi_x = axes[0];
  g.semi_y = axes[1];
  g.semi_z = axes[2];
  g.nx = cage[0];
  g.ny = cage[1];
  g.nz = cage[2];
  g.subdivisions = j.at("subdivisions").get<int>();
  g.margin = j.at("margin").get<double>();
  g.validate();
  return g;
}

Json to_json(const FlowConditions& f) {
  return Json{{"density", f.density}, {"viscosity", f.viscosity}, {"speed", f.speed}};
}

FlowConditions flow_from_json(const Json& j) {
  FlowConditions f{j.at("density").get<double>(), j.at("viscosity").get<double>(), j.at("speed").get<double>()};
  f.validate();
  return f;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json to_json(const InputNormalization& n) {
  return Json{{"mean", vector_to_json(n.mean)}, {"scale", vector_to_json(n.scale)}};
}

InputNormalization normalization_from_json(const Json& j) {
  InputNormalization n{vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
  if (n.mean.size() != n.scale.size()) throw InvalidArgument("normalization: mean/scale length mismatch");
  return n;
}

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json provenance_json(const Provenance& p) {
  if (p.is_base()) return Json{{"kind", "base"}, {"index", p.base_a}};
  return Json{{"kind", "morph"}, {"a", p.base_a}, {"b", p.base_b}, {"t", p.t}};
}

Provenance provenance_from(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "base") return Provenance::base(j.at("index").get<int>());
  if (kind == "morph") return Provenance::morph(j.at("a").get<int>(), j.at("b").get<int>(), j.at("t").get<double>());
  throw InvalidArgument("unknown provenance kind '" + kind + "'");
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    const std::size_t line = line_of_offset(text, err.byte == 0 ? 0 : err.byte - 1);
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + err.what(), line);
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_samples_jsonl(const std::vector<LabeledSample>& samples, const std::filesystem::path& path) {
  std::string text;
  for (const auto& s : samples) {
    if (!s.params.all_finite() || !std::isfinite(s.coeffs.cd) || !std::isfinite(s.coeffs.cl)) {
      throw InvalidArgument("sample " + std::to_string(s.id) + " has non-finite values");
    }
    Json row{{"id", s.id},
             {"shape", s.shape},
             {"params", vector_to_json(s.params.offsets)},
             {"aoa_deg", s.aoa.deg()},
             {"cd", s.coeffs.cd},
             {"cl", s.coeffs.cl},
             {"provenance", provenance_json(s.provenance)}};
    text += row.dump();
    text += '\n';
  }
  write_text_atomic(path, text);
}

std::vector<LabeledSample> read_samples_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json row = Json::parse(line);
      LabeledSample s;
      s.id = row.at("id").get<std::uint64_t>();
      s.shape = row.at("shape").get<std::uint64_t>();
      s.params = CageParams(vector_from_json(row.at("params")));
      s.aoa = AngleOfAttack::degrees(row.at("aoa_deg").get<double>());
      s.coeffs = {row.at("cd").get<double>(), row.at("cl").get<double>()};
      s.provenance = provenance_from(row.at("provenance"));
      out.push_back(std::move(s));
    } catch (const std::exception& err) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + err.what(), line_no);
    }
  }
  return out;
}

void write_dataset_meta(const DatasetMeta& meta, const std::filesystem::path& path) {
  Json j{{"tool_version", meta.tool_version},
         {"geometry", to_json(meta.geometry)},
         {"flow", to_json(meta.flow)},
         {"aoas_deg", meta.aoas_deg},
         {"morphs_per_pair", meta.morphs_per_pair},
         {"family_size", meta.family_size},
         {"family_seed", meta.family_seed},
         {"split_seed", meta.split_seed},
         {"test_fraction", meta.test_fraction},
         {"test_shapes", meta.test_shapes},
         {"sample_count", meta.sample_count},
         {"skipped_shapes", meta.skipped_shapes},
         {"normalization", to_json(meta.normalization)}};
  write_text_atomic(path, j.dump(2) + "\n");
}

DatasetMeta read_dataset_meta(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    DatasetMeta m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.geometry = geometry_from_json(j.at("geometry"));
    m.flow = flow_from_json(j.at("flow"));
    m.aoas_deg = j.at("aoas_deg").get<std::vector<double>>();
    m.morphs_per_pair = j.at("morphs_per_pair").get<int>();
    m.family_size = j.at("family_size").get<int>();
    m.family_seed = j.at("family_seed").get<std::uint64_t>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.test_fraction = j.at("test_fraction").get<double>();
    m.test_shapes = j.at("test_shapes").get<std::vector<std::uint64_t>>();
    m.sample_count = j.at("sample_count").get<std::size_t>();
    m.skipped_shapes = j.at("skipped_shapes").get<std::size_t>();
    m.normalization = normalization_from_json(j.at("normalization"));
    std::sort(m.test_shapes.begin(), m.test_shapes.end());
    return m;
  } catch (const Json::exception& err) {
    throw ParseError(path.string() + ": " + err.what(), 0);
  }
}

void write_family(const BaseShapeFamily& family, const std::filesystem::path& path) {
  Json shapes = Json::array();
  for (const auto& s : family.shapes) shapes.push_back({{"name", s.name}, {"params", vector_to_json(s.params.offsets)}});
  Json j{{"tool_version", kToolVersion},
         {"seed", family.seed},
         {"geometry", to_json(family.geometry)},
         {"shapes", shapes}};
  write_text_atomic(path, j.dump(2) + "\n");
}

BaseShapeFamily read_family(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  std::vector<BaseShape> shapes;
  GeometrySettings geometry;
  std::uint64_t seed = 0;
  try {
    geometry = geometry_from_json(j.at("geometry"));
    seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("shapes")) {
      shapes.push_back({s.at("name").get<std::string>(), CageParams(vector_from_json(s.at("params")))});
    }
  } catch (const Json::exception& err) {
    throw ParseError(path.string() + ": " + err.what(), 0);
  }
  BaseShapeFamily family = make_family(geometry, std::move(shapes));
  family.seed = seed;
  return family;
}

}  // namespace glider
