#include <string>

#include "glider/errors.hpp"
#include "glider/json_io.hpp"
#include "glider/surrogate.hpp"

namespace glider {
namespace {

constexpr const char* kFormat = "glider-surrogate";
constexpr int kFormatVersion = 1;

Json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> row_major;
  row_major.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row_major.push_back(m(r, c));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", row_major}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InvalidArgument("checkpoint: matrix data does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

Json config_to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
              {"warmup_epochs", c.warmup_epochs}, {"epochs", c.epochs},
              {"beta1", c.beta1},                 {"beta2", c.beta2},
              {"epsilon", c.epsilon},             {"seed", c.seed},
              {"hidden", c.hidden},               {"validation_fraction", c.validation_fraction}};
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.warmup_epochs = j.at("warmup_epochs").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.validate();
  return c;
}

void validate_shapes(const SurrogateModel& m) {
  if (m.dense.size() < 2 || m.norms.size() + 1 != m.dense.size()) {
    throw InvalidArgument("checkpoint: layer/batch-norm counts are inconsistent");
  }
  for (std::size_t l = 0; l < m.dense.size(); ++l) {
    const auto& d = m.dense[l];
    if (d.bias.size() != d.weight.rows()) throw InvalidArgument("checkpoint: bias size mismatch in layer " + std::to_string(l));
    if (l > 0 && d.weight.cols() != m.dense[l - 1].weight.rows()) {
      throw InvalidArgument("checkpoint: layer " + std::to_string(l) + " input width does not chain");
    }
    if (!d.weight.allFinite() || !d.bias.allFinite()) throw InvalidArgument("checkpoint: non-finite weights");
  }
  for (std::size_t l = 0; l < m.norms.size(); ++l) {
    const auto& bn = m.norms[l];
    const auto width = m.dense[l].weight.rows();
    if (bn.gamma.size() != width || bn.beta.size() != width || bn.running_mean.size() != width ||
        bn.running_var.size() != width) {
      throw InvalidArgument("checkpoint: batch-norm " + std::to_string(l) + " width mismatch");
    }
    if ((bn.running_var.array() < 0.0).any()) throw InvalidArgument("checkpoint: negative running variance");
  }
  if (m.dense.back().weight.rows() != 2) throw InvalidArgument("checkpoint: output layer must have two outputs");
  if (m.input.mean.size() + 1 != m.input_dim() || m.input.scale.size() != m.input.mean.size()) {
    throw InvalidArgument("checkpoint: input normalization does not match the first layer");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const SurrogateModel& m = checkpoint.model;
  validate_shapes(m);
  Json layers = Json::array();
  for (const auto& d : m.dense) layers.push_back({{"weight", matrix_to_json(d.weight)}, {"bias", vector_to_json(d.bias)}});
  Json norms = Json::array();
  for (const auto& bn : m.norms) {
    norms.push_back({{"gamma", vector_to_json(bn.gamma)},
                     {"beta", vector_to_json(bn.beta)},
                     {"running_mean", vector_to_json(bn.running_mean)},
                     {"running_var", vector_to_json(bn.running_var)}});
  }
  Json j{{"format", kFormat},
         {"version", kFormatVersion},
         {"tool_version", kToolVersion},
         {"layers", layers},
         {"batch_norm", norms},
         {"momentum", m.momentum},
         {"bn_epsilon", m.bn_epsilon},
         {"input_normalization", to_json(m.input)},
         {"train_config", config_to_json(checkpoint.config)},
         {"dataset_fingerprint", checkpoint.dataset_fingerprint}};
  write_text_atomic(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  try {
    if (j.at("format").get<std::string>() != kFormat) throw InvalidArgument("checkpoint: unknown format");
    if (j.at("version").get<int>() != kFormatVersion) throw InvalidArgument("checkpoint: unsupported version");
    Checkpoint cp;
    for (const auto& l : j.at("layers")) {
      cp.model.dense.push_back({matrix_from_json(l.at("weight")), vector_from_json(l.at("bias"))});
    }
    for (const auto& n : j.at("batch_norm")) {
      cp.model.norms.push_back({vector_from_json(n.at("gamma")), vector_from_json(n.at("beta")),
                                vector_from_json(n.at("running_mean")), vector_from_json(n.at("running_var"))});
    }
    cp.model.momentum = j.at("momentum").get<double>();
    cp.model.bn_epsilon = j.at("bn_epsilon").get<double>();
    cp.model.input = normalization_from_json(j.at("input_normalization"));
    cp.config = config_from_json(j.at("train_config"));
    cp.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    validate_shapes(cp.model);
    return cp;
  } catch (const Json::exception& err) {
    throw ParseError(path.string() + ": " + err.what(), 0);
  }
}

}  // namespace glider
