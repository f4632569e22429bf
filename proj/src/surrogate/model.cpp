#include <cmath>
#include <random>
#include <string>

#include "glider/errors.hpp"
#include "glider/surrogate.hpp"

namespace glider {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Activations kept for the backward pass of one training-mode evaluation.
struct Trace {
  std::vector<Eigen::MatrixXd> activations;  // [0] = inputs, [l + 1] = tanh output of hidden layer l
  std::vector<Eigen::MatrixXd> normalized;   // x-hat per hidden layer
  std::vector<Eigen::VectorXd> inv_std;
  std::vector<BatchMoments> moments;
  Eigen::MatrixXd logits;  // 2 x n, before the softplus head
};

void check_inputs(const SurrogateModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != model.input_dim()) {
    throw InvalidArgument("surrogate: expected " + std::to_string(model.input_dim()) + " input rows, got " +
                          std::to_string(inputs.rows()));
  }
}

Eigen::MatrixXd apply_head(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) out(0, c) = softplus(logits(0, c));
  return out;
}

Trace trace_train(const SurrogateModel& model, const Eigen::MatrixXd& inputs) {
  check_inputs(model, inputs);
  const Eigen::Index n = inputs.cols();
  if (n < 2) throw InvalidArgument("surrogate: training mode needs a batch of at least two samples");

  Trace t;
  t.activations.push_back(inputs);
  for (std::size_t l = 0; l < model.norms.size(); ++l) {
    const DenseLayer& layer = model.dense[l];
    const BatchNormLayer& bn = model.norms[l];
    Eigen::MatrixXd z = layer.weight * t.activations.back();
    z.colwise() += layer.bias;

    BatchMoments mom;
    mom.mean = z.rowwise().mean();
    z.colwise() -= mom.mean;
    mom.variance = z.array().square().rowwise().mean();
    Eigen::VectorXd inv = (mom.variance.array() + model.bn_epsilon).rsqrt();
    z = inv.asDiagonal() * z;

    Eigen::MatrixXd y = bn.gamma.asDiagonal() * z;
    y.colwise() += bn.beta;
    t.normalized.push_back(std::move(z));
    t.inv_std.push_back(std::move(inv));
    t.moments.push_back(std::move(mom));
    t.activations.push_back(y.array().tanh().matrix());
  }
  t.logits = model.dense.back().weight * t.activations.back();
  t.logits.colwise() += model.dense.back().bias;
  return t;
}

double weighted_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets, std::array<double, 2> w) {
  const Eigen::MatrixXd diff = pred - targets;
  const double n = static_cast<double>(pred.cols());
  return (w[0] * diff.row(0).squaredNorm() + w[1] * diff.row(1).squaredNorm()) / (2.0 * n);
}

}  // namespace

Eigen::Index SurrogateModel::parameter_count() const {
  Eigen::Index count = 0;
  for (const auto& d : dense) count += d.weight.size() + d.bias.size();
  for (const auto& bn : norms) count += bn.gamma.size() + bn.beta.size();
  return count;
}

SurrogateModel make_model(InputNormalization input, const std::vector<int>& hidden, std::uint64_t seed) {
  if (hidden.empty()) throw InvalidArgument("make_model: need at least one hidden layer");
  if (input.mean.size() == 0 || input.mean.size() != input.scale.size()) {
    throw InvalidArgument("make_model: invalid input normalization");
  }
  SurrogateModel model;
  model.input = std::move(input);
  std::mt19937_64 rng(seed);

  Eigen::Index fan_in = model.input.mean.size() + 1;
  auto add_dense = [&](Eigen::Index out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, fan_in), Eigen::VectorXd(out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < out; ++r) layer.bias[r] = u(rng);
    model.dense.push_back(std::move(layer));
    fan_in = out;
  };
  for (int width : hidden) {
    if (width < 1) throw InvalidArgument("make_model: hidden widths must be positive");
    add_dense(width);
    model.norms.push_back({Eigen::VectorXd::Ones(width), Eigen::VectorXd::Zero(width), Eigen::VectorXd::Zero(width),
                           Eigen::VectorXd::Ones(width)});
  }
  add_dense(2);
  return model;
}

Eigen::MatrixXd encode_inputs(const SurrogateModel& model, const std::vector<CageParams>& params,
                              const std::vector<AngleOfAttack>& aoas) {
  if (params.size() != aoas.size()) throw InvalidArgument("encode_inputs: params/aoa count mismatch");
  const Eigen::Index dim = model.param_dim();
  Eigen::MatrixXd x(dim + 1, static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (static_cast<Eigen::Index>(params[i].size()) != dim) {
      throw InvalidArgument("surrogate: expected " + std::to_string(dim) + " cage offsets, got " +
                            std::to_string(params[i].size()));
    }
    const auto c = static_cast<Eigen::Index>(i);
    x.col(c).head(dim) = model.input.normalize(params[i].offsets);
    x(dim, c) = aoas[i].deg() * kAoaInputScale;
  }
  return x;
}

Eigen::MatrixXd encode_inputs(const SurrogateModel& model, const std::vector<LabeledSample>& samples) {
  std::vector<CageParams> params;
  std::vector<AngleOfAttack> aoas;
  params.reserve(samples.size());
  aoas.reserve(samples.size());
  for (const auto& s : samples) {
    params.push_back(s.params);
    aoas.push_back(s.aoa);
  }
  return encode_inputs(model, params, aoas);
}

Eigen::MatrixXd encode_targets(const std::vector<LabeledSample>& samples) {
  Eigen::MatrixXd t(2, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    t(0, static_cast<Eigen::Index>(i)) = samples[i].coeffs.cd;
    t(1, static_cast<Eigen::Index>(i)) = samples[i].coeffs.cl;
  }
  return t;
}

Eigen::MatrixXd predict(const SurrogateModel& model, const Eigen::MatrixXd& inputs) {
  check_inputs(model, inputs);
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < model.norms.size(); ++l) {
    const BatchNormLayer& bn = model.norms[l];
    Eigen::MatrixXd z = model.dense[l].weight * a;
    z.colwise() += model.dense[l].bias - bn.running_mean;
    const Eigen::VectorXd scale = bn.gamma.array() * (bn.running_var.array() + model.bn_epsilon).rsqrt();
    z = scale.asDiagonal() * z;
    z.colwise() += bn.beta;
    a = z.array().tanh().matrix();
  }
  Eigen::MatrixXd logits = model.dense.back().weight * a;
  logits.colwise() += model.dense.back().bias;
  return apply_head(logits);
}

Eigen::MatrixXd forward_train(SurrogateModel& model, const Eigen::MatrixXd& inputs) {
  Trace t = trace_train(model, inputs);
  update_running_stats(model, t.moments, inputs.cols());
  return apply_head(t.logits);
}

HydroCoeffs forward(SurrogateModel& model, const CageParams& params, AngleOfAttack alpha, Mode mode) {
  const Eigen::MatrixXd x = encode_inputs(model, {params}, {alpha});
  const Eigen::MatrixXd y = mode == Mode::Infer ? predict(model, x) : forward_train(model, x);
  return {y(0, 0), y(1, 0)};
}

HydroCoeffs forward(const SurrogateModel& model, const CageParams& params, AngleOfAttack alpha) {
  const Eigen::MatrixXd y = predict(model, encode_inputs(model, {params}, {alpha}));
  return {y(0, 0), y(1, 0)};
}

double batch_loss(const SurrogateModel& model, const Batch& batch, std::array<double, 2> loss_weights) {
  const Trace t = trace_train(model, batch.inputs);
  return weighted_mse(apply_head(t.logits), batch.targets, loss_weights);
}

BackwardResult backward(const SurrogateModel& model, const Batch& batch, std::array<double, 2> loss_weights) {
  if (batch.targets.rows() != 2 || batch.targets.cols() != batch.inputs.cols()) {
    throw InvalidArgument("backward: targets must be 2 x batch");
  }
  Trace t = trace_train(model, batch.inputs);
  const Eigen::MatrixXd pred = apply_head(t.logits);
  const double n = static_cast<double>(batch.inputs.cols());

  BackwardResult out;
  out.loss = weighted_mse(pred, batch.targets, loss_weights);

  Eigen::MatrixXd grad = pred - batch.targets;
  grad.row(0) *= loss_weights[0] / n;
  grad.row(1) *= loss_weights[1] / n;
  for (Eigen::Index c = 0; c < grad.cols(); ++c) grad(0, c) *= sigmoid(t.logits(0, c));

  const std::size_t hidden = model.norms.size();
  out.grads.dense.resize(hidden + 1);
  out.grads.norms.resize(hidden);

  out.grads.dense[hidden].weight = grad * t.activations[hidden].transpose();
  out.grads.dense[hidden].bias = grad.rowwise().sum();
  Eigen::MatrixXd upstream = model.dense[hidden].weight.transpose() * grad;

  for (std::size_t l = hidden; l-- > 0;) {
    const Eigen::MatrixXd& a = t.activations[l + 1];
    const Eigen::MatrixXd& xhat = t.normalized[l];
    const Eigen::MatrixXd dy = upstream.array() * (1.0 - a.array().square());

    out.grads.norms[l].gamma = (dy.array() * xhat.array()).rowwise().sum();
    out.grads.norms[l].beta = dy.rowwise().sum();

    const Eigen::MatrixXd dxhat = model.norms[l].gamma.asDiagonal() * dy;
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * xhat.array()).rowwise().sum();
    Eigen::MatrixXd dz = n * dxhat;
    dz.colwise() -= sum_dxhat;
    dz -= sum_dxhat_xhat.asDiagonal() * xhat;
    dz = (t.inv_std[l] / n).asDiagonal() * dz;

    out.grads.dense[l].weight = dz * t.activations[l].transpose();
    out.grads.dense[l].bias = dz.rowwise().sum();
    if (l > 0) upstream = model.dense[l].weight.transpose() * dz;
  }
  out.moments = std::move(t.moments);
  return out;
}

void update_running_stats(SurrogateModel& model, const std::vector<BatchMoments>& moments, Eigen::Index batch_size) {
  const double m = model.momentum;
  const double unbias = static_cast<double>(batch_size) / static_cast<double>(batch_size - 1);
  for (std::size_t l = 0; l < model.norms.size(); ++l) {
    auto& bn = model.norms[l];
    bn.running_mean = (1.0 - m) * bn.running_mean + m * moments[l].mean;
    bn.running_var = (1.0 - m) * bn.running_var + (m * unbias) * moments[l].variance;
  }
}

namespace {

template <typename Dense, typename Norms, typename Visitor>
void visit_blocks(Dense& dense, Norms& norms, Visitor&& visit) {
  for (auto& d : dense) {
    visit(d.weight.data(), d.weight.size());
    visit(d.bias.data(), d.bias.size());
  }
  for (auto& bn : norms) {
    visit(bn.gamma.data(), bn.gamma.size());
    visit(bn.beta.data(), bn.beta.size());
  }
}

}  // namespace

Eigen::VectorXd flatten_parameters(const SurrogateModel& model) {
  Eigen::VectorXd flat(model.parameter_count());
  Eigen::Index pos = 0;
  visit_blocks(model.dense, model.norms, [&](const double* data, Eigen::Index size) {
    flat.segment(pos, size) = Eigen::Map<const Eigen::VectorXd>(data, size);
    pos += size;
  });
  return flat;
}

void assign_parameters(SurrogateModel& model, const Eigen::VectorXd& flat) {
  if (flat.size() != model.parameter_count()) throw InvalidArgument("assign_parameters: size mismatch");
  Eigen::Index pos = 0;
  visit_blocks(model.dense, model.norms, [&](double* data, Eigen::Index size) {
    Eigen::Map<Eigen::VectorXd>(data, size) = flat.segment(pos, size);
    pos += size;
  });
}

Eigen::VectorXd flatten(const Gradients& grads) {
  Eigen::Index total = 0;
  for (const auto& d : grads.dense) total += d.weight.size() + d.bias.size();
  for (const auto& bn : grads.norms) total += bn.gamma.size() + bn.beta.size();
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  visit_blocks(grads.dense, grads.norms, [&](const double* data, Eigen::Index size) {
    flat.segment(pos, size) = Eigen::Map<const Eigen::VectorXd>(data, size);
    pos += size;
  });
  return flat;
}

AdamState make_adam(Eigen::Index size, double beta1, double beta2, double epsilon) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.m = Eigen::VectorXd::Zero(size);
  s.v = Eigen::VectorXd::Zero(size);
  return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != grads.size()) {
    throw InvalidArgument("adam_step: state, parameter and gradient sizes differ");
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.epsilon);
}

}  // namespace glider
