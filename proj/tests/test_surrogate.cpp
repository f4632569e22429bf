#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "glider/errors.hpp"
#include "glider/surrogate.hpp"

using namespace glider;

namespace {

constexpr int kDim = 6;

InputNormalization toy_normalization() {
  InputNormalization n;
  n.mean = Eigen::VectorXd::LinSpaced(kDim, -0.02, 0.03);
  n.scale = Eigen::VectorXd::LinSpaced(kDim, 0.01, 0.05);
  return n;
}

// Non-trivial batch-norm affine parameters and running statistics so every
// path of the network is exercised.
SurrogateModel toy_model(std::uint64_t seed, const std::vector<int>& hidden = {7, 6, 5}) {
  SurrogateModel m = make_model(toy_normalization(), hidden, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& bn : m.norms) {
    for (Eigen::Index i = 0; i < bn.gamma.size(); ++i) {
      bn.gamma(i) = 1.0 + u(rng);
      bn.beta(i) = u(rng);
      bn.running_mean(i) = 0.3 * u(rng);
      bn.running_var(i) = 0.5 + u(rng);
    }
  }
  return m;
}

Batch toy_batch(std::uint64_t seed, Eigen::Index n = 16) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b{Eigen::MatrixXd(kDim + 1, n), Eigen::MatrixXd(2, n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r <= kDim; ++r) b.inputs(r, c) = g(rng);
    b.targets(0, c) = 0.2 + 0.05 * g(rng);
    b.targets(1, c) = 0.5 * g(rng);
  }
  return b;
}

// Inference by explicit loops over neurons, independent of the Eigen path.
std::array<double, 2> forward_by_hand(const SurrogateModel& m, const std::vector<double>& raw_params, double aoa_deg) {
  std::vector<double> a;
  for (std::size_t i = 0; i < raw_params.size(); ++i) {
    a.push_back((raw_params[i] - m.input.mean(static_cast<Eigen::Index>(i))) / m.input.scale(static_cast<Eigen::Index>(i)));
  }
  a.push_back(aoa_deg / 30.0);
  for (std::size_t l = 0; l < m.dense.size(); ++l) {
    const auto& W = m.dense[l].weight;
    std::vector<double> z(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double s = m.dense[l].bias(r);
      for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * a[static_cast<std::size_t>(c)];
      if (l + 1 < m.dense.size()) {
        const auto& bn = m.norms[l];
        s = (s - bn.running_mean(r)) / std::sqrt(bn.running_var(r) + m.bn_epsilon) * bn.gamma(r) + bn.beta(r);
        s = std::tanh(s);
      }
      z[static_cast<std::size_t>(r)] = s;
    }
    a = z;
  }
  return {std::log(1.0 + std::exp(a[0])), a[1]};
}

Dataset small_dataset() {
  GeometrySettings g;
  g.subdivisions = 2;
  const BaseShapeFamily fam = make_base_family(0, 5, g);
  return make_dataset(fam, 3, default_aoas(), FlowConditions{}, 0.25, 1);
}

}  // namespace

TEST(Forward, MatchesHandTranscription) {
  const SurrogateModel m = toy_model(5);
  const std::vector<double> raw = {0.01, -0.03, 0.02, 0.0, 0.05, -0.01};
  Eigen::VectorXd p(kDim);
  for (int i = 0; i < kDim; ++i) p(i) = raw[static_cast<std::size_t>(i)];
  for (double aoa : {-30.0, 0.0, 9.0, 21.0}) {
    const HydroCoeffs c = forward(m, CageParams(p), AngleOfAttack::degrees(aoa));
    const auto ref = forward_by_hand(m, raw, aoa);
    EXPECT_NEAR(c.cd, ref[0], 1e-13);
    EXPECT_NEAR(c.cl, ref[1], 1e-13);
  }
}

TEST(Forward, ZeroOutputLayerGivesConstant) {
  SurrogateModel m = toy_model(6);
  m.dense.back().weight.setZero();
  m.dense.back().bias.setZero();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd p(kDim);
    for (int k = 0; k < kDim; ++k) p(k) = g(rng);
    const HydroCoeffs c = forward(m, CageParams(p), AngleOfAttack::degrees(3.0 * i));
    EXPECT_DOUBLE_EQ(c.cd, std::log(2.0));
    EXPECT_EQ(c.cl, 0.0);
  }
}

TEST(Forward, InferenceIsPure) {
  const SurrogateModel m = toy_model(7);
  const Batch b = toy_batch(1);
  const Eigen::MatrixXd first = predict(m, b.inputs);
  EXPECT_EQ(predict(m, b.inputs), first);
  // Column j of a batched prediction equals the prediction of column j alone
  // up to summation order.
  EXPECT_LT((predict(m, b.inputs.col(3)) - first.col(3)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Forward, Errors) {
  SurrogateModel m = toy_model(8);
  EXPECT_THROW(forward(m, CageParams(Eigen::VectorXd::Zero(kDim + 1)), AngleOfAttack::degrees(0.0)), InvalidArgument);
  EXPECT_THROW(forward(m, CageParams(Eigen::VectorXd::Zero(kDim)), AngleOfAttack::degrees(0.0), Mode::Train),
               InvalidArgument);
  const Batch one = toy_batch(2, 1);
  EXPECT_THROW(backward(m, one), InvalidArgument);
}

TEST(Backward, MatchesCentralDifferences) {
  const double h = 1e-4;
  for (std::uint64_t init = 0; init < 3; ++init) {
    const SurrogateModel m = toy_model(init);
    const Batch b = toy_batch(init + 10);
    const Eigen::VectorXd analytic = flatten(backward(m, b).grads);
    Eigen::VectorXd theta = flatten_parameters(m);
    SurrogateModel probe = m;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta(i);
      theta(i) = saved + h;
      assign_parameters(probe, theta);
      const double up = batch_loss(probe, b);
      theta(i) = saved - h;
      assign_parameters(probe, theta);
      const double down = batch_loss(probe, b);
      theta(i) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(numeric), std::abs(analytic(i)), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic(i)) / scale);
    }
    EXPECT_LT(worst, 1e-4) << "init " << init;
  }
}

TEST(Backward, MaskedOutputHasZeroGradient) {
  const SurrogateModel m = toy_model(3);
  const Batch b = toy_batch(4);
  const BackwardResult r = backward(m, b, {1.0, 0.0});
  EXPECT_EQ(r.grads.dense.back().weight.row(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.grads.dense.back().bias(1), 0.0);
  EXPECT_GT(r.grads.dense.back().weight.row(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, LossScaleIsLinear) {
  const SurrogateModel m = toy_model(4);
  const Batch b = toy_batch(5);
  const BackwardResult one = backward(m, b);
  const BackwardResult two = backward(m, b, {2.0, 2.0});
  EXPECT_NEAR(two.loss, 2.0 * one.loss, 1e-15);
  EXPECT_LT((flatten(two.grads) - 2.0 * flatten(one.grads)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backward, BatchOrderDoesNotMatter) {
  const SurrogateModel m = toy_model(9);
  const Batch b = toy_batch(6);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(b.inputs.cols()));
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<Eigen::Index>((i * 7 + 3) % perm.size());
  const Batch shuffled{b.inputs(Eigen::all, perm), b.targets(Eigen::all, perm)};
  const BackwardResult a = backward(m, b);
  const BackwardResult c = backward(m, shuffled);
  EXPECT_NEAR(a.loss, c.loss, 1e-14);
  EXPECT_LT((flatten(a.grads) - flatten(c.grads)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BatchNorm, RunningStatsConvergeToTrainMode) {
  SurrogateModel m = toy_model(10);
  // Running variance is unbiased, so the batch is large enough for n/(n-1) to vanish.
  const Batch fixed = toy_batch(7, 512);
  for (int i = 0; i < 200; ++i) forward_train(m, fixed.inputs);
  for (const auto& bn : m.norms) EXPECT_GE(bn.running_var.minCoeff(), 0.0);
  SurrogateModel probe = m;
  const Eigen::MatrixXd train_out = forward_train(probe, fixed.inputs);
  const Eigen::MatrixXd infer_out = predict(m, fixed.inputs);
  const double rms = std::sqrt((train_out - infer_out).squaredNorm() / static_cast<double>(train_out.size()));
  EXPECT_LT(rms, 1e-3);
}

TEST(Adam, HandEvaluatedFirstStep) {
  AdamState s = make_adam(1);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2.0);
  adam_step(s, x, Eigen::VectorXd::Constant(1, 1.0), 0.1);
  // m = 0.1, v = 0.001, bias-corrected m_hat = v_hat = 1.
  const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
  EXPECT_NEAR(x(0), 2.0 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
  EXPECT_NEAR(x(0), 2.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientFromFreshState) {
  AdamState s = make_adam(4);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const Eigen::VectorXd before = x;
  adam_step(s, x, Eigen::VectorXd::Zero(4), 0.1);
  EXPECT_EQ(x, before);
}

TEST(Adam, StepOpposesFirstMoment) {
  AdamState s = make_adam(3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd grad(3);
    for (int i = 0; i < 3; ++i) grad(i) = g(rng);
    const Eigen::VectorXd before = x;
    adam_step(s, x, grad, 0.01);
    for (int i = 0; i < 3; ++i) {
      if (s.m(i) != 0.0) {
        EXPECT_LT((x(i) - before(i)) * s.m(i), 0.0);
      }
    }
  }
  EXPECT_THROW(adam_step(s, x, Eigen::VectorXd::Zero(2), 0.1), InvalidArgument);
}

TEST(Schedule, WarmupThenCosine) {
  TrainConfig c;
  c.epochs = 20;
  c.warmup_epochs = 10;
  const long per_epoch = 4;
  EXPECT_DOUBLE_EQ(scheduled_lr(c, 0, per_epoch), 0.1 / 40.0);
  EXPECT_DOUBLE_EQ(scheduled_lr(c, 39, per_epoch), 0.1);
  EXPECT_DOUBLE_EQ(scheduled_lr(c, 40, per_epoch), 0.1);
  EXPECT_NEAR(scheduled_lr(c, 60, per_epoch), 0.05, 1e-15);
  for (long s = 41; s < 80; ++s) EXPECT_LT(scheduled_lr(c, s, per_epoch), scheduled_lr(c, s - 1, per_epoch));
  c.epochs = 1;
  EXPECT_DOUBLE_EQ(scheduled_lr(c, 3, per_epoch), 0.1);
}

TEST(Train, ConstantLabelsAreLearned) {
  // Many small steps so batch-norm running statistics settle.
  GeometrySettings g;
  g.subdivisions = 2;
  Dataset data = make_dataset(make_base_family(0, 8, g), 4, default_aoas(), FlowConditions{}, 0.25, 1);
  for (auto& s : data.samples) s.coeffs = {0.3, 0.7};
  TrainConfig c;
  c.epochs = 50;
  c.warmup_epochs = 5;
  c.batch_size = 4;
  c.learning_rate = 0.2;
  c.hidden = {16, 16, 16};
  c.seed = 3;
  const TrainResult r = train(data, c);
  EXPECT_EQ(r.report.epoch_train_mse.size(), 50u);
  EXPECT_LT(r.report.final_train_mse, 1e-6);
  EXPECT_LT(r.report.final_train_mse, r.report.initial_train_mse);
}

TEST(Train, SameSeedSameWeights) {
  const Dataset data = small_dataset();
  TrainConfig c;
  c.epochs = 3;
  c.warmup_epochs = 1;
  c.batch_size = 16;
  c.hidden = {12, 10, 8};
  c.seed = 5;
  const TrainResult a = train(data, c);
  const TrainResult b = train(data, c);
  EXPECT_EQ(flatten_parameters(a.model), flatten_parameters(b.model));
  EXPECT_EQ(a.report.epoch_train_mse, b.report.epoch_train_mse);
  c.seed = 6;
  EXPECT_NE(flatten_parameters(train(data, c).model), flatten_parameters(a.model));
}

TEST(Train, RejectsInvalidConfig) {
  const Dataset data = small_dataset();
  TrainConfig c;
  c.batch_size = 1;
  EXPECT_THROW(train(data, c), InvalidArgument);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(train(data, c), InvalidArgument);
}

TEST(Train, NonFiniteLossReportsEpoch) {
  Dataset data = small_dataset();
  for (auto& s : data.samples) s.coeffs.cl *= 1e200;
  TrainConfig c;
  c.epochs = 5;
  c.batch_size = 16;
  c.hidden = {8, 8, 8};
  try {
    train(data, c);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& err) {
    EXPECT_GE(err.epoch, 0);
    EXPECT_LT(err.epoch, 5);
  }
}

TEST(RelativeErrors, Definition) {
  Eigen::MatrixXd t(2, 2), p(2, 2);
  t << 1.0, 1.0, 3.0, 4.0;
  p << 1.0, 1.0, 3.0, 4.5;
  const auto e = relative_errors(p, t);
  EXPECT_EQ(e[0], 0.0);
  EXPECT_NEAR(e[1], 0.5 / 5.0, 1e-15);
}

TEST(Checkpoint, RoundTripAndShapeValidation) {
  Checkpoint cp{toy_model(11), TrainConfig{}, "abc123"};
  cp.config.epochs = 7;
  const auto dir = std::filesystem::temp_directory_path() / "glider_surrogate_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  save_checkpoint(cp, path);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(flatten_parameters(back.model), flatten_parameters(cp.model));
  for (std::size_t l = 0; l < cp.model.norms.size(); ++l) {
    EXPECT_EQ(back.model.norms[l].running_var, cp.model.norms[l].running_var);
  }
  EXPECT_EQ(back.config.epochs, 7);
  EXPECT_EQ(back.dataset_fingerprint, "abc123");

  nlohmann::json j;
  std::ifstream(path) >> j;
  j["layers"][1]["bias"].erase(0);
  std::ofstream(dir / "bad.json") << j.dump();
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), InvalidArgument);

  std::ofstream(dir / "truncated.json") << "{\"format\": ";
  EXPECT_THROW(load_checkpoint(dir / "truncated.json"), ParseError);
}
