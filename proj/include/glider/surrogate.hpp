#pragma once

// Fully connected surrogate mapping (cage offsets, angle of attack) to (cd, cl).
// Hidden layers are affine -> batch norm -> tanh; the output layer is affine
// with a softplus on the drag head so cd stays positive.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glider/dataset.hpp"
#include "glider/hydro.hpp"

namespace glider {

// Angle of attack enters the network as deg / 30 so the training range maps to [-1, 1].
inline constexpr double kAoaInputScale = 1.0 / 30.0;

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct BatchNormLayer {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
};

enum class Mode { Train, Infer };

struct SurrogateModel {
  std::vector<DenseLayer> dense;      // hidden layers followed by the output layer
  std::vector<BatchNormLayer> norms;  // one per hidden layer
  InputNormalization input;
  double momentum = 0.1;
  double bn_epsilon = 1e-5;

  Eigen::Index input_dim() const { return dense.front().weight.cols(); }
  Eigen::Index param_dim() const { return input_dim() - 1; }
  Eigen::Index parameter_count() const;
};

// PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
SurrogateModel make_model(InputNormalization input, const std::vector<int>& hidden, std::uint64_t seed);

// Network inputs, one column per sample: normalized offsets then scaled AoA.
Eigen::MatrixXd encode_inputs(const SurrogateModel& model, const std::vector<CageParams>& params,
                              const std::vector<AngleOfAttack>& aoas);
Eigen::MatrixXd encode_inputs(const SurrogateModel& model, const std::vector<LabeledSample>& samples);

// 2 x n matrix of (cd, cl) targets.
Eigen::MatrixXd encode_targets(const std::vector<LabeledSample>& samples);

// Inference with running statistics; rows are (cd, cl).
Eigen::MatrixXd predict(const SurrogateModel& model, const Eigen::MatrixXd& inputs);

// Training-mode pass: normalizes with batch statistics and folds them into the
// running statistics. Needs at least two columns.
Eigen::MatrixXd forward_train(SurrogateModel& model, const Eigen::MatrixXd& inputs);

// Single-sample convenience wrapper. Train mode on one sample is rejected since
// batch variance is undefined.
HydroCoeffs forward(SurrogateModel& model, const CageParams& params, AngleOfAttack alpha, Mode mode);
HydroCoeffs forward(const SurrogateModel& model, const CageParams& params, AngleOfAttack alpha);

struct Batch {
  Eigen::MatrixXd inputs;   // input_dim x n
  Eigen::MatrixXd targets;  // 2 x n
};

struct Gradients {
  std::vector<DenseLayer> dense;
  std::vector<BatchNormLayer> norms;  // gamma and beta only
};

struct BatchMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // biased
};

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
  std::vector<BatchMoments> moments;
};

// Weighted mean squared error 1/(2n) * sum_i sum_o w_o (pred - target)^2 in
// training mode (batch statistics), without touching running statistics.
double batch_loss(const SurrogateModel& model, const Batch& batch, std::array<double, 2> loss_weights = {1.0, 1.0});

// Exact gradients of batch_loss with respect to all weights, biases, gamma and beta.
BackwardResult backward(const SurrogateModel& model, const Batch& batch,
                        std::array<double, 2> loss_weights = {1.0, 1.0});

void update_running_stats(SurrogateModel& model, const std::vector<BatchMoments>& moments, Eigen::Index batch_size);

// Flat views in a fixed order: per dense layer weight (column-major) then bias,
// then per norm gamma then beta.
Eigen::VectorXd flatten_parameters(const SurrogateModel& model);
void assign_parameters(SurrogateModel& model, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten(const Gradients& grads);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

AdamState make_adam(Eigen::Index size, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// Bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr);

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 128;
  int warmup_epochs = 10;
  int epochs = 200;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {256, 256, 128};
  // Fraction of training shapes held back for best-epoch selection.
  double validation_fraction = 0.1;

  void validate() const;
};

// Learning rate at a global step: linear ramp over the warm-up epochs, then
// cosine decay to zero at the last step.
double scheduled_lr(const TrainConfig& config, long step, long steps_per_epoch);

struct TrainReport {
  std::vector<double> epoch_train_mse;
  std::vector<double> epoch_val_mse;
  double initial_train_mse = 0.0;
  double final_train_mse = 0.0;
  double test_mse = 0.0;
  double cd_relative_error = 0.0;  // relative L2 on the test split
  double cl_relative_error = 0.0;
  int best_epoch = 0;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  SurrogateModel model;
  TrainReport report;
};

// sqrt(sum (p - t)^2 / sum t^2) per output row.
std::array<double, 2> relative_errors(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& targets);

// Trains on the dataset's train split (minus a validation carve-out) and
// evaluates on its test split. Throws DivergenceError on a non-finite loss.
TrainResult train(const Dataset& data, const TrainConfig& config);

// Versioned JSON checkpoint; loading validates every shape.
struct Checkpoint {
  SurrogateModel model;
  TrainConfig config;
  std::string dataset_fingerprint;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace glider
