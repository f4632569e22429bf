#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "glider/errors.hpp"
#include "glider/surrogate.hpp"

namespace glider {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("train: learning rate must be positive");
  if (batch_size < 2) throw InvalidArgument("train: batch size must be >= 2 for batch normalization");
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (warmup_epochs < 0) throw InvalidArgument("train: warm-up epochs must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw InvalidArgument("train: invalid Adam constants");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("train: validation fraction must lie in [0, 1)");
  }
  for (int w : hidden) {
    if (w < 1) throw InvalidArgument("train: hidden widths must be positive");
  }
}

double scheduled_lr(const TrainConfig& config, long step, long steps_per_epoch) {
  // Runs shorter than the warm-up ramp for the whole run.
  const long warmup = static_cast<long>(std::min(config.warmup_epochs, config.epochs)) * steps_per_epoch;
  const long total = static_cast<long>(config.epochs) * steps_per_epoch;
  if (step < warmup) return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const long span = std::max(1L, total - warmup);
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / static_cast<double>(span));
  return config.learning_rate * 0.5 * (1.0 + std::cos(kPi * progress));
}

std::array<double, 2> relative_errors(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& targets) {
  std::array<double, 2> out{};
  for (Eigen::Index r = 0; r < 2; ++r) {
    const double denom = targets.row(r).squaredNorm();
    const double num = (predicted.row(r) - targets.row(r)).squaredNorm();
    out[static_cast<std::size_t>(r)] = denom > 0.0 ? std::sqrt(num / denom) : std::sqrt(num);
  }
  return out;
}

namespace {

double mse(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& targets) {
  return (predicted - targets).squaredNorm() / static_cast<double>(predicted.size());
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  std::vector<LabeledSample> fit = train_rows(data);
  const std::vector<LabeledSample> test = test_rows(data);
  if (fit.empty() || test.empty()) throw InvalidArgument("train: dataset needs non-empty train and test splits");

  std::vector<LabeledSample> validation;
  if (config.validation_fraction > 0.0) {
    SplitResult carve = split(fit, config.validation_fraction, config.seed ^ 0x5eed5eedULL);
    fit = std::move(carve.train);
    validation = std::move(carve.test);
  } else {
    validation = fit;
  }
  if (fit.size() < 2) throw InvalidArgument("train: need at least two training rows");

  SurrogateModel model = make_model(data.meta.normalization, config.hidden, config.seed);
  const Eigen::MatrixXd x_fit = encode_inputs(model, fit);
  const Eigen::MatrixXd y_fit = encode_targets(fit);
  const Eigen::MatrixXd x_val = encode_inputs(model, validation);
  const Eigen::MatrixXd y_val = encode_targets(validation);

  TrainResult result;
  TrainReport& report = result.report;
  report.learning_rate = config.learning_rate;
  report.initial_train_mse = mse(predict(model, x_fit), y_fit);

  const auto n = static_cast<long>(fit.size());
  long batches = (n + config.batch_size - 1) / config.batch_size;
  if (n % config.batch_size == 1) --batches;  // a lone trailing sample has no batch variance

  std::mt19937_64 rng(config.seed + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Eigen::VectorXd params = flatten_parameters(model);
  AdamState adam = make_adam(params.size(), config.beta1, config.beta2, config.epsilon);
  SurrogateModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  long step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (long b = 0; b < batches; ++b) {
      const auto begin = static_cast<std::ptrdiff_t>(b * config.batch_size);
      const auto end = static_cast<std::ptrdiff_t>(std::min<long>(n, (b + 1) * config.batch_size));
      const std::vector<Eigen::Index> idx(order.begin() + begin, order.begin() + end);
      const Batch batch{x_fit(Eigen::all, idx), y_fit(Eigen::all, idx)};

      BackwardResult pass = backward(model, batch);
      if (!std::isfinite(pass.loss)) {
        throw DivergenceError("train: loss became non-finite in epoch " + std::to_string(epoch), epoch);
      }
      loss_sum += pass.loss;
      adam_step(adam, params, flatten(pass.grads), scheduled_lr(config, step, batches));
      assign_parameters(model, params);
      update_running_stats(model, pass.moments, batch.inputs.cols());
      ++step;
    }
    // batch_loss halves the squared error sum over both targets, which equals the per-element MSE.
    report.epoch_train_mse.push_back(loss_sum / static_cast<double>(batches));
    const double val = mse(predict(model, x_val), y_val);
    if (!std::isfinite(val)) {
      throw DivergenceError("train: validation loss became non-finite in epoch " + std::to_string(epoch), epoch);
    }
    report.epoch_val_mse.push_back(val);
    if (val <= best_val) {
      best_val = val;
      best = model;
      report.best_epoch = epoch;
    }
  }

  result.model = std::move(best);
  report.final_train_mse = mse(predict(result.model, x_fit), y_fit);
  const Eigen::MatrixXd y_test = encode_targets(test);
  const Eigen::MatrixXd p_test = predict(result.model, encode_inputs(result.model, test));
  report.test_mse = mse(p_test, y_test);
  const auto rel = relative_errors(p_test, y_test);
  report.cd_relative_error = rel[0];
  report.cl_relative_error = rel[1];
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace glider
