#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "glider/errors.hpp"
#include "glider/optimizer.hpp"

namespace glider {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - top).exp().matrix();
  return w / w.sum();
}

CageParams hull_to_params(const HullCoordinates& coords, const BaseShapeFamily& family) {
  if (static_cast<std::size_t>(coords.logits.size()) != family.size()) {
    throw InvalidArgument("hull_to_params: expected " + std::to_string(family.size()) + " logits");
  }
  const Eigen::VectorXd w = coords.weights();
  Eigen::VectorXd params = Eigen::VectorXd::Zero(family.shapes.front().params.offsets.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    params += w[static_cast<Eigen::Index>(i)] * family.shapes[i].params.offsets;
  }
  return CageParams(std::move(params));
}

CoefficientModel surrogate_predictor(SurrogateModel model) {
  return [model = std::move(model)](const std::vector<CageParams>& params, AngleOfAttack alpha) {
    const std::vector<AngleOfAttack> aoas(params.size(), alpha);
    const Eigen::MatrixXd y = predict(model, encode_inputs(model, params, aoas));
    std::vector<HydroCoeffs> out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      out[i] = {y(0, static_cast<Eigen::Index>(i)), y(1, static_cast<Eigen::Index>(i))};
    }
    return out;
  };
}

HydroCoeffs oracle_recheck(const CageParams& params, AngleOfAttack alpha, const BaseShapeFamily& family,
                           const FlowConditions& flow) {
  return oracle_coefficients(mesh_features(deform(family.cage, params, family.base)), alpha, flow);
}

CoefficientModel oracle_predictor(const BaseShapeFamily& family, FlowConditions flow) {
  return [&family, flow](const std::vector<CageParams>& params, AngleOfAttack alpha) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<HydroCoeffs> out;
    out.reserve(params.size());
    for (const auto& p : params) {
      try {
        out.push_back(oracle_recheck(p, alpha, family, flow));
      } catch (const DegenerateShape&) {
        out.push_back({nan, nan});
      } catch (const InvalidGeometry&) {
        out.push_back({nan, nan});
      }
    }
    return out;
  };
}

double directed_efficiency(const HydroCoeffs& c, AngleOfAttack alpha) {
  const double eta = efficiency(c);
  return alpha.deg() < 0.0 ? -eta : eta;
}

namespace {

double objective_value(const HydroCoeffs& c, AngleOfAttack alpha) {
  if (!std::isfinite(c.cd) || !std::isfinite(c.cl) || !(c.cd > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return -directed_efficiency(c, alpha);
}

}  // namespace

DesignResult optimize_design(AngleOfAttack alpha, const CoefficientModel& model, const BaseShapeFamily& family,
                             const OptimizeSettings& settings) {
  if (settings.restarts < 1) throw InvalidArgument("optimize_design: restarts must be >= 1");
  if (family.size() < 2) throw InvalidArgument("optimize_design: family needs at least two shapes");
  const auto n = static_cast<Eigen::Index>(family.size());

  BatchObjective objective = [&](const std::vector<Eigen::VectorXd>& logits) {
    std::vector<CageParams> designs;
    designs.reserve(logits.size());
    for (const auto& z : logits) designs.push_back(hull_to_params({z}, family));
    const std::vector<HydroCoeffs> coeffs = model(designs, alpha);
    std::vector<double> values;
    values.reserve(coeffs.size());
    for (const auto& c : coeffs) values.push_back(objective_value(c, alpha));
    return values;
  };

  std::mt19937_64 start_rng(settings.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DesignResult best;
  best.aoa_deg = alpha.deg();
  double best_f = std::numeric_limits<double>::infinity();
  long evaluations = 0;
  for (int r = 0; r < settings.restarts; ++r) {
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n);
    if (r > 0) {
      for (Eigen::Index i = 0; i < n; ++i) z0[i] = gauss(start_rng);
    }
    CmaOptions options;
    options.budget = settings.budget_per_restart;
    options.seed = settings.seed + 1000003ULL * static_cast<std::uint64_t>(r);
    const CmaResult run = cma_minimize(objective, z0, settings.sigma0, options);
    evaluations += run.evaluations;
    if (run.f < best_f) {
      best_f = run.f;
      best.restart = r;
      best.hull_weights = softmax(run.x);
      best.params = hull_to_params({run.x}, family);
    }
  }
  if (!std::isfinite(best_f)) {
    throw OptimizationFailed("optimize_design: no restart produced a finite objective at " +
                             std::to_string(alpha.deg()) + " deg (" + std::to_string(settings.restarts) +
                             " restarts, " + std::to_string(evaluations) + " evaluations)");
  }
  best.evaluations = evaluations;
  best.predicted = model({best.params}, alpha).front();
  best.predicted_eta = efficiency(best.predicted);
  try {
    best.oracle = oracle_recheck(best.params, alpha, family, settings.flow);
    best.oracle_eta = efficiency(best.oracle);
  } catch (const std::exception& err) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    best.oracle = {nan, nan};
    best.oracle_eta = nan;
    best.error = std::string("oracle recheck failed: ") + err.what();
  }
  best.eta_gap = std::abs(best.predicted_eta - best.oracle_eta);
  best.ok = true;
  return best;
}

std::vector<DesignResult> sweep_aoa(const std::vector<AngleOfAttack>& aoas, const CoefficientModel& model,
                                    const BaseShapeFamily& family, const OptimizeSettings& settings) {
  if (aoas.empty()) throw InvalidArgument("sweep_aoa: empty angle list");
  std::vector<DesignResult> out;
  for (std::size_t i = 0; i < aoas.size(); ++i) {
    OptimizeSettings local = settings;
    local.seed = settings.seed + i;
    try {
      out.push_back(optimize_design(aoas[i], model, family, local));
    } catch (const std::exception& err) {
      DesignResult failed;
      failed.aoa_deg = aoas[i].deg();
      failed.error = err.what();
      out.push_back(std::move(failed));
    }
  }
  return out;
}

}  // namespace glider
