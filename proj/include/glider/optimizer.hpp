#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "glider/dataset.hpp"
#include "glider/hydro.hpp"
#include "glider/surrogate.hpp"

namespace glider {

// ---------------------------------------------------------------------------
// CMA-ES
// ---------------------------------------------------------------------------

using Objective = std::function<double(const Eigen::VectorXd&)>;
// Evaluates one generation at once; must return one value per candidate.
using BatchObjective = std::function<std::vector<double>(const std::vector<Eigen::VectorXd>&)>;

struct CmaOptions {
  long budget = 3000;       // objective evaluations
  double ftol = 1e-10;      // range of generation-best values over `ftol_generations`
  int ftol_generations = 10;
  int population = 0;       // 0 = 4 + floor(3 ln n)
  double max_condition = 1e14;
  std::uint64_t seed = 0;
};

struct CmaGeneration {
  int generation = 0;
  long evaluations = 0;
  double generation_best = 0.0;
  double best_ever = 0.0;
  double sigma = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool symmetric = true;
};

struct CmaResult {
  Eigen::VectorXd x;
  double f = 0.0;
  long evaluations = 0;
  std::vector<CmaGeneration> history;
  std::string stop_reason;  // "budget", "ftol" or "sigma"
};

int default_population(Eigen::Index dimension);

// Minimizes with weighted recombination, cumulative step-size adaptation and
// rank-one plus rank-mu covariance updates. The first generation evaluates x0
// itself as one of its candidates, so the returned best is never worse than x0.
// NaN objective values are replaced by +inf.
CmaResult cma_minimize(const BatchObjective& objective, const Eigen::VectorXd& x0, double sigma0,
                       const CmaOptions& options);
CmaResult cma_minimize(const Objective& objective, const Eigen::VectorXd& x0, double sigma0,
                       const CmaOptions& options);

// ---------------------------------------------------------------------------
// Hull-constrained design search
// ---------------------------------------------------------------------------

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Logits over the base shapes; the design is the softmax-weighted combination.
struct HullCoordinates {
  Eigen::VectorXd logits;
  Eigen::VectorXd weights() const { return softmax(logits); }
};

CageParams hull_to_params(const HullCoordinates& coords, const BaseShapeFamily& family);

// Coefficients for a batch of designs at one angle of attack. Entries with
// non-finite values mark designs that could not be evaluated.
using CoefficientModel = std::function<std::vector<HydroCoeffs>(const std::vector<CageParams>&, AngleOfAttack)>;

CoefficientModel surrogate_predictor(SurrogateModel model);
// deform -> mesh_features -> oracle_coefficients for every design.
CoefficientModel oracle_predictor(const BaseShapeFamily& family, FlowConditions flow);

// Efficiency measured in the direction the angle commands: eta for alpha >= 0,
// -eta for alpha < 0. Mirrored angles therefore have mirrored optima.
double directed_efficiency(const HydroCoeffs& c, AngleOfAttack alpha);

struct OptimizeSettings {
  int restarts = 5;
  long budget_per_restart = 3000;
  double sigma0 = 1.0;
  std::uint64_t seed = 0;
  FlowConditions flow;  // used for the oracle recheck
};

struct DesignResult {
  double aoa_deg = 0.0;
  bool ok = false;
  std::string error;
  CageParams params;
  Eigen::VectorXd hull_weights;
  HydroCoeffs predicted;
  double predicted_eta = 0.0;
  HydroCoeffs oracle;
  double oracle_eta = 0.0;
  double eta_gap = 0.0;  // |predicted_eta - oracle_eta|
  int restart = 0;
  long evaluations = 0;
};

// Restart 0 starts from the mean shape (zero logits); later restarts from
// seeded standard-normal logits. Throws OptimizationFailed when no restart
// found a finite objective.
DesignResult optimize_design(AngleOfAttack alpha, const CoefficientModel& model, const BaseShapeFamily& family,
                             const OptimizeSettings& settings);

// One result per angle; a failing angle is recorded with ok = false and the
// sweep continues. Angle i uses seed settings.seed + i.
std::vector<DesignResult> sweep_aoa(const std::vector<AngleOfAttack>& aoas, const CoefficientModel& model,
                                    const BaseShapeFamily& family, const OptimizeSettings& settings);

// Oracle evaluation of a finished design.
HydroCoeffs oracle_recheck(const CageParams& params, AngleOfAttack alpha, const BaseShapeFamily& family,
                           const FlowConditions& flow);

}  // namespace glider
