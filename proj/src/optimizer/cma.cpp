#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "glider/errors.hpp"
#include "glider/optimizer.hpp"

namespace glider {

int default_population(Eigen::Index dimension) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

CmaResult cma_minimize(const BatchObjective& objective, const Eigen::VectorXd& x0, double sigma0,
                       const CmaOptions& options) {
  const Eigen::Index n = x0.size();
  if (n < 1) throw InvalidArgument("cma_minimize: empty start vector");
  if (!(sigma0 > 0.0)) throw InvalidArgument("cma_minimize: sigma0 must be positive");
  const int lambda = options.population > 0 ? options.population : default_population(n);
  if (options.budget < lambda) throw InvalidArgument("cma_minimize: budget is smaller than the population");

  // Strategy constants (Hansen's defaults).
  const int mu = lambda / 2;
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights[i] = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();
  const double dn = static_cast<double>(n);
  const double c_sigma = (mu_eff + 2.0) / (dn + mu_eff + 5.0);
  const double d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (dn + 1.0)) - 1.0) + c_sigma;
  const double c_c = (4.0 + mu_eff / dn) / (dn + 4.0 + 2.0 * mu_eff / dn);
  const double c_1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff);
  const double c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((dn + 2.0) * (dn + 2.0) + mu_eff));
  const double chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  Eigen::VectorXd mean = x0;
  double sigma = sigma0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd axis_len = Eigen::VectorXd::Ones(n);  // sqrt of eigenvalues
  Eigen::VectorXd eigenvalues = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p_c = Eigen::VectorXd::Zero(n);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  CmaResult result;
  result.x = x0;
  result.f = std::numeric_limits<double>::infinity();
  std::vector<double> generation_bests;

  std::vector<Eigen::VectorXd> candidates(static_cast<std::size_t>(lambda));
  std::vector<Eigen::VectorXd> steps(static_cast<std::size_t>(lambda));

  for (int gen = 0;; ++gen) {
    if (result.evaluations + lambda > options.budget) {
      result.stop_reason = "budget";
      break;
    }
    for (int k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);
      steps[k] = basis * axis_len.cwiseProduct(z);
      if (gen == 0 && k == 0) steps[k].setZero();
      candidates[k] = mean + sigma * steps[k];
    }
    std::vector<double> values = objective(candidates);
    if (values.size() != candidates.size()) throw InvalidArgument("cma_minimize: objective returned wrong count");
    for (double& v : values) {
      if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    }
    result.evaluations += lambda;

    std::vector<int> rank(static_cast<std::size_t>(lambda));
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) { return values[a] < values[b]; });
    if (values[rank[0]] < result.f) {
      result.f = values[rank[0]];
      result.x = candidates[rank[0]];
    }
    generation_bests.push_back(values[rank[0]]);

    // Recombination and evolution paths.
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < mu; ++i) y_w += weights[i] * steps[rank[i]];
    mean += sigma * y_w;

    const Eigen::VectorXd inv_sqrt_y =
        basis * (basis.transpose() * y_w).cwiseQuotient(axis_len);  // C^{-1/2} y_w
    p_sigma = (1.0 - c_sigma) * p_sigma + std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * inv_sqrt_y;
    const double ps_norm = p_sigma.norm();
    const double decay = 1.0 - std::pow(1.0 - c_sigma, 2.0 * (gen + 1));
    const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (dn + 1.0)) * chi_n;
    p_c = (1.0 - c_c) * p_c + (h_sigma ? std::sqrt(c_c * (2.0 - c_c) * mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) rank_mu += weights[i] * steps[rank[i]] * steps[rank[i]].transpose();
    const double stall = h_sigma ? 0.0 : c_c * (2.0 - c_c);
    cov = (1.0 - c_1 - c_mu) * cov + c_1 * (p_c * p_c.transpose() + stall * cov) + c_mu * rank_mu;
    cov = (0.5 * (cov + cov.transpose())).eval();  // eval: the transpose aliases cov

    sigma *= std::exp((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    eigenvalues = eig.eigenvalues();
    basis = eig.eigenvectors();
    double lo = eigenvalues.minCoeff();
    double hi = eigenvalues.maxCoeff();
    if (lo <= 0.0 || hi > options.max_condition * lo) {
      const double shift = (hi - options.max_condition * lo) / (options.max_condition - 1.0);
      cov += std::max(shift, std::numeric_limits<double>::min()) * Eigen::MatrixXd::Identity(n, n);
      eigenvalues.array() += std::max(shift, std::numeric_limits<double>::min());
      lo = eigenvalues.minCoeff();
      hi = eigenvalues.maxCoeff();
    }
    axis_len = eigenvalues.cwiseSqrt();

    CmaGeneration record;
    record.generation = gen;
    record.evaluations = result.evaluations;
    record.generation_best = values[rank[0]];
    record.best_ever = result.f;
    record.sigma = sigma;
    record.min_eigenvalue = lo;
    record.max_eigenvalue = hi;
    record.symmetric = cov == cov.transpose();
    result.history.push_back(record);

    const auto window = static_cast<std::size_t>(options.ftol_generations);
    if (generation_bests.size() >= window) {
      const auto first = generation_bests.end() - static_cast<std::ptrdiff_t>(window);
      const auto [mn, mx] = std::minmax_element(first, generation_bests.end());
      if (std::isfinite(*mn) && std::isfinite(*mx) && *mx - *mn < options.ftol) {
        result.stop_reason = "ftol";
        break;
      }
    }
    const double scale = std::max(1.0, mean.cwiseAbs().maxCoeff());
    if (!(sigma * std::sqrt(hi) > 1e-15 * scale)) {
      result.stop_reason = "sigma";
      break;
    }
  }
  return result;
}

CmaResult cma_minimize(const Objective& objective, const Eigen::VectorXd& x0, double sigma0,
                       const CmaOptions& options) {
  BatchObjective batch = [&](const std::vector<Eigen::VectorXd>& xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(objective(x));
    return out;
  };
  return cma_minimize(batch, x0, sigma0, options);
}

}  // namespace glider
