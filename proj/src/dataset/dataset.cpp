#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <thread>

#include "glider/dataset.hpp"
#include "glider/errors.hpp"

namespace glider {

std::vector<AngleOfAttack> default_aoas() {
  std::vector<AngleOfAttack> out;
  for (double deg : {-30.0, -15.0, 0.0, 15.0, 30.0}) out.push_back(AngleOfAttack::degrees(deg));
  return out;
}

namespace {

struct ShapeJob {
  CageParams params;
  Provenance provenance;
};

std::vector<ShapeJob> enumerate_shapes(const BaseShapeFamily& family, int morphs_per_pair) {
  std::vector<ShapeJob> jobs;
  const int n = static_cast<int>(family.size());
  for (int i = 0; i < n; ++i) jobs.push_back({family.shapes[i].params, Provenance::base(i)});
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int k = 1; k <= morphs_per_pair; ++k) {
        const double t = static_cast<double>(k) / (morphs_per_pair + 1);
        jobs.push_back({interpolate(family.shapes[a].params, family.shapes[b].params, t),
                        Provenance::morph(a, b, t)});
      }
    }
  }
  return jobs;
}

}  // namespace

DatasetBuild build_dataset(const BaseShapeFamily& family, int morphs_per_pair,
                           const std::vector<AngleOfAttack>& aoas, const FlowConditions& flow, unsigned workers) {
  if (morphs_per_pair < 0) throw InvalidArgument("build_dataset: morphs_per_pair must be >= 0");
  if (aoas.empty()) throw InvalidArgument("build_dataset: need at least one angle of attack");
  flow.validate();

  const std::vector<ShapeJob> jobs = enumerate_shapes(family, morphs_per_pair);
  std::vector<std::optional<MeshFeatures>> features(jobs.size());

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < jobs.size(); s += workers) {
          try {
            features[s] = mesh_features(deform(family.cage, jobs[s].params, family.base));
          } catch (const DegenerateShape&) {
          } catch (const InvalidGeometry&) {
          }
        }
      });
    }
  }

  DatasetBuild out;
  out.shape_count = jobs.size();
  for (std::size_t s = 0; s < jobs.size(); ++s) {
    if (!features[s]) {
      ++out.skipped_shapes;
      continue;
    }
    for (std::size_t a = 0; a < aoas.size(); ++a) {
      LabeledSample sample;
      sample.id = s * aoas.size() + a;
      sample.shape = s;
      sample.params = jobs[s].params;
      sample.aoa = aoas[a];
      sample.coeffs = oracle_coefficients(*features[s], aoas[a], flow);
      sample.provenance = jobs[s].provenance;
      out.samples.push_back(std::move(sample));
    }
  }
  return out;
}

SplitResult split(const std::vector<LabeledSample>& samples, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::uint64_t> shapes;
  for (const auto& s : samples) shapes.push_back(s.shape);
  std::sort(shapes.begin(), shapes.end());
  shapes.erase(std::unique(shapes.begin(), shapes.end()), shapes.end());
  if (shapes.size() < 2) throw InvalidArgument("split: need at least two distinct shapes");

  std::mt19937_64 rng(seed);
  std::shuffle(shapes.begin(), shapes.end(), rng);
  const auto total = static_cast<double>(shapes.size());
  const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(test_fraction * total)), 1,
                                              shapes.size() - 1);

  SplitResult out;
  out.test_shapes.assign(shapes.begin(), shapes.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(out.test_shapes.begin(), out.test_shapes.end());
  for (const auto& s : samples) {
    const bool held_out = std::binary_search(out.test_shapes.begin(), out.test_shapes.end(), s.shape);
    (held_out ? out.test : out.train).push_back(s);
  }
  return out;
}

Eigen::VectorXd InputNormalization::normalize(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(scale);
}

Eigen::VectorXd InputNormalization::denormalize(const Eigen::VectorXd& z) const {
  return z.cwiseProduct(scale) + mean;
}

InputNormalization fit_normalization(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw InvalidArgument("fit_normalization: no samples");
  const Eigen::Index dim = samples.front().params.offsets.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) sum += s.params.offsets;
  InputNormalization norm;
  norm.mean = sum / static_cast<double>(samples.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) var += (s.params.offsets - norm.mean).cwiseAbs2();
  var /= static_cast<double>(samples.size());
  norm.scale = var.cwiseSqrt();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(norm.scale[i] > 1e-12)) norm.scale[i] = 1.0;
  }
  return norm;
}

Dataset make_dataset(const BaseShapeFamily& family, int morphs_per_pair, const std::vector<AngleOfAttack>& aoas,
                     const FlowConditions& flow, double test_fraction, std::uint64_t split_seed,
                     unsigned workers) {
  DatasetBuild built = build_dataset(family, morphs_per_pair, aoas, flow, workers);
  SplitResult parts = split(built.samples, test_fraction, split_seed);

  Dataset data;
  data.meta.geometry = family.geometry;
  data.meta.flow = flow;
  for (const auto& a : aoas) data.meta.aoas_deg.push_back(a.deg());
  data.meta.morphs_per_pair = morphs_per_pair;
  data.meta.family_size = static_cast<int>(family.size());
  data.meta.family_seed = family.seed;
  data.meta.split_seed = split_seed;
  data.meta.test_fraction = test_fraction;
  data.meta.test_shapes = parts.test_shapes;
  data.meta.sample_count = built.samples.size();
  data.meta.skipped_shapes = built.skipped_shapes;
  data.meta.normalization = fit_normalization(parts.train);
  data.samples = std::move(built.samples);
  return data;
}

namespace {

std::vector<LabeledSample> rows_where(const Dataset& data, bool want_test) {
  std::vector<LabeledSample> out;
  const auto& held = data.meta.test_shapes;
  for (const auto& s : data.samples) {
    if (std::binary_search(held.begin(), held.end(), s.shape) == want_test) out.push_back(s);
  }
  return out;
}

}  // namespace

std::vector<LabeledSample> train_rows(const Dataset& data) { return rows_where(data, false); }
std::vector<LabeledSample> test_rows(const Dataset& data) { return rows_where(data, true); }

}  // namespace glider
