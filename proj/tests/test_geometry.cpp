#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "glider/errors.hpp"
#include "glider/geometry.hpp"
#include "glider/hydro.hpp"
#include "glider/mesh_io.hpp"

using namespace glider;

namespace {

// Straight binomial-coefficient Bernstein, independent of the library's.
double bernstein_ref(int n, int i, double t) {
  double binom = 1.0;
  for (int k = 1; k <= i; ++k) binom = binom * (n - i + k) / k;
  return binom * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

double max_vertex_gap(const TriMesh& a, const TriMesh& b) {
  double gap = 0.0;
  for (std::size_t v = 0; v < a.vertices.size(); ++v) gap = std::max(gap, (a.vertices[v] - b.vertices[v]).norm());
  return gap;
}

TriMesh hull() { return make_ellipsoid(0.55, 0.175, 0.11, 3); }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "glider_geometry_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Ellipsoid, IcosahedronAtZeroSubdivisions) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 0);
  EXPECT_EQ(m.vertices.size(), 12u);
  EXPECT_EQ(m.faces.size(), 20u);
  EXPECT_TRUE(is_watertight(m));
}

TEST(Ellipsoid, SphereVolumeAndArea) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 4);
  EXPECT_TRUE(is_watertight(m));
  EXPECT_NEAR(signed_volume(m), 4.0 * kPi / 3.0, 0.01 * 4.0 * kPi / 3.0);
  EXPECT_NEAR(surface_area(m), 4.0 * kPi, 0.01 * 4.0 * kPi);
}

TEST(Ellipsoid, VolumeScalesWithAxes) {
  const TriMesh m = make_ellipsoid(2, 1, 0.5, 4);
  EXPECT_NEAR(signed_volume(m), 4.0 * kPi / 3.0, 0.01 * 4.0 * kPi / 3.0);
}

TEST(Ellipsoid, RejectsBadArguments) {
  EXPECT_THROW(make_ellipsoid(0, 1, 1, 2), InvalidArgument);
  EXPECT_THROW(make_ellipsoid(1, -1, 1, 2), InvalidArgument);
  EXPECT_THROW(make_ellipsoid(1, 1, 1, -1), InvalidArgument);
}

TEST(Ellipsoid, VolumeErrorShrinksWithRefinement) {
  const double exact = 4.0 * kPi / 3.0 * 0.6 * 0.3 * 0.2;
  double previous = 1e300;
  for (int k = 2; k <= 5; ++k) {
    const double err = std::abs(signed_volume(make_ellipsoid(0.6, 0.3, 0.2, k)) - exact);
    EXPECT_LT(err, previous) << "k = " << k;
    previous = err;
  }
}

TEST(Watertight, MissingFaceIsDetected) {
  TriMesh m = make_ellipsoid(1, 1, 1, 1);
  m.faces.pop_back();
  EXPECT_FALSE(is_watertight(m));
  EXPECT_THROW(mesh_features(m), InvalidGeometry);
}

TEST(Bernstein, MatchesBinomialForm) {
  for (int n = 1; n <= 5; ++n) {
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      double sum = 0.0;
      for (int i = 0; i <= n; ++i) {
        EXPECT_NEAR(bernstein(n, i, t), bernstein_ref(n, i, t), 1e-15);
        sum += bernstein(n, i, t);
      }
      EXPECT_NEAR(sum, 1.0, 1e-14);
    }
  }
}

TEST(Cage, PartitionOfUnity) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 4);
  const DeformationCage cage = bind_cage(m, 2, 2, 2, 0.05);
  EXPECT_EQ(cage.control_count(), 8u);
  EXPECT_GE(cage.weights.minCoeff(), 0.0);
  const Eigen::VectorXd sums = cage.weights.rowwise().sum();
  EXPECT_LT((sums.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Cage, WeightsAreTrivariateBernsteinProducts) {
  const TriMesh m = hull();
  const DeformationCage cage = bind_cage(m, 4, 3, 3, 0.05);
  const Vec3 extent = cage.box_max - cage.box_min;
  for (std::size_t v = 0; v < m.vertices.size(); v += 37) {
    const Vec3 s = (m.vertices[v] - cage.box_min).cwiseQuotient(extent);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = bernstein_ref(3, i, s.x()) * bernstein_ref(2, j, s.y()) * bernstein_ref(2, k, s.z());
          EXPECT_NEAR(cage.weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(cage.index(i, j, k))), w,
                      1e-14);
        }
  }
}

TEST(Cage, BoxCenterWeightsOnQuadraticLattice) {
  // Brute-force evaluation at normalized (0.5, 0.5, 0.5) of a 3x3x3 lattice:
  // corners get (1/4)^3, the middle node (1/2)^3, and mirrored nodes agree.
  auto w = [](int i, int j, int k) { return bernstein(2, i, 0.5) * bernstein(2, j, 0.5) * bernstein(2, k, 0.5); };
  EXPECT_DOUBLE_EQ(w(0, 0, 0), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(w(2, 2, 2), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(w(1, 1, 1), 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(w(0, 1, 2), w(2, 1, 0));
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) sum += w(i, j, k);
  EXPECT_NEAR(sum, 1.0, 1e-15);

  // The unit sphere is centered, so its box center is the origin.
  const DeformationCage cage = bind_cage(make_ellipsoid(1, 1, 1, 3), 3, 3, 3, 0.05);
  EXPECT_LT((0.5 * (cage.box_min + cage.box_max)).norm(), 1e-12);
}

TEST(Cage, RejectsDegenerateInput) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 2);
  EXPECT_THROW(bind_cage(m, 1, 2, 2, 0.05), InvalidArgument);
  TriMesh flat = m;
  for (auto& v : flat.vertices) v.z() = 0.0;
  EXPECT_THROW(bind_cage(flat, 2, 2, 2, 0.05), InvalidGeometry);
}

TEST(Deform, ZeroOffsetsIsIdentity) {
  const TriMesh m = hull();
  for (auto dims : {std::array<int, 3>{2, 2, 2}, std::array<int, 3>{4, 3, 3}}) {
    const DeformationCage cage = bind_cage(m, dims[0], dims[1], dims[2], 0.05);
    EXPECT_LT(max_vertex_gap(deform(cage, CageParams::zeros(cage), m), m), 1e-12);
  }
}

TEST(Deform, UniformOffsetTranslates) {
  const TriMesh m = hull();
  const DeformationCage cage = bind_cage(m, 4, 3, 3, 0.05);
  const Vec3 t(0.03, -0.02, 0.01);
  CageParams p = CageParams::zeros(cage);
  for (std::size_t c = 0; c < cage.control_count(); ++c) p.offsets.segment<3>(static_cast<Eigen::Index>(3 * c)) = t;
  const TriMesh out = deform(cage, p, m);
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    EXPECT_LT((out.vertices[v] - m.vertices[v] - t).norm(), 1e-13);
  }
}

TEST(Deform, SingleCornerMovesByItsWeight) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 3);
  const DeformationCage cage = bind_cage(m, 2, 2, 2, 0.05);
  CageParams p = CageParams::zeros(cage);
  p.offsets(0) = 0.1;  // control (0, 0, 0), x
  const TriMesh out = deform(cage, p, m);
  const Vec3 extent = cage.box_max - cage.box_min;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Vec3 s = (m.vertices[v] - cage.box_min).cwiseQuotient(extent);
    const double w = (1.0 - s.x()) * (1.0 - s.y()) * (1.0 - s.z());
    const Vec3 d = out.vertices[v] - m.vertices[v];
    EXPECT_NEAR(d.x(), 0.1 * w, 1e-14);
    EXPECT_NEAR(d.y(), 0.0, 1e-14);
    EXPECT_NEAR(d.z(), 0.0, 1e-14);
  }
}

TEST(Deform, DisplacementIsLinearInParams) {
  const TriMesh m = hull();
  const DeformationCage cage = bind_cage(m, 4, 3, 3, 0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  CageParams p = CageParams::zeros(cage);
  for (Eigen::Index i = 0; i < p.offsets.size(); ++i) p.offsets(i) = u(rng);
  const TriMesh base = deform(cage, p, m);
  for (double lambda : {0.5, 2.0, 3.7}) {
    const TriMesh scaled = deform(cage, CageParams(lambda * p.offsets), m);
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
      const Vec3 expect = lambda * (base.vertices[v] - m.vertices[v]);
      EXPECT_LT((scaled.vertices[v] - m.vertices[v] - expect).norm(), 1e-10);
    }
  }
}

TEST(Deform, Errors) {
  const TriMesh m = hull();
  const DeformationCage cage = bind_cage(m, 2, 2, 2, 0.05);
  EXPECT_THROW(deform(cage, CageParams(Eigen::VectorXd::Zero(5)), m), InvalidArgument);
  // Reflecting every control point through z = 0 turns the hull inside out.
  CageParams mirror = CageParams::zeros(cage);
  for (std::size_t c = 0; c < cage.control_count(); ++c) {
    mirror.offsets(static_cast<Eigen::Index>(3 * c + 2)) = -2.0 * cage.rest[c].z();
  }
  EXPECT_THROW(deform(cage, mirror, m), DegenerateShape);
}

TEST(Interpolate, EndpointsAndMidpoint) {
  const CageParams a(Eigen::VectorXd::LinSpaced(9, -1.0, 2.0));
  const CageParams b(Eigen::VectorXd::LinSpaced(9, 3.0, -0.5));
  EXPECT_EQ(interpolate(a, b, 0.0).offsets, a.offsets);
  EXPECT_EQ(interpolate(a, b, 1.0).offsets, b.offsets);
  const CageParams neg(-a.offsets);
  EXPECT_LT(interpolate(a, neg, 0.5).offsets.norm(), 1e-15);
  for (double t : {0.1, 0.37, 0.9}) {
    EXPECT_LT((interpolate(a, b, t).offsets - (a.offsets + t * (b.offsets - a.offsets))).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_THROW(interpolate(a, b, -0.01), InvalidArgument);
  EXPECT_THROW(interpolate(a, b, 1.01), InvalidArgument);
  EXPECT_THROW(interpolate(a, CageParams(Eigen::VectorXd::Zero(3)), 0.5), InvalidArgument);
}

TEST(Features, UnitSphere) {
  const MeshFeatures f = mesh_features(make_ellipsoid(1, 1, 1, 4));
  EXPECT_NEAR(f.volume, 4.0 * kPi / 3.0, 0.01 * 4.0 * kPi / 3.0);
  EXPECT_NEAR(f.wetted_area, 4.0 * kPi, 0.01 * 4.0 * kPi);
  EXPECT_NEAR(f.length, 2.0, 0.02);
  EXPECT_NEAR(f.span, 2.0, 0.02);
  EXPECT_NEAR(f.max_diameter, 2.0, 0.02);
  EXPECT_NEAR(f.planform_area, kPi, 0.02 * kPi);
  EXPECT_NEAR(f.reference_area, std::pow(f.volume, 2.0 / 3.0), 1e-15);
}

TEST(Features, Ellipsoid) {
  const MeshFeatures f = mesh_features(make_ellipsoid(2, 1, 0.5, 4));
  EXPECT_NEAR(f.length, 4.0, 0.04);
  EXPECT_NEAR(f.span, 2.0, 0.02);
  EXPECT_NEAR(f.planform_area, 2.0 * kPi, 0.02 * 2.0 * kPi);
}

TEST(Features, StableUnderRefinement) {
  const MeshFeatures a = mesh_features(make_ellipsoid(0.55, 0.175, 0.11, 3));
  const MeshFeatures b = mesh_features(make_ellipsoid(0.55, 0.175, 0.11, 4));
  auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
  EXPECT_LT(rel(a.volume, b.volume), 0.02);
  EXPECT_LT(rel(a.wetted_area, b.wetted_area), 0.02);
  EXPECT_LT(rel(a.length, b.length), 0.02);
  EXPECT_LT(rel(a.max_diameter, b.max_diameter), 0.02);
  EXPECT_LT(rel(a.planform_area, b.planform_area), 0.02);
  EXPECT_LT(rel(a.span, b.span), 0.02);
}

TEST(MeshIo, ObjRoundTripIsExact) {
  const TriMesh m = make_ellipsoid(0.55, 0.175, 0.11, 2);
  const auto path = scratch("round.obj");
  write_obj(m, path);
  const TriMesh back = read_obj(path);
  ASSERT_EQ(back.vertices.size(), m.vertices.size());
  ASSERT_EQ(back.faces, m.faces);
  for (std::size_t v = 0; v < m.vertices.size(); ++v) EXPECT_EQ(back.vertices[v], m.vertices[v]);
}

TEST(MeshIo, ObjParseErrorsCarryLineNumbers) {
  struct Case {
    std::string text;
    std::size_t line;
  };
  const std::vector<Case> cases = {
      {"v 0 0 0\nv 1 0 0\nv 0 1\n", 3},
      {"v 0 0 0\nv 1 0 0\nv 0 1 0\n# note\nf 1 2\n", 5},
      {"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 4\n", 4},
      {"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", 4},
      {"v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 7\n", 5},
  };
  const auto path = scratch("bad.obj");
  for (const auto& c : cases) {
    std::ofstream(path) << c.text;
    try {
      read_obj(path);
      ADD_FAILURE() << "accepted: " << c.text;
    } catch (const ParseError& err) {
      EXPECT_EQ(err.line, c.line) << err.what();
    }
  }
}

TEST(MeshIo, StlLayout) {
  const TriMesh m = make_ellipsoid(1, 1, 1, 1);
  const auto path = scratch("hull.stl");
  write_stl(m, path, "test hull");
  EXPECT_EQ(std::filesystem::file_size(path), 84u + 50u * m.faces.size());
  std::ifstream is(path, std::ios::binary);
  char header[80];
  is.read(header, 80);
  EXPECT_EQ(std::string(header, 9), "test hull");
  unsigned char count[4];
  is.read(reinterpret_cast<char*>(count), 4);
  const std::uint32_t n = count[0] | (count[1] << 8) | (count[2] << 16) | (static_cast<std::uint32_t>(count[3]) << 24);
  EXPECT_EQ(n, m.faces.size());
}
