#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

#include "glider/errors.hpp"
#include "glider/geometry.hpp"

namespace glider {

bool is_watertight(const TriMesh& mesh) {
  const auto n = static_cast<std::int64_t>(mesh.vertices.size());
  if (mesh.faces.empty() || n < 4) return false;

  // Directed edges must be unique and each must have its reverse.
  std::vector<std::uint64_t> directed;
  directed.reserve(3 * mesh.faces.size());
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const std::int64_t a = f[e];
      const std::int64_t b = f[(e + 1) % 3];
      if (a < 0 || a >= n || b < 0 || b >= n || a == b) return false;
      directed.push_back((static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b));
    }
  }
  std::sort(directed.begin(), directed.end());
  if (std::adjacent_find(directed.begin(), directed.end()) != directed.end()) return false;
  for (std::uint64_t key : directed) {
    const std::uint64_t reversed = (key << 32) | (key >> 32);
    if (!std::binary_search(directed.begin(), directed.end(), reversed)) return false;
  }
  return true;
}

double signed_volume(const TriMesh& mesh) {
  double six_v = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

double surface_area(const TriMesh& mesh) {
  double area = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    area += 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
  }
  return area;
}

namespace {

TriMesh icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return m;
}

TriMesh subdivide_on_sphere(const TriMesh& in) {
  TriMesh out;
  out.vertices = in.vertices;
  out.faces.reserve(in.faces.size() * 4);
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back((in.vertices[a] + in.vertices[b]).normalized());
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto& f : in.faces) {
    const int ab = mid(f[0], f[1]);
    const int bc = mid(f[1], f[2]);
    const int ca = mid(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({f[1], bc, ab});
    out.faces.push_back({f[2], ca, bc});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace

TriMesh make_ellipsoid(double a, double b, double c, int subdivisions) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
    throw InvalidArgument("make_ellipsoid: semi-axes must be positive");
  }
  if (subdivisions < 0) throw InvalidArgument("make_ellipsoid: subdivisions must be >= 0");
  TriMesh mesh = icosahedron();
  for (int s = 0; s < subdivisions; ++s) mesh = subdivide_on_sphere(mesh);
  for (auto& v : mesh.vertices) v = v.cwiseProduct(Vec3(a, b, c));
  return mesh;
}

}  // namespace glider
