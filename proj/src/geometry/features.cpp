#include <algorithm>
#include <cmath>
#include <limits>

#include "glider/errors.hpp"
#include "glider/geometry.hpp"

namespace glider {
namespace {

// Largest y or z extent of the mesh cross-section at x = plane.
double section_extent(const TriMesh& mesh, double plane) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double ymin = inf, ymax = -inf, zmin = inf, zmax = -inf;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const Vec3& p = mesh.vertices[f[e]];
      const Vec3& q = mesh.vertices[f[(e + 1) % 3]];
      if ((p.x() < plane) == (q.x() < plane)) continue;
      const double s = (plane - p.x()) / (q.x() - p.x());
      const Vec3 hit = p + s * (q - p);
      ymin = std::min(ymin, hit.y());
      ymax = std::max(ymax, hit.y());
      zmin = std::min(zmin, hit.z());
      zmax = std::max(zmax, hit.z());
    }
  }
  if (ymin > ymax) return 0.0;
  return std::max(ymax - ymin, zmax - zmin);
}

// Projected x-y area by marking pixel centers covered by any triangle.
double rasterized_planform(const TriMesh& mesh, double x0, double y0, double width, double height) {
  const int n = kPlanformResolution;
  const double px = width / n;
  const double py = height / n;
  std::vector<unsigned char> covered(static_cast<std::size_t>(n) * n, 0);

  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (area2 == 0.0) continue;

    const double minx = std::min({a.x(), b.x(), c.x()});
    const double maxx = std::max({a.x(), b.x(), c.x()});
    const double miny = std::min({a.y(), b.y(), c.y()});
    const double maxy = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::floor((minx - x0) / px - 0.5)));
    const int i1 = std::min(n - 1, static_cast<int>(std::ceil((maxx - x0) / px - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor((miny - y0) / py - 0.5)));
    const int j1 = std::min(n - 1, static_cast<int>(std::ceil((maxy - y0) / py - 0.5)));

    for (int j = j0; j <= j1; ++j) {
      const double y = y0 + (j + 0.5) * py;
      for (int i = i0; i <= i1; ++i) {
        const double x = x0 + (i + 0.5) * px;
        const double w0 = (b.x() - x) * (c.y() - y) - (b.y() - y) * (c.x() - x);
        const double w1 = (c.x() - x) * (a.y() - y) - (c.y() - y) * (a.x() - x);
        const double w2 = (a.x() - x) * (b.y() - y) - (a.y() - y) * (b.x() - x);
        const bool inside = area2 > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0) : (w0 <= 0 && w1 <= 0 && w2 <= 0);
        if (inside) covered[static_cast<std::size_t>(j) * n + i] = 1;
      }
    }
  }
  const auto count = std::count(covered.begin(), covered.end(), 1);
  return static_cast<double>(count) * px * py;
}

}  // namespace

MeshFeatures mesh_features(const TriMesh& mesh) {
  if (!is_watertight(mesh)) throw InvalidGeometry("mesh_features: mesh is not watertight");

  MeshFeatures out;
  out.volume = signed_volume(mesh);
  if (!(out.volume > 0.0)) throw InvalidGeometry("mesh_features: non-positive volume");
  out.wetted_area = surface_area(mesh);

  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  out.length = hi.x() - lo.x();
  out.span = hi.y() - lo.y();

  for (int s = 0; s < kDiameterSlices; ++s) {
    const double plane = lo.x() + (s + 0.5) * out.length / kDiameterSlices;
    out.max_diameter = std::max(out.max_diameter, section_extent(mesh, plane));
  }
  out.planform_area = rasterized_planform(mesh, lo.x(), lo.y(), out.length, out.span);
  out.reference_area = std::pow(out.volume, 2.0 / 3.0);
  return out;
}

}  // namespace glider
