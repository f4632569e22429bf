#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "glider/errors.hpp"
#include "glider/mesh_io.hpp"

namespace glider {
namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream os(path, mode);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}

}  // namespace

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  auto os = open_for_write(path, std::ios::out | std::ios::trunc);
  os << std::setprecision(17);
  for (const auto& v : mesh.vertices) os << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
  TriMesh mesh;
  std::vector<std::size_t> face_lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw ParseError("bad vertex record in " + path.string(), line_no);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& idx : f) {
        std::string token;
        if (!(ls >> token)) throw ParseError("face needs three indices in " + path.string(), line_no);
        // Accept "i", "i/t" and "i/t/n" forms; only the position index matters.
        std::istringstream ts(token.substr(0, token.find('/')));
        if (!(ts >> idx) || !ts.eof()) throw ParseError("bad face index '" + token + "' in " + path.string(), line_no);
        --idx;
      }
      std::string extra;
      if (ls >> extra) throw ParseError("only triangular faces are supported in " + path.string(), line_no);
      mesh.faces.push_back(f);
      face_lines.push_back(line_no);
    }
  }
  const auto n = static_cast<int>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    for (int idx : mesh.faces[i]) {
      if (idx < 0 || idx >= n) throw ParseError("face index out of range in " + path.string(), face_lines[i]);
    }
  }
  return mesh;
}

void write_stl(const TriMesh& mesh, const std::filesystem::path& path, const std::string& header) {
  auto os = open_for_write(path, std::ios::out | std::ios::binary | std::ios::trunc);
  std::array<char, 80> head{};
  std::memcpy(head.data(), header.data(), std::min<std::size_t>(header.size(), head.size()));
  os.write(head.data(), head.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(mesh.faces.size()));
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    Vec3 normal = (b - a).cross(c - a);
    if (normal.norm() > 0.0) normal.normalize();
    const std::array<const Vec3*, 4> corners{&normal, &a, &b, &c};
    for (const Vec3* v : corners) {
      for (int axis = 0; axis < 3; ++axis) put_le<float>(os, static_cast<float>((*v)[axis]));
    }
    put_le<std::uint16_t>(os, 0);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace glider
