#pragma once

#include <filesystem>
#include <string>

#include "glider/geometry.hpp"

namespace glider {

// ASCII Wavefront OBJ with `v` and `f` records (1-based indices). Coordinates
// are written with 17 significant digits so an export/import round trip is
// lossless.
void write_obj(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh read_obj(const std::filesystem::path& path);

// Binary STL: 80-byte header, uint32 triangle count, then per triangle a
// float32 normal, three float32 vertices and a uint16 attribute (little-endian).
void write_stl(const TriMesh& mesh, const std::filesystem::path& path, const std::string& header = "");

}  // namespace glider
