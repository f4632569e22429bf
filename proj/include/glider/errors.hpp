#pragma once

#include <stdexcept>
#include <string>

namespace glider {

// Precondition violated by a caller-supplied value.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mesh is not a closed 2-manifold or has a zero-extent bounding box.
struct InvalidGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deformation produced a non-positive signed volume.
struct DegenerateShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Angle of attack outside the analytic oracle's validity range.
struct OutOfEnvelope : std::domain_error {
  using std::domain_error::domain_error;
};

// A base-shape archetype could not be realized as a valid hull.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, int epoch_index)
      : std::runtime_error(what), epoch(epoch_index) {}
  int epoch;
};

struct OptimizationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; line is 1-based, 0 when unknown.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what), line(line_number) {}
  std::size_t line;
};

}  // namespace glider
