#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poseref {

// A point required by a projection ended up at z <= 0 in camera space.
// Carries the index of the offending point when the caller processes a batch.
class BehindCameraError : public std::runtime_error {
 public:
  explicit BehindCameraError(const std::string& what, std::ptrdiff_t point_index = -1)
      : std::runtime_error(what), point_index_(point_index) {}

  std::ptrdiff_t point_index() const noexcept { return point_index_; }

 private:
  std::ptrdiff_t point_index_;
};

// Mesh geometry violates a rendering precondition (e.g. a vertex closer than
// the near plane).
class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A silhouette that was expected to have a boundary turned out empty.
class EmptyContourError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A probe view used for window sizing saw nothing of the object.
class DegenerateViewError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The hypothesis pose renders to an empty silhouette.
class DegenerateHypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The scene observation is unusable (e.g. the target is fully occluded).
class DegenerateSceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed external input (OBJ, config, CSV). Message carries line context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace poseref
