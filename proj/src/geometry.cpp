#include "poseref/geometry.hpp"

#include "poseref/parallel.hpp"

namespace poseref {

double mesh_diameter(const TriangleMesh& mesh) {
  const auto& v = mesh.vertices;
  const int n = static_cast<int>(v.size());
  if (n < 2) throw std::invalid_argument("mesh_diameter: need at least two vertices");
  double best = 0.0;
  POSEREF_PRAGMA_OMP(omp parallel for schedule(dynamic, 16) reduction(max : best))
  for (int i = 0; i < n - 1; ++i) {
    double row_best = 0.0;
    for (int j = i + 1; j < n; ++j) {
      row_best = std::max(row_best, squared_norm(v[j] - v[i]));
    }
    best = std::max(best, row_best);
  }
  return std::sqrt(best);
}

}  // namespace poseref
