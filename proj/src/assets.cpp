#include "poseref/assets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

namespace poseref {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line_no, const std::string& why) {
  throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + why);
}

// Leading integer of a face token ("7", "7/1", "7/1/3", "7//3").
long face_vertex_index(const std::string& token, bool* ok) {
  char* end = nullptr;
  const long value = std::strtol(token.c_str(), &end, 10);
  *ok = end != token.c_str() && (*end == '\0' || *end == '/');
  return value;
}

}  // namespace

TriangleMesh load_mesh_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh_obj: cannot open " + path.string());

  TriangleMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string keyword;
    if (!(ss >> keyword) || keyword[0] == '#') continue;

    if (keyword == "v") {
      Vec3 v;
      if (!(ss >> v.x >> v.y >> v.z)) parse_fail(path, line_no, "vertex needs three coordinates");
      mesh.vertices.push_back(v);
    } else if (keyword == "f") {
      std::vector<long> indices;
      std::string token;
      while (ss >> token) {
        bool ok = false;
        const long idx = face_vertex_index(token, &ok);
        if (!ok) parse_fail(path, line_no, "bad face token '" + token + "'");
        if (idx <= 0) parse_fail(path, line_no, "face indices are 1-based and positive, got " + token);
        indices.push_back(idx);
      }
      if (indices.size() < 3) parse_fail(path, line_no, "face needs at least three vertices");
      for (size_t i = 1; i + 1 < indices.size(); ++i) {
        mesh.triangles.push_back({static_cast<int>(indices[0] - 1), static_cast<int>(indices[i] - 1),
                                  static_cast<int>(indices[i + 1] - 1)});
      }
    }
    // Anything else (vn, vt, usemtl, o, g, s, ...) is ignored.
  }

  if (mesh.triangles.empty()) throw ParseError(path.string() + ": no faces found");
  const long vertex_count = static_cast<long>(mesh.vertices.size());
  for (const auto& tri : mesh.triangles) {
    for (int idx : tri) {
      if (idx >= vertex_count) {
        throw ParseError(path.string() + ": face references vertex " + std::to_string(idx + 1) +
                         " but only " + std::to_string(vertex_count) + " vertices exist");
      }
    }
  }
  return mesh;
}

namespace {

void append_box(TriangleMesh* mesh, const Vec3& lo, const Vec3& hi) {
  const int base = static_cast<int>(mesh->vertices.size());
  for (int corner = 0; corner < 8; ++corner) {
    mesh->vertices.push_back({corner & 1 ? hi.x : lo.x, corner & 2 ? hi.y : lo.y, corner & 4 ? hi.z : lo.z});
  }
  static const int faces[12][3] = {
      {0, 1, 3}, {0, 3, 2},  // z = lo
      {4, 6, 7}, {4, 7, 5},  // z = hi
      {0, 4, 5}, {0, 5, 1},  // y = lo
      {2, 3, 7}, {2, 7, 6},  // y = hi
      {0, 2, 6}, {0, 6, 4},  // x = lo
      {1, 5, 7}, {1, 7, 3},  // x = hi
  };
  for (const auto& f : faces) mesh->triangles.push_back({base + f[0], base + f[1], base + f[2]});
}

}  // namespace

TriangleMesh make_cube(double edge) {
  if (!(edge > 0.0)) throw std::invalid_argument("make_cube: edge must be positive");
  TriangleMesh mesh;
  const double h = edge / 2.0;
  append_box(&mesh, {-h, -h, -h}, {h, h, h});
  return mesh;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  if (!(radius > 0.0)) throw std::invalid_argument("make_icosphere: radius must be positive");
  if (subdivisions < 0 || subdivisions > 7) throw std::invalid_argument("make_icosphere: subdivisions out of range");

  // Icosahedron.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto midpoint_index = [&](int a, int b) {
      const std::pair<int, int> key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back(0.5 * (verts[a] + verts[b]));
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = midpoint_index(f[0], f[1]);
      const int bc = midpoint_index(f[1], f[2]);
      const int ca = midpoint_index(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(radius * normalized(v));
  mesh.triangles = std::move(faces);
  return mesh;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  if (!(radius > 0.0) || !(height > 0.0)) throw std::invalid_argument("make_cylinder: radius and height must be positive");
  if (segments < 3) throw std::invalid_argument("make_cylinder: need at least three segments");

  TriangleMesh mesh;
  const double h = height / 2.0;
  for (int ring = 0; ring < 2; ++ring) {
    const double z = ring == 0 ? -h : h;
    for (int i = 0; i < segments; ++i) {
      const double a = 2.0 * kPi * i / segments;
      mesh.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
    }
  }
  const int bottom_center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back({0.0, 0.0, -h});
  const int top_center = bottom_center + 1;
  mesh.vertices.push_back({0.0, 0.0, h});

  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    mesh.triangles.push_back({i, j, segments + i});
    mesh.triangles.push_back({j, segments + j, segments + i});
    mesh.triangles.push_back({bottom_center, j, i});
    mesh.triangles.push_back({top_center, segments + i, segments + j});
  }
  return mesh;
}

TriangleMesh make_lbracket(double arm_a, double arm_b, double thickness) {
  if (!(thickness > 0.0) || !(arm_a > thickness) || !(arm_b > thickness)) {
    throw std::invalid_argument("make_lbracket: arms must exceed the thickness");
  }
  TriangleMesh mesh;
  append_box(&mesh, {0.0, 0.0, 0.0}, {arm_a, thickness, thickness});
  append_box(&mesh, {0.0, thickness, 0.0}, {thickness, arm_b, thickness});
  // Center the bounding box on the origin.
  const Vec3 shift{arm_a / 2.0, arm_b / 2.0, thickness / 2.0};
  for (Vec3& v : mesh.vertices) v -= shift;
  return mesh;
}

TriangleMesh make_primitive(const std::string& spec) {
  const size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string token;
    while (std::getline(ss, token, ',')) {
      try {
        params.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw std::invalid_argument("make_primitive: bad parameter '" + token + "' in " + spec);
      }
    }
  }
  const auto param = [&](size_t i, double fallback) { return i < params.size() ? params[i] : fallback; };

  if (name == "cube") return make_cube(param(0, 0.1));
  if (name == "icosphere") return make_icosphere(param(0, 0.1), static_cast<int>(param(1, 4)));
  if (name == "cylinder") return make_cylinder(param(0, 0.04), param(1, 0.12), static_cast<int>(param(2, 64)));
  if (name == "lbracket") return make_lbracket(param(0, 0.1), param(1, 0.06), param(2, 0.025));
  throw std::invalid_argument("make_primitive: unknown primitive '" + name + "'");
}

}  // namespace poseref
