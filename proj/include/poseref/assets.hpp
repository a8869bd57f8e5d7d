#pragma once

#include <filesystem>
#include <string>

#include "poseref/geometry.hpp"

namespace poseref {

// ASCII OBJ subset: `v` and `f` records, 1-based indices, faces with more
// than three vertices fan-triangulated. Normals, texture coordinates and
// material statements are ignored; face entries like "3/1/2" use the leading
// vertex index. Malformed records raise ParseError with the line number.
TriangleMesh load_mesh_obj(const std::filesystem::path& path);

TriangleMesh make_cube(double edge);
TriangleMesh make_icosphere(double radius, int subdivisions);
TriangleMesh make_cylinder(double radius, double height, int segments = 64);
// Two fused boxes forming an asymmetric L (arm lengths `arm_a` along x and
// `arm_b` along y, square cross-section of side `thickness`), centered on
// its bounding box.
TriangleMesh make_lbracket(double arm_a, double arm_b, double thickness);

// Builds a primitive from a CLI-style spec "name:param,param,...", e.g.
// "cube:0.1", "icosphere:0.1,4", "cylinder:0.04,0.12,64",
// "lbracket:0.1,0.06,0.025". Omitted parameters take the defaults above.
TriangleMesh make_primitive(const std::string& spec);

}  // namespace poseref
