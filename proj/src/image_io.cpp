#include "poseref/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace poseref {

namespace {

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 const std::vector<uint16_t>& pixels, const std::string& scale_comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
  out << "P5\n# " << scale_comment << "\n" << width << " " << height << "\n65535\n";
  for (uint16_t v : pixels) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw std::runtime_error("write_pgm: failed writing " + path.string());
}

int read_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines between header tokens.
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  if (!in) throw ParseError("read_pgm_mask: malformed header");
  return value;
}

}  // namespace

void write_pgm(const SilhouetteMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
  out << "P5\n# silhouette mask: 255 = foreground, 0 = background\n"
      << mask.width << " " << mask.height << "\n255\n";
  for (uint8_t v : mask.values) out.put(v ? static_cast<char>(255) : 0);
  if (!out) throw std::runtime_error("write_pgm: failed writing " + path.string());
}

void write_pgm(const DepthMap& depth, const std::filesystem::path& path) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double d : depth.values) {
    if (!std::isfinite(d)) continue;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const bool any = std::isfinite(lo);
  const double range = any && hi > lo ? hi - lo : 1.0;
  std::vector<uint16_t> pixels(depth.values.size(), 0);
  for (size_t i = 0; i < depth.values.size(); ++i) {
    const double d = depth.values[i];
    if (!std::isfinite(d)) continue;  // background stays 0
    pixels[i] = static_cast<uint16_t>(1 + std::llround((d - lo) / range * 65534.0));
  }
  std::ostringstream comment;
  comment << "depth map: meters = " << lo << " + (value-1)/65534 * " << range << "; 0 = background";
  write_pgm16(path, depth.width, depth.height, pixels, any ? comment.str() : "depth map: empty");
}

void write_pgm(const DistanceField& field, const std::filesystem::path& path) {
  double hi = 0.0;
  for (double d : field.values) hi = std::max(hi, d);
  const double range = hi > 0.0 ? hi : 1.0;
  std::vector<uint16_t> pixels(field.values.size(), 0);
  for (size_t i = 0; i < field.values.size(); ++i) {
    pixels[i] = static_cast<uint16_t>(std::llround(field.values[i] / range * 65535.0));
  }
  std::ostringstream comment;
  comment << "distance field: pixels = value/65535 * " << range;
  write_pgm16(path, field.width, field.height, pixels, comment.str());
}

SilhouetteMask read_pgm_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm_mask: cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw ParseError("read_pgm_mask: expected P2 or P5, got " + magic);
  const int width = read_pgm_token(in);
  const int height = read_pgm_token(in);
  const int maxval = read_pgm_token(in);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw ParseError("read_pgm_mask: invalid dimensions or maxval");
  }

  SilhouetteMask mask = SilhouetteMask::background(width, height);
  const int threshold = maxval / 2;
  if (magic == "P2") {
    for (size_t i = 0; i < mask.values.size(); ++i) {
      const int v = read_pgm_token(in);
      mask.values[i] = v > threshold ? 1 : 0;
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    for (size_t i = 0; i < mask.values.size(); ++i) {
      int v = in.get();
      if (bytes == 2) v = (v << 8) | in.get();
      if (!in) throw ParseError("read_pgm_mask: truncated pixel data");
      mask.values[i] = v > threshold ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace poseref
