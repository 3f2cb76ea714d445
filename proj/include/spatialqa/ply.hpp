#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spatialqa/geometry.hpp"

namespace spatialqa {

struct LabeledPoint {
  Vec3 position;
  std::array<std::uint8_t, 3> color{0, 0, 0};
  std::int32_t semantic_label = -1;
  std::int32_t instance_label = 0;

  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

struct LabeledPointCloud {
  std::vector<LabeledPoint> points;
};

enum class PlyEncoding { Ascii, BinaryLittleEndian };

// Reads the `vertex` element of a PLY file. Accepted vertex properties:
// x, y, z (float/double), red, green, blue (uchar), label | semantic_label and
// instance | instance_label (any integer type). Everything else is skipped,
// including other elements. Missing labels default to semantic -1 and
// instance 0. Errors report the byte offset where parsing stopped.
LabeledPointCloud parse_ply(const std::filesystem::path& path);
LabeledPointCloud parse_ply_bytes(std::string_view bytes);

// Writes x,y,z as float32 unless `double_precision` is set.
std::string encode_ply(const LabeledPointCloud& cloud, PlyEncoding encoding,
                       bool double_precision = false);
void write_ply(const std::filesystem::path& path, const LabeledPointCloud& cloud,
               PlyEncoding encoding, bool double_precision = false);

}  // namespace spatialqa
