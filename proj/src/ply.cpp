#include "spatialqa/ply.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "spatialqa/error.hpp"

namespace spatialqa {
namespace {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> scalar_from_name(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8: return 1;
    case Scalar::Int16:
    case Scalar::UInt16: return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

bool is_integral(Scalar s) { return s != Scalar::Float32 && s != Scalar::Float64; }

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

[[noreturn]] void fail(ErrorCode code, std::size_t offset, std::string_view what) {
  throw Error(code, fmt::format("{} (byte offset {})", what, offset));
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) words.push_back(line.substr(start, i - start));
  }
  return words;
}

Header parse_header(std::string_view bytes) {
  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  bool first = true;
  while (true) {
    const std::size_t line_start = pos;
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) fail(ErrorCode::MalformedHeader, pos, "missing end_header");
    const std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    const auto words = split_words(line);
    if (first) {
      if (words.size() != 1 || words[0] != "ply") fail(ErrorCode::MalformedHeader, line_start, "missing 'ply' magic");
      first = false;
      continue;
    }
    if (words.empty() || words[0] == "comment" || words[0] == "obj_info") continue;
    if (words[0] == "end_header") break;
    if (words[0] == "format") {
      if (words.size() != 3) fail(ErrorCode::MalformedHeader, line_start, "bad format line");
      if (words[1] == "ascii") {
        header.encoding = PlyEncoding::Ascii;
      } else if (words[1] == "binary_little_endian") {
        header.encoding = PlyEncoding::BinaryLittleEndian;
      } else if (words[1] == "binary_big_endian") {
        fail(ErrorCode::UnsupportedEncoding, line_start, "binary_big_endian is not supported");
      } else {
        fail(ErrorCode::MalformedHeader, line_start, fmt::format("unknown format '{}'", words[1]));
      }
      if (words[2] != "1.0") fail(ErrorCode::MalformedHeader, line_start, "unsupported format version");
      saw_format = true;
    } else if (words[0] == "element") {
      if (words.size() != 3) fail(ErrorCode::MalformedHeader, line_start, "bad element line");
      Element element;
      element.name = std::string(words[1]);
      const auto res = std::from_chars(words[2].data(), words[2].data() + words[2].size(), element.count);
      if (res.ec != std::errc() || res.ptr != words[2].data() + words[2].size()) {
        fail(ErrorCode::MalformedHeader, line_start, "bad element count");
      }
      header.elements.push_back(std::move(element));
    } else if (words[0] == "property") {
      if (header.elements.empty()) fail(ErrorCode::MalformedHeader, line_start, "property before element");
      Property prop;
      if (words.size() == 5 && words[1] == "list") {
        const auto count_type = scalar_from_name(words[2]);
        const auto item_type = scalar_from_name(words[3]);
        if (!count_type || !item_type || !is_integral(*count_type)) {
          fail(ErrorCode::MalformedHeader, line_start, "bad list property types");
        }
        prop.is_list = true;
        prop.count_type = *count_type;
        prop.type = *item_type;
        prop.name = std::string(words[4]);
      } else if (words.size() == 3) {
        const auto type = scalar_from_name(words[1]);
        if (!type) fail(ErrorCode::MalformedHeader, line_start, fmt::format("unknown property type '{}'", words[1]));
        prop.type = *type;
        prop.name = std::string(words[2]);
      } else {
        fail(ErrorCode::MalformedHeader, line_start, "bad property line");
      }
      header.elements.back().properties.push_back(std::move(prop));
    } else {
      fail(ErrorCode::MalformedHeader, line_start, fmt::format("unexpected header keyword '{}'", words[0]));
    }
  }
  if (!saw_format) fail(ErrorCode::MalformedHeader, 0, "missing format line");
  header.body_offset = pos;
  return header;
}

// Reads one scalar value from the body, as double.
class BodyReader {
 public:
  BodyReader(std::string_view bytes, std::size_t offset, PlyEncoding encoding)
      : bytes_(bytes), pos_(offset), encoding_(encoding) {}

  double read(Scalar type) {
    return encoding_ == PlyEncoding::Ascii ? read_ascii(type) : read_binary(type);
  }

  std::size_t offset() const { return pos_; }

 private:
  double read_ascii(Scalar type) {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) fail(ErrorCode::TruncatedBody, pos_, "unexpected end of ASCII body");
    std::size_t end = pos_;
    while (end < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[end]))) ++end;
    const char* first = bytes_.data() + pos_;
    const char* last = bytes_.data() + end;
    if (*first == '+') ++first;
    double value = 0.0;
    std::from_chars_result res{};
    if (type == Scalar::Float32) {
      float f = 0.0f;
      res = std::from_chars(first, last, f);
      value = f;
    } else if (type == Scalar::Float64) {
      res = std::from_chars(first, last, value);
    } else {
      long long i = 0;
      res = std::from_chars(first, last, i);
      value = static_cast<double>(i);
    }
    if (res.ec != std::errc() || res.ptr != last) {
      fail(ErrorCode::TruncatedBody, pos_, fmt::format("invalid ASCII value '{}'", std::string_view(first, last - first)));
    }
    pos_ = end;
    return value;
  }

  template <typename T>
  T load() {
    T value;
    std::array<char, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw.begin(), raw.end());
    }
    std::memcpy(&value, raw.data(), sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  double read_binary(Scalar type) {
    if (pos_ + scalar_size(type) > bytes_.size()) {
      fail(ErrorCode::TruncatedBody, pos_, "unexpected end of binary body");
    }
    switch (type) {
      case Scalar::Int8: return load<std::int8_t>();
      case Scalar::UInt8: return load<std::uint8_t>();
      case Scalar::Int16: return load<std::int16_t>();
      case Scalar::UInt16: return load<std::uint16_t>();
      case Scalar::Int32: return load<std::int32_t>();
      case Scalar::UInt32: return load<std::uint32_t>();
      case Scalar::Float32: return load<float>();
      case Scalar::Float64: return load<double>();
    }
    return 0.0;
  }

  std::string_view bytes_;
  std::size_t pos_;
  PlyEncoding encoding_;
};

enum class Field { Ignore, X, Y, Z, Red, Green, Blue, Semantic, Instance };

Field field_for(std::string_view name) {
  if (name == "x") return Field::X;
  if (name == "y") return Field::Y;
  if (name == "z") return Field::Z;
  if (name == "red") return Field::Red;
  if (name == "green") return Field::Green;
  if (name == "blue") return Field::Blue;
  if (name == "label" || name == "semantic_label") return Field::Semantic;
  if (name == "instance" || name == "instance_label") return Field::Instance;
  return Field::Ignore;
}

}  // namespace

LabeledPointCloud parse_ply_bytes(std::string_view bytes) {
  const Header header = parse_header(bytes);

  const Element* vertex = nullptr;
  for (const auto& e : header.elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) fail(ErrorCode::MalformedHeader, 0, "no vertex element");
  if (vertex->count == 0) fail(ErrorCode::MalformedHeader, 0, "vertex element is empty");

  std::vector<Field> fields;
  bool has_x = false, has_y = false, has_z = false;
  for (const auto& p : vertex->properties) {
    Field f = p.is_list ? Field::Ignore : field_for(p.name);
    if ((f == Field::X || f == Field::Y || f == Field::Z) && is_integral(p.type)) {
      fail(ErrorCode::MalformedHeader, 0, fmt::format("position property '{}' must be float or double", p.name));
    }
    has_x |= f == Field::X;
    has_y |= f == Field::Y;
    has_z |= f == Field::Z;
    fields.push_back(f);
  }
  if (!has_x || !has_y || !has_z) fail(ErrorCode::MalformedHeader, 0, "vertex element lacks x, y or z");

  BodyReader reader(bytes, header.body_offset, header.encoding);
  LabeledPointCloud cloud;
  for (const auto& element : header.elements) {
    const bool is_vertex = &element == vertex;
    if (is_vertex) cloud.points.reserve(element.count);
    for (std::size_t row = 0; row < element.count; ++row) {
      LabeledPoint point;
      for (std::size_t k = 0; k < element.properties.size(); ++k) {
        const Property& prop = element.properties[k];
        if (prop.is_list) {
          const std::size_t item_offset = reader.offset();
          const double n = reader.read(prop.count_type);
          if (n < 0) fail(ErrorCode::TruncatedBody, item_offset, "negative list length");
          for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) reader.read(prop.type);
          continue;
        }
        const std::size_t value_offset = reader.offset();
        const double v = reader.read(prop.type);
        if (!is_vertex) continue;
        switch (fields[k]) {
          case Field::X: point.position.x = v; break;
          case Field::Y: point.position.y = v; break;
          case Field::Z: point.position.z = v; break;
          case Field::Red: point.color[0] = static_cast<std::uint8_t>(v); break;
          case Field::Green: point.color[1] = static_cast<std::uint8_t>(v); break;
          case Field::Blue: point.color[2] = static_cast<std::uint8_t>(v); break;
          case Field::Semantic: point.semantic_label = static_cast<std::int32_t>(v); break;
          case Field::Instance:
            if (v < 0) fail(ErrorCode::SchemaViolation, value_offset, "negative instance id");
            point.instance_label = static_cast<std::int32_t>(v);
            break;
          case Field::Ignore: break;
        }
      }
      if (is_vertex) {
        if (!point.position.finite()) fail(ErrorCode::SchemaViolation, reader.offset(), "non-finite vertex position");
        cloud.points.push_back(point);
      }
    }
    // Elements after the vertex block are not needed.
    if (is_vertex) break;
  }
  return cloud;
}

LabeledPointCloud parse_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  try {
    return parse_ply_bytes(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.detail()));
  }
}

namespace {

template <typename T>
void append_le(std::string& out, T value) {
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  out.append(raw.data(), raw.size());
}

}  // namespace

std::string encode_ply(const LabeledPointCloud& cloud, PlyEncoding encoding, bool double_precision) {
  const char* scalar = double_precision ? "double" : "float";
  std::string out = "ply\n";
  out += encoding == PlyEncoding::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += fmt::format("element vertex {}\n", cloud.points.size());
  out += fmt::format("property {0} x\nproperty {0} y\nproperty {0} z\n", scalar);
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "property int label\nproperty int instance\nend_header\n";
  for (const auto& p : cloud.points) {
    if (encoding == PlyEncoding::Ascii) {
      if (double_precision) {
        out += fmt::format("{} {} {}", p.position.x, p.position.y, p.position.z);
      } else {
        out += fmt::format("{} {} {}", static_cast<float>(p.position.x), static_cast<float>(p.position.y),
                           static_cast<float>(p.position.z));
      }
      out += fmt::format(" {} {} {} {} {}\n", p.color[0], p.color[1], p.color[2], p.semantic_label,
                         p.instance_label);
    } else {
      for (int i = 0; i < 3; ++i) {
        if (double_precision) {
          append_le(out, p.position[i]);
        } else {
          append_le(out, static_cast<float>(p.position[i]));
        }
      }
      for (auto c : p.color) append_le(out, c);
      append_le(out, p.semantic_label);
      append_le(out, p.instance_label);
    }
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const LabeledPointCloud& cloud, PlyEncoding encoding,
               bool double_precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", path.string()));
  const std::string bytes = encode_ply(cloud, encoding, double_precision);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace spatialqa
