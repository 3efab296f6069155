#include "tvdd/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "tvdd/errors.hpp"

namespace tvdd {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFul) throw IoError(std::string("PGM: ") + what + " out of range");
      ++pos_;
    }
    if (pos_ == start) {
      throw IoError(std::string("PGM: ") + (pos_ >= bytes_.size() ? "truncated data reading " : "malformed ") + what);
    }
    return value;
  }

  std::size_t& pos() { return pos_; }
  [[nodiscard]] std::string_view bytes() const { return bytes_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw IoError("PGM: unsupported format (expected P2 or P5 magic)");
  }
  const bool binary = bytes[1] == '5';
  HeaderReader in(bytes.substr(2));
  const auto width = in.number("width");
  const auto height = in.number("height");
  const auto maxval = in.number("maxval");
  if (width == 0 || height == 0) throw IoError("PGM: zero image size");
  if (maxval == 0 || maxval > 65535) throw IoError("PGM: maxval must be in [1, 65535]");

  GrayImage image;
  image.max_value = static_cast<unsigned>(maxval);
  image.pixels = CellField(GridGeometry(width, height));
  auto values = image.pixels.values();
  const double scale = 1.0 / static_cast<double>(maxval);

  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    auto& pos = in.pos();
    const auto data = in.bytes();
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
      throw IoError("PGM: malformed header terminator");
    }
    ++pos;
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t needed = values.size() * bpp;
    if (data.size() - pos < needed) {
      throw IoError("PGM: truncated payload (" + std::to_string(data.size() - pos) + " of " +
                    std::to_string(needed) + " bytes)");
    }
    const auto* raw = reinterpret_cast<const unsigned char*>(data.data() + pos);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const unsigned v = bpp == 1 ? raw[k] : (static_cast<unsigned>(raw[2 * k]) << 8) | raw[2 * k + 1];
      if (v > maxval) throw IoError("PGM: sample exceeds maxval");
      values[k] = v * scale;
    }
  } else {
    for (std::size_t k = 0; k < values.size(); ++k) {
      const auto v = in.number("pixel");
      if (v > maxval) throw IoError("PGM: sample exceeds maxval");
      values[k] = static_cast<double>(v) * scale;
    }
  }
  return image;
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open image '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  try {
    return parse_pgm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode_pgm(const CellField& image, unsigned max_value, bool binary) {
  if (max_value == 0 || max_value > 65535) throw IoError("PGM: maxval must be in [1, 65535]");
  const auto& g = image.geometry();
  std::ostringstream out;
  out << (binary ? "P5" : "P2") << '\n' << g.m1 << ' ' << g.m2 << '\n' << max_value << '\n';
  const auto values = image.values();
  auto quantize = [&](double v) {
    if (std::isnan(v)) v = 0.0;
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * max_value));
  };
  if (binary) {
    for (double v : values) {
      const unsigned q = quantize(v);
      if (max_value < 256) {
        out.put(static_cast<char>(q));
      } else {
        out.put(static_cast<char>(q >> 8));
        out.put(static_cast<char>(q & 0xFF));
      }
    }
  } else {
    for (std::size_t j = 0; j < g.m2; ++j) {
      for (std::size_t i = 0; i < g.m1; ++i) out << (i ? " " : "") << quantize(values[j * g.m1 + i]);
      out << '\n';
    }
  }
  return out.str();
}

void save_pgm(const CellField& image, const std::filesystem::path& path, unsigned max_value, bool binary) {
  const std::string bytes = encode_pgm(image, max_value, binary);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write image '" + path.string() + "'");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw IoError("write failed for '" + path.string() + "'");
}

CellField add_gaussian_noise(const CellField& image, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) throw ContractError("noise variance must be >= 0");
  CellField out = image;
  if (variance == 0.0) return out;
  std::mt19937_64 engine(seed);
  // 53-bit uniforms from the raw engine output; std::generate_canonical and
  // std::normal_distribution are not specified bit-for-bit across libraries.
  auto uniform = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
  const double sd = std::sqrt(variance);
  auto v = out.values();
  for (std::size_t k = 0; k < v.size(); k += 2) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    v[k] += sd * r * std::cos(angle);
    if (k + 1 < v.size()) v[k + 1] += sd * r * std::sin(angle);
  }
  return out;
}

CellField synthetic_image(std::string_view kind, std::size_t width, std::size_t height) {
  const bool ramp = kind == "blocks-ramp";
  if (kind != "blocks" && !ramp) throw ConfigError("unknown synthetic image '" + std::string(kind) + "'");
  const GridGeometry g(width, height);
  CellField u(g, 0.25);
  auto fill = [&](double x0, double y0, double x1, double y1, double value) {
    const auto i0 = static_cast<std::size_t>(x0 * width), i1 = static_cast<std::size_t>(x1 * width);
    const auto j0 = static_cast<std::size_t>(y0 * height), j1 = static_cast<std::size_t>(y1 * height);
    for (std::size_t j = j0; j < j1; ++j)
      for (std::size_t i = i0; i < i1; ++i) u(i, j) = value;
  };
  if (ramp) {
    for (std::size_t j = 0; j < height; ++j)
      for (std::size_t i = 0; i < width; ++i)
        u(i, j) += width > 1 ? 0.2 * static_cast<double>(i) / static_cast<double>(width - 1) : 0.0;
  }
  fill(0.125, 0.125, 0.5, 0.5, 0.75);
  fill(0.5, 0.5, 0.875, 0.875, 1.0);
  fill(0.25, 0.625, 0.75, 0.75, 0.5);
  fill(0.625, 0.1875, 0.8125, 0.375, 0.0);
  return u;
}

}  // namespace tvdd
