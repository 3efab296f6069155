#pragma once

// Grayscale PGM (P2/P5, 8- or 16-bit) reading and writing, seeded Gaussian
// noise, and synthetic piecewise-constant test images.

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "tvdd/grid.hpp"

namespace tvdd {

struct GrayImage {
  CellField pixels;  // scaled to [0, 1] by max_value
  unsigned max_value = 255;
};

GrayImage load_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(std::string_view bytes);

/// Clamps to [0, 1] and quantizes to max_value levels. P5 unless binary is false.
void save_pgm(const CellField& image, const std::filesystem::path& path, unsigned max_value = 255, bool binary = true);
std::string encode_pgm(const CellField& image, unsigned max_value = 255, bool binary = true);

/// u + n, n_ij ~ N(0, variance) i.i.d. from Box-Muller over mt19937_64(seed). Not clamped.
CellField add_gaussian_noise(const CellField& image, double variance, std::uint64_t seed);

/// "blocks": flat rectangles on a flat background; "blocks-ramp" adds a horizontal ramp to the background.
CellField synthetic_image(std::string_view kind, std::size_t width, std::size_t height);

}  // namespace tvdd
