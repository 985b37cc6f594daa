#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace orbseg {

using ClassIndex = std::uint8_t;

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr auto operator<=>(const Rgb8&, const Rgb8&) = default;
};

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  Rgb8 at(int row, int col) const {
    const std::size_t i = (static_cast<std::size_t>(row) * width + col) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int row, int col, Rgb8 c) {
    const std::size_t i = (static_cast<std::size_t>(row) * width + col) * 3;
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Row-major class indices, one byte per pixel.
struct CategoricalMask {
  int width = 0;
  int height = 0;
  std::vector<ClassIndex> data;

  CategoricalMask() = default;
  CategoricalMask(int w, int h, ClassIndex fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  ClassIndex at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  void set(int row, int col, ClassIndex v) { data[static_cast<std::size_t>(row) * width + col] = v; }

  friend bool operator==(const CategoricalMask&, const CategoricalMask&) = default;
};

}  // namespace orbseg
