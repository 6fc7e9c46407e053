#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace exwarp {

struct Vec2f {
  float x = 0.0f;
  float y = 0.0f;
  bool operator==(const Vec2f&) const = default;
};

struct Vec3f {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  bool operator==(const Vec3f&) const = default;
};

struct Vec2d {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2d&) const = default;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// Dense row-major 2-D raster.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <class U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  T& operator()(int x, int y) {
    assert(contains(x, y));
    return cells_[index(x, y)];
  }
  const T& operator()(int x, int y) const {
    assert(contains(x, y));
    return cells_[index(x, y)];
  }
  T& operator[](std::size_t i) { return cells_[i]; }
  const T& operator[](std::size_t i) const { return cells_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::span<T> cells() { return cells_; }
  std::span<const T> cells() const { return cells_; }

  void fill(const T& value) { std::fill(cells_.begin(), cells_.end(), value); }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

/// An 8-bit RGB raster stamped with the quarter-slot it represents.
struct Frame {
  Grid<Rgb8> pixels;
  std::int64_t timestamp = 0;

  Frame() = default;
  Frame(int width, int height, std::int64_t ts = 0, Rgb8 fill = {0, 0, 0})
      : pixels(width, height, fill), timestamp(ts) {}

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
  bool same_size(const Frame& other) const { return pixels.same_shape(other.pixels); }

  /// Interleaved RGB bytes, row-major.
  std::span<const std::uint8_t> bytes() const {
    return {reinterpret_cast<const std::uint8_t*>(pixels.cells().data()), pixels.size() * 3};
  }
  std::span<std::uint8_t> bytes() {
    return {reinterpret_cast<std::uint8_t*>(pixels.cells().data()), pixels.size() * 3};
  }

  /// Pixel equality; timestamps are not compared.
  bool same_pixels(const Frame& other) const { return pixels == other.pixels; }
  bool operator==(const Frame&) const = default;
};

static_assert(sizeof(Rgb8) == 3);

}  // namespace exwarp
