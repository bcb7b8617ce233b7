#ifndef MMTOMO_RASTER_HPP
#define MMTOMO_RASTER_HPP

#include <vector>

#include "mmtomo/common.hpp"

namespace mmt {

/// Dense row-major 2-D image. (x, y) = (column, row), y*width + x indexing.
template <typename T>
class Image {
public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height, fill) {
    require(width > 0 && height > 0, ErrorKind::validation,
            "image dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool contains(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  /// Mirror coordinate into bounds (reflect-at-edge padding).
  int mirror_x(int x) const { return mirror(x, width_); }
  int mirror_y(int y) const { return mirror(y, height_); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool operator==(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           data_ == other.data_;
  }

private:
  static int mirror(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

}  // namespace mmt

#endif
