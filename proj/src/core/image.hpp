#pragma once

#include <cstdint>
#include <vector>

#include "core/error.hpp"

namespace obdet {

// Dense row-major raster. Used for grayscale images (uint8_t), disparity and
// depth planes (float) and miscellaneous masks.
template <typename T>
class Image {
public:
  Image() = default;
  Image(int width, int height, T fill = T{}) : w_(width), h_(height) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    px_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return px_.empty(); }
  std::size_t size() const { return px_.size(); }

  T& at(int x, int y) { return px_[static_cast<std::size_t>(y) * w_ + x]; }
  const T& at(int x, int y) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }

  T* row(int y) { return px_.data() + static_cast<std::size_t>(y) * w_; }
  const T* row(int y) const { return px_.data() + static_cast<std::size_t>(y) * w_; }

  T* data() { return px_.data(); }
  const T* data() const { return px_.data(); }

  bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }
  bool same_size(const Image& other) const { return w_ == other.w_ && h_ == other.h_; }

  bool operator==(const Image& other) const = default;

private:
  int w_ = 0, h_ = 0;
  std::vector<T> px_;
};

using ImageGray = Image<std::uint8_t>;

// Per-pixel disparity in pixels (fractional allowed). Invalid pixels carry -1.
struct DisparityMap {
  static constexpr float kInvalid = -1.0f;

  Image<float> px;

  DisparityMap() = default;
  DisparityMap(int w, int h) : px(w, h, kInvalid) {}

  int width() const { return px.width(); }
  int height() const { return px.height(); }
  bool valid(int x, int y) const { return px.at(x, y) >= 0.0f; }
};

// Per-pixel metric depth along the optical axis, meters. Invalid pixels carry
// 0; every valid value is positive and no larger than far_clip_m.
struct DepthMap {
  static constexpr float kInvalid = 0.0f;

  Image<float> px;
  double far_clip_m = 0.0;

  DepthMap() = default;
  DepthMap(int w, int h, double far_clip) : px(w, h, kInvalid), far_clip_m(far_clip) {}

  int width() const { return px.width(); }
  int height() const { return px.height(); }
  bool valid(int x, int y) const { return px.at(x, y) > 0.0f; }
};

}  // namespace obdet
