#pragma once

#include <cstddef>
#include <vector>

namespace sphmark {

/// Equirectangular raster of a spherical signal. Rows run from the north
/// pole (row 0) to the south pole; columns cover longitude [0, 2pi).
/// Samples are stored row-major, channels interleaved.
class ErpImage {
 public:
  ErpImage() = default;
  /// Throws ValidationError unless width == 2 * height and channels is 1 or 3.
  ErpImage(int height, int width, int channels, double fill = 0.0);

  static ErpImage with_height(int height, int channels, double fill = 0.0) {
    return ErpImage(height, 2 * height, channels, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int row, int col, int ch) noexcept {
    return data_[index(row, col, ch)];
  }
  double at(int row, int col, int ch) const noexcept {
    return data_[index(row, col, ch)];
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const ErpImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  /// Clamp every sample into [0, 1].
  void clamp_unit();
  /// True when all samples are finite and inside [0, 1].
  bool is_valid_unit() const;

 private:
  std::size_t index(int row, int col, int ch) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Throws ValidationError if the shapes differ.
void require_same_shape(const ErpImage& a, const ErpImage& b, const char* what);

}  // namespace sphmark
