#include "sphmark/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sphmark/error.hpp"

namespace sphmark {

ErpImage::ErpImage(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width != 2 * height) {
    throw ValidationError("ERP image must satisfy width == 2 * height, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    throw ValidationError("ERP image must have 1 or 3 channels, got " +
                          std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void ErpImage::clamp_unit() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

bool ErpImage::is_valid_unit() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) {
    return std::isfinite(v) && v >= 0.0 && v <= 1.0;
  });
}

void require_same_shape(const ErpImage& a, const ErpImage& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(what) + ": image dimensions differ");
  }
}

}  // namespace sphmark
