#include "sphmark/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sphmark/error.hpp"

namespace sphmark {

std::array<double, 3> Direction::to_vector() const {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

Direction Direction::from_vector(const std::array<double, 3>& v) {
  const double rxy = std::hypot(v[0], v[1]);
  Direction d;
  d.theta = std::atan2(rxy, v[2]);
  double phi = std::atan2(v[1], v[0]);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi -= 2.0 * kPi;
  d.phi = phi;
  return d;
}

Direction pixel_center_direction(int row, int col, int height) {
  if (height < 1 || row < 0 || row >= height || col < 0 || col >= 2 * height) {
    throw ValidationError("pixel (" + std::to_string(row) + ", " +
                          std::to_string(col) + ") outside a height-" +
                          std::to_string(height) + " ERP grid");
  }
  return {kPi * (row + 0.5) / height, 2.0 * kPi * (col + 0.5) / (2 * height)};
}

PixelIndex nearest_pixel(const Direction& d, int height) {
  const int width = 2 * height;
  int row = static_cast<int>(std::floor(d.theta * height / kPi));
  row = std::clamp(row, 0, height - 1);
  double phi = std::fmod(d.phi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  int col = static_cast<int>(std::floor(phi * width / (2.0 * kPi)));
  col = ((col % width) + width) % width;
  return {row, col};
}

std::vector<double> quadrature_weights(int height) {
  if (height < 2) throw ValidationError("quadrature needs height >= 2");
  const int n = height;
  const double dphi = 2.0 * kPi / (2 * height);
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) {
    const double theta = row_colatitude(k, n);
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      s += std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
    }
    w[k] = (2.0 / n) * (1.0 - 2.0 * s) * dphi;
  }
  return w;
}

std::vector<double> cell_area_weights(int height) {
  if (height < 2) throw ValidationError("quadrature needs height >= 2");
  const double dphi = 2.0 * kPi / (2 * height);
  std::vector<double> w(height);
  for (int i = 0; i < height; ++i) {
    const double top = kPi * i / height;
    const double bottom = kPi * (i + 1) / height;
    w[i] = dphi * (std::cos(top) - std::cos(bottom));
  }
  return w;
}

std::vector<double> geometric_mask(int height) {
  if (height < 2) throw ValidationError("geometric mask needs height >= 2");
  std::vector<double> m(height);
  for (int i = 0; i < height; ++i) m[i] = std::sin(row_colatitude(i, height));
  return m;
}

std::vector<double> texture_mask(const ErpImage& x, double strength_floor,
                                 double gradient_scale) {
  if (strength_floor < 0.0 || strength_floor > 1.0) {
    throw ValidationError("texture mask floor must lie in [0, 1]");
  }
  if (!(gradient_scale > 0.0)) {
    throw ValidationError("texture mask gradient scale must be positive");
  }
  const int h = x.height();
  const int w = x.width();
  const int nc = x.channels();
  std::vector<double> mask(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    const int up = std::max(r - 1, 0);
    const int down = std::min(r + 1, h - 1);
    for (int c = 0; c < w; ++c) {
      const int left = (c + w - 1) % w;
      const int right = (c + 1) % w;
      double g = 0.0;
      for (int ch = 0; ch < nc; ++ch) {
        const double gx = 0.5 * (x.at(r, right, ch) - x.at(r, left, ch));
        const double gy = 0.5 * (x.at(down, c, ch) - x.at(up, c, ch));
        g += std::hypot(gx, gy);
      }
      g /= nc;
      const double s = 1.0 - std::exp(-g / gradient_scale);
      mask[static_cast<std::size_t>(r) * w + c] =
          strength_floor + (1.0 - strength_floor) * s;
    }
  }
  return mask;
}

void sample_bilinear(const ErpImage& x, const Direction& d, double* out) {
  const int h = x.height();
  const int w = x.width();
  const int nc = x.channels();
  double fr = d.theta * h / kPi - 0.5;
  fr = std::clamp(fr, 0.0, static_cast<double>(h - 1));
  const int r0 = std::min(static_cast<int>(fr), h - 1);
  const int r1 = std::min(r0 + 1, h - 1);
  const double t = fr - r0;

  const double fc = d.phi * w / (2.0 * kPi) - 0.5;
  const double fc_floor = std::floor(fc);
  const double u = fc - fc_floor;
  long c0 = static_cast<long>(fc_floor) % w;
  if (c0 < 0) c0 += w;
  const int c1 = static_cast<int>((c0 + 1) % w);
  const int c0i = static_cast<int>(c0);

  for (int ch = 0; ch < nc; ++ch) {
    const double top = (1.0 - u) * x.at(r0, c0i, ch) + u * x.at(r0, c1, ch);
    const double bot = (1.0 - u) * x.at(r1, c0i, ch) + u * x.at(r1, c1, ch);
    out[ch] = (1.0 - t) * top + t * bot;
  }
}

std::vector<double> sample_bilinear(const ErpImage& x, const Direction& d) {
  std::vector<double> out(x.channels());
  sample_bilinear(x, d, out.data());
  return out;
}

ErpImage resample(const ErpImage& x, int new_height) {
  if (new_height < 1) throw ValidationError("resample target height must be >= 1");
  if (new_height == x.height()) return x;
  ErpImage out = ErpImage::with_height(new_height, x.channels());
  for (int r = 0; r < new_height; ++r) {
    for (int c = 0; c < 2 * new_height; ++c) {
      sample_bilinear(x, pixel_center_direction(r, c, new_height), &out.at(r, c, 0));
    }
  }
  return out;
}

}  // namespace sphmark
