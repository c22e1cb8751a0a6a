#pragma once

#include <array>
#include <vector>

#include "sphmark/image.hpp"

namespace sphmark {

inline constexpr double kPi = 3.14159265358979323846;

/// Point on the unit sphere. theta is colatitude in [0, pi] (0 = north
/// pole), phi is longitude in [0, 2pi).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  std::array<double, 3> to_vector() const;
  static Direction from_vector(const std::array<double, 3>& v);
};

struct PixelIndex {
  int row = 0;
  int col = 0;
};

Direction pixel_center_direction(int row, int col, int height);
PixelIndex nearest_pixel(const Direction& d, int height);

inline double row_colatitude(int row, int height) {
  return kPi * (row + 0.5) / height;
}

/// Per-row quadrature weights used by the transforms. weights[i] is the weight
/// of a single pixel in row i (the longitude step is already folded in), so
/// the sum over all H * 2H pixels is 4pi.
///
/// The weights are Fejer's first rule in cos(theta) on the pixel-center
/// colatitudes: they integrate every polynomial in cos(theta) of degree < H
/// exactly, hence products of harmonics up to degree (H-1)/2 are integrated
/// to rounding error.
std::vector<double> quadrature_weights(int height);

/// Exact solid angle of a single pixel cell in each row:
/// (2pi / W) * (cos(theta_top) - cos(theta_bottom)).
std::vector<double> cell_area_weights(int height);

/// sin(theta_i) at the row centers; attenuates edits near the poles.
std::vector<double> geometric_mask(int height);

/// Analytic texture mask. Central-difference gradient magnitude averaged
/// over channels, squashed by 1 - exp(-g / scale), mapped into
/// [floor, 1]. Flat regions get the floor, busy regions approach 1.
/// Returned row-major with one value per pixel.
std::vector<double> texture_mask(const ErpImage& x, double strength_floor,
                                 double gradient_scale = 0.02);

/// Bilinear sample with longitude wrap-around and row clamping at the first
/// and last row centers. Writes one value per channel into out.
void sample_bilinear(const ErpImage& x, const Direction& d, double* out);
std::vector<double> sample_bilinear(const ErpImage& x, const Direction& d);

/// Bilinear resize of a full ERP raster to a new height (width = 2 * height),
/// using the same sampling rule at the destination pixel centers.
ErpImage resample(const ErpImage& x, int new_height);

}  // namespace sphmark
