#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sphmark/image.hpp"
#include "sphmark/so3.hpp"

namespace sphmark {

enum class AttackKind {
  kIdentity,
  kRotate,
  kBlurSpectral,
  kBlurSpatial,
  kNoise,
  kLowpass,
  kResize,
  kBrightness,
  kContrast,
  kJpeg,
  kMedian,
  kMixed,
};

/// A parsed distortion. Unused fields keep their defaults.
struct DistortionSpec {
  AttackKind kind = AttackKind::kIdentity;
  Rotation rotation;
  /// Rotate only: when > 0 the rotation is drawn from seed with this angle.
  double angle = 0.0;
  bool random_rotation = false;
  double sigma = 0.0;
  int kernel = 7;
  double std_dev = 0.0;
  int cutoff = 16;
  int l_max = 16;
  double scale = 1.0;
  double factor = 1.0;
  int quality = 60;
  std::uint64_t seed = 0;
  /// Mixed only: either explicit steps or, when random_count > 0, that many
  /// steps drawn from the standard grid with seed.
  std::vector<DistortionSpec> steps;
  int random_count = 0;
};

/// Grammar, whitespace-free:
///   spec   := name [":" params]
///   params := key "=" value ("," value)* ("," key "=" value ("," value)*)*
///   mixed  := "mixed:[" spec (";" spec)* "]" | "mixed:n=3,seed=5"
/// Names: identity, rotate (q=w,x,y,z | zyz=a,b,c | angle=r,seed=s),
/// specblur (sigma, lmax), blur (sigma, k), noise (std, seed),
/// lowpass (lc), resize (scale), brightness (f), contrast (f),
/// jpeg (q), median (k), mixed. Long names blur_spectral, blur_spatial and
/// jpeg_approx are accepted too. Errors name the character position.
DistortionSpec parse_distortion(const std::string& text);
std::string to_string(const DistortionSpec& spec);

ErpImage apply_distortion(const ErpImage& x, const DistortionSpec& spec);

ErpImage attack_rotate(const ErpImage& x, const Rotation& r);
/// SHT at l_max, heat-kernel profile, ISHT, clamp.
ErpImage attack_blur_spectral(const ErpImage& x, double sigma, int l_max);
/// Separable Gaussian in the ERP plane; longitude wraps, latitude clamps.
ErpImage attack_blur_spatial(const ErpImage& x, double sigma_px, int kernel_size);
ErpImage attack_noise(const ErpImage& x, double std_dev, std::uint64_t seed);
ErpImage attack_lowpass(const ErpImage& x, int cutoff);
/// Bilinear down to floor(scale * H) and back up.
ErpImage attack_resize(const ErpImage& x, double scale);
ErpImage attack_brightness(const ErpImage& x, double factor);
/// mean + factor (x - mean), mean per channel under the quadrature weights.
ErpImage attack_contrast(const ErpImage& x, double factor);
/// 8x8 block DCT quantization with the standard luminance table and the
/// usual quality scaling, per channel; edge blocks are padded by replication.
ErpImage attack_jpeg_approx(const ErpImage& x, int quality);
ErpImage attack_median(const ErpImage& x, int kernel_size);
ErpImage attack_mixed(const ErpImage& x, const std::vector<DistortionSpec>& steps);

/// Draws `count` distinct single distortions from the benchmark grid.
std::vector<DistortionSpec> random_mix(int count, std::uint64_t seed);

/// One spec per single distortion of the benchmark grid plus a mixed row.
std::vector<std::pair<std::string, DistortionSpec>> standard_distortions(std::uint64_t seed);

}  // namespace sphmark
