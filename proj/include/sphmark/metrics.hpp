#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sphmark/codec.hpp"
#include "sphmark/coupling.hpp"
#include "sphmark/image.hpp"

namespace sphmark {

/// Reported for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) on the unit range.
double psnr(const ErpImage& a, const ErpImage& b);

/// Mean local SSIM with an 11-tap Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2, averaged over channels. Windows wrap in longitude and stay
/// inside the raster in latitude. Needs height >= 11.
double ssim(const ErpImage& a, const ErpImage& b);

double bit_accuracy(const Payload& w, const Payload& w_hat);

/// Cosine of the real parts; 0 when either vector is zero. The two
/// vectors must share the same index order.
double bispectrum_cosine(const BispectrumVector& a, const BispectrumVector& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Share of bispectral energy carried by triplets whose degrees are all
/// <= cutoff.
double retained_energy_ratio(const ShCoefficients& c, int cutoff,
                             std::span<const TripletIndex> triplets);

struct NoiseBiasFit {
  double lambda = 0.0;
  double intercept = 1.0;
  double r2 = 0.0;
  /// (sigma, mean total-invariant ratio) per grid point.
  std::vector<std::pair<double, double>> ratios;
};

/// Monte-Carlo E[I~] / I for complex Gaussian coefficient noise of standard
/// deviation sigma on every block, fitted as intercept + lambda sigma^2.
/// Trials are drawn in antithetic pairs (eps, -eps), which leaves the
/// expectation unchanged and removes the odd-order sampling noise.
NoiseBiasFit noise_bias_fit(const ShCoefficients& cover, std::span<const double> sigmas,
                            int trials, std::span<const TripletIndex> triplets,
                            std::uint64_t seed);

/// Named scalars with the configuration that produced them.
struct MetricReport {
  std::vector<std::pair<std::string, double>> values;
  std::string config_echo;

  void add(const std::string& name, double v) { values.emplace_back(name, v); }
  double get(const std::string& name) const;
  std::string to_csv() const;
  std::string summary() const;
};

}  // namespace sphmark
