#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sphmark/grid.hpp"
#include "sphmark/image.hpp"

namespace sphmark {

using Complex = std::complex<double>;

/// Banded spherical-harmonic coefficients c_l^m, l = 0..l_max, m = -l..l,
/// one band set per channel. Storage is (channel, l, m ascending), so a
/// degree block is a contiguous span of length 2l + 1.
class ShCoefficients {
 public:
  ShCoefficients() = default;
  ShCoefficients(int l_max, int channels, bool real = true);

  int l_max() const noexcept { return l_max_; }
  int channels() const noexcept { return channels_; }
  bool is_real() const noexcept { return real_; }
  void set_real(bool real) noexcept { real_ = real; }

  static constexpr std::size_t block_offset(int l) noexcept {
    return static_cast<std::size_t>(l) * l;
  }
  std::size_t per_channel() const noexcept {
    return static_cast<std::size_t>(l_max_ + 1) * (l_max_ + 1);
  }

  Complex& at(int ch, int l, int m) noexcept {
    return data_[ch * per_channel() + block_offset(l) + l + m];
  }
  const Complex& at(int ch, int l, int m) const noexcept {
    return data_[ch * per_channel() + block_offset(l) + l + m];
  }

  std::span<Complex> block(int ch, int l) noexcept {
    return {data_.data() + ch * per_channel() + block_offset(l),
            static_cast<std::size_t>(2 * l + 1)};
  }
  std::span<const Complex> block(int ch, int l) const noexcept {
    return {data_.data() + ch * per_channel() + block_offset(l),
            static_cast<std::size_t>(2 * l + 1)};
  }

  std::vector<Complex>& data() noexcept { return data_; }
  const std::vector<Complex>& data() const noexcept { return data_; }

  bool same_layout(const ShCoefficients& o) const noexcept {
    return l_max_ == o.l_max_ && channels_ == o.channels_;
  }

  ShCoefficients& operator+=(const ShCoefficients& o);
  ShCoefficients& operator-=(const ShCoefficients& o);
  ShCoefficients& operator*=(double s);
  friend ShCoefficients operator+(ShCoefficients a, const ShCoefficients& b) {
    return a += b;
  }
  friend ShCoefficients operator-(ShCoefficients a, const ShCoefficients& b) {
    return a -= b;
  }
  friend ShCoefficients operator*(double s, ShCoefficients a) { return a *= s; }

  /// Sum of |c|^2 over everything.
  double norm_squared() const;
  /// Largest |c_l^{-m} - (-1)^m conj(c_l^m)| over all blocks.
  double conjugate_symmetry_error() const;
  /// Overwrites negative orders from positive ones and forces c_l^0 real.
  void enforce_conjugate_symmetry();

 private:
  int l_max_ = 0;
  int channels_ = 0;
  bool real_ = true;
  std::vector<Complex> data_;
};

/// Per-degree multiplier g(l), l = 0..l_max.
using BandProfile = std::vector<double>;

/// Orthonormal associated Legendre function (Condon-Shortley phase included)
/// such that Y_l^m = P_l^m(cos theta) e^{i m phi} / sqrt(2 pi).
/// Throws ValidationError unless 0 <= m <= l and |x| <= 1.
double assoc_legendre_normalized(int l, int m, double x);

/// All P_l^m(x) for 0 <= m <= l <= l_max at one x; index l*(l+1)/2 + m.
void assoc_legendre_table(int l_max, double x, std::span<double> out);
inline std::size_t legendre_index(int l, int m) {
  return static_cast<std::size_t>(l) * (l + 1) / 2 + m;
}

/// Complex orthonormal spherical harmonic. Throws ValidationError if |m| > l.
Complex sh_eval(int l, int m, const Direction& d);

/// Quadrature analysis c_l^m = sum_pixels w * x * conj(Y_l^m).
ShCoefficients forward_sht(const ErpImage& x, int l_max);

/// Synthesis at pixel centers. For real-flagged input the imaginary part of
/// the synthesized field is checked against imag_tolerance and dropped; a
/// larger residue raises NumericalError. The result is not clamped.
ErpImage inverse_sht(const ShCoefficients& c, int height,
                     double imag_tolerance = 1e-7);

/// P(l) = sum_m |c_l^m|^2, summed over channels.
std::vector<double> power_spectrum(const ShCoefficients& c);

ShCoefficients apply_band_profile(const ShCoefficients& c, const BandProfile& g);

/// g(l) = exp(-sigma^2 l (l + 1)), the spherical heat kernel.
BandProfile heat_kernel_profile(int l_max, double sigma);

ShCoefficients low_pass(const ShCoefficients& c, int cutoff);

/// Keeps only the listed degrees (everything else zeroed).
ShCoefficients restrict_degrees(const ShCoefficients& c,
                                std::span<const int> degrees);

/// Gaussian coefficients with standard deviation scale * (1 + l)^-decay for
/// l >= 1 and a DC term of dc_mean * sqrt(4 pi) (so the field mean is
/// dc_mean), then conjugate symmetrized. Deterministic in seed.
ShCoefficients synth_random_bandlimited(int l_max, std::uint64_t seed,
                                        double decay = 1.5, int channels = 1,
                                        double scale = 1.0,
                                        double dc_mean = 0.0);

/// Real orthonormal coordinates of one degree block and back. The map
/// x[0] = c^0, c^{+-m} built from (x[2m-1] + i x[2m]) / sqrt(2) is an
/// isometry between R^{2l+1} and the conjugate-symmetric subspace.
void block_to_real(std::span<const Complex> block, std::span<double> out);
void real_to_block(std::span<const double> in, std::span<Complex> block);

}  // namespace sphmark
