#include "sphmark/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sphmark/error.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1 / sqrt(2 pi)

double parity(int m) { return (m & 1) ? -1.0 : 1.0; }

}  // namespace

ShCoefficients::ShCoefficients(int l_max, int channels, bool real)
    : l_max_(l_max), channels_(channels), real_(real) {
  if (l_max < 0) throw ValidationError("l_max must be nonnegative");
  if (channels < 1) throw ValidationError("coefficients need >= 1 channel");
  data_.assign(static_cast<std::size_t>(channels) * (l_max + 1) * (l_max + 1),
               Complex(0.0, 0.0));
}

ShCoefficients& ShCoefficients::operator+=(const ShCoefficients& o) {
  if (!same_layout(o)) throw ValidationError("coefficient layouts differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  real_ = real_ && o.real_;
  return *this;
}

ShCoefficients& ShCoefficients::operator-=(const ShCoefficients& o) {
  if (!same_layout(o)) throw ValidationError("coefficient layouts differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  real_ = real_ && o.real_;
  return *this;
}

ShCoefficients& ShCoefficients::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

double ShCoefficients::norm_squared() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return s;
}

double ShCoefficients::conjugate_symmetry_error() const {
  double worst = 0.0;
  for (int ch = 0; ch < channels_; ++ch) {
    for (int l = 0; l <= l_max_; ++l) {
      worst = std::max(worst, std::abs(at(ch, l, 0).imag()));
      for (int m = 1; m <= l; ++m) {
        const Complex expect = parity(m) * std::conj(at(ch, l, m));
        worst = std::max(worst, std::abs(at(ch, l, -m) - expect));
      }
    }
  }
  return worst;
}

void ShCoefficients::enforce_conjugate_symmetry() {
  for (int ch = 0; ch < channels_; ++ch) {
    for (int l = 0; l <= l_max_; ++l) {
      at(ch, l, 0) = Complex(at(ch, l, 0).real(), 0.0);
      for (int m = 1; m <= l; ++m) {
        at(ch, l, -m) = parity(m) * std::conj(at(ch, l, m));
      }
    }
  }
  real_ = true;
}

void assoc_legendre_table(int l_max, double x, std::span<double> out) {
  const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0 / std::sqrt(2.0);
  for (int m = 0; m <= l_max; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    out[legendre_index(m, m)] = pmm;
    if (m == l_max) break;
    double prev2 = pmm;
    double prev1 = x * std::sqrt(2.0 * m + 3.0) * pmm;
    out[legendre_index(m + 1, m)] = prev1;
    double a_prev = std::sqrt(2.0 * m + 3.0);
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) /
                                 (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double cur = a * (x * prev1 - prev2 / a_prev);
      out[legendre_index(l, m)] = cur;
      prev2 = prev1;
      prev1 = cur;
      a_prev = a;
    }
  }
}

double assoc_legendre_normalized(int l, int m, double x) {
  if (m < 0 || m > l) {
    throw ValidationError("associated Legendre needs 0 <= m <= l");
  }
  if (!(std::abs(x) <= 1.0)) {
    throw ValidationError("associated Legendre argument outside [-1, 1]");
  }
  std::vector<double> table(legendre_index(l, l) + 1);
  assoc_legendre_table(l, x, table);
  return table[legendre_index(l, m)];
}

Complex sh_eval(int l, int m, const Direction& d) {
  if (l < 0 || std::abs(m) > l) {
    throw ValidationError("spherical harmonic needs |m| <= l");
  }
  const int am = std::abs(m);
  const double p = assoc_legendre_normalized(l, am, std::cos(d.theta));
  const Complex y = p * kInvSqrt2Pi * std::polar(1.0, am * d.phi);
  return m >= 0 ? y : parity(am) * std::conj(y);
}

namespace {

/// cos/sin(m phi_j) for m = 0..l_max at the column centers.
struct ColumnTrig {
  int width;
  std::vector<double> cos_v;
  std::vector<double> sin_v;
  ColumnTrig(int l_max, int w) : width(w), cos_v((l_max + 1) * w), sin_v((l_max + 1) * w) {
    for (int m = 0; m <= l_max; ++m) {
      for (int j = 0; j < w; ++j) {
        const double phi = 2.0 * kPi * (j + 0.5) / w;
        cos_v[m * w + j] = std::cos(m * phi);
        sin_v[m * w + j] = std::sin(m * phi);
      }
    }
  }
};

}  // namespace

ShCoefficients forward_sht(const ErpImage& x, int l_max) {
  if (x.height() < 2) throw ValidationError("forward SHT needs height >= 2");
  if (l_max < 0) throw ValidationError("l_max must be nonnegative");
  const int h = x.height();
  const int w = x.width();
  const int nc = x.channels();
  const auto weights = quadrature_weights(h);
  const ColumnTrig trig(l_max, w);
  const std::size_t nlm = legendre_index(l_max, l_max) + 1;

  // Per-row partial sums over m >= 0, reduced in row order afterwards.
  std::vector<Complex> partial(static_cast<std::size_t>(h) * nc * nlm);
  parallel_for(0, h, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    std::vector<double> plm(nlm);
    assoc_legendre_table(l_max, std::cos(row_colatitude(i, h)), plm);
    std::vector<Complex> fm(l_max + 1);
    for (int ch = 0; ch < nc; ++ch) {
      for (int m = 0; m <= l_max; ++m) {
        double re = 0.0;
        double im = 0.0;
        const double* cv = &trig.cos_v[m * w];
        const double* sv = &trig.sin_v[m * w];
        for (int j = 0; j < w; ++j) {
          const double v = x.at(i, j, ch);
          re += v * cv[j];
          im -= v * sv[j];
        }
        fm[m] = Complex(re, im) * (weights[i] * kInvSqrt2Pi);
      }
      Complex* out = &partial[(row * nc + ch) * nlm];
      for (int l = 0; l <= l_max; ++l) {
        for (int m = 0; m <= l; ++m) {
          out[legendre_index(l, m)] = fm[m] * plm[legendre_index(l, m)];
        }
      }
    }
  });

  ShCoefficients c(l_max, nc, true);
  for (int ch = 0; ch < nc; ++ch) {
    for (int l = 0; l <= l_max; ++l) {
      for (int m = 0; m <= l; ++m) {
        Complex s(0.0, 0.0);
        for (int i = 0; i < h; ++i) {
          s += partial[(static_cast<std::size_t>(i) * nc + ch) * nlm + legendre_index(l, m)];
        }
        c.at(ch, l, m) = s;
        if (m > 0) c.at(ch, l, -m) = parity(m) * std::conj(s);
      }
      c.at(ch, l, 0) = Complex(c.at(ch, l, 0).real(), 0.0);
    }
  }
  return c;
}

ErpImage inverse_sht(const ShCoefficients& c, int height, double imag_tolerance) {
  if (height < 1) throw ValidationError("inverse SHT needs height >= 1");
  const int l_max = c.l_max();
  const int nc = c.channels();
  if (nc != 1 && nc != 3) {
    throw ValidationError("inverse SHT produces 1- or 3-channel images only");
  }
  const int w = 2 * height;
  const ColumnTrig trig(l_max, w);
  const std::size_t nlm = legendre_index(l_max, l_max) + 1;
  ErpImage out = ErpImage::with_height(height, nc);
  std::vector<double> worst_imag(height, 0.0);

  parallel_for(0, height, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    std::vector<double> plm(nlm);
    assoc_legendre_table(l_max, std::cos(row_colatitude(i, height)), plm);
    std::vector<Complex> g(2 * l_max + 1);
    for (int ch = 0; ch < nc; ++ch) {
      for (int m = -l_max; m <= l_max; ++m) {
        const int am = std::abs(m);
        const double sign = m < 0 ? parity(am) : 1.0;
        Complex s(0.0, 0.0);
        for (int l = am; l <= l_max; ++l) {
          s += c.at(ch, l, m) * plm[legendre_index(l, am)];
        }
        g[m + l_max] = s * (sign * kInvSqrt2Pi);
      }
      for (int j = 0; j < w; ++j) {
        Complex f = g[l_max];
        for (int m = 1; m <= l_max; ++m) {
          const Complex e(trig.cos_v[m * w + j], trig.sin_v[m * w + j]);
          f += g[l_max + m] * e + g[l_max - m] * std::conj(e);
        }
        out.at(i, j, ch) = f.real();
        worst_imag[row] = std::max(worst_imag[row], std::abs(f.imag()));
      }
    }
  });

  if (c.is_real()) {
    const double worst = *std::max_element(worst_imag.begin(), worst_imag.end());
    if (worst > imag_tolerance) {
      throw NumericalError("inverse SHT: imaginary residue " + std::to_string(worst) +
                           " exceeds tolerance; coefficients are not conjugate symmetric");
    }
  }
  return out;
}

std::vector<double> power_spectrum(const ShCoefficients& c) {
  std::vector<double> p(c.l_max() + 1, 0.0);
  for (int ch = 0; ch < c.channels(); ++ch) {
    for (int l = 0; l <= c.l_max(); ++l) {
      for (const auto& v : c.block(ch, l)) p[l] += std::norm(v);
    }
  }
  return p;
}

ShCoefficients apply_band_profile(const ShCoefficients& c, const BandProfile& g) {
  if (static_cast<int>(g.size()) < c.l_max() + 1) {
    throw ValidationError("band profile does not cover 0..l_max");
  }
  ShCoefficients out = c;
  for (int ch = 0; ch < c.channels(); ++ch) {
    for (int l = 0; l <= c.l_max(); ++l) {
      for (auto& v : out.block(ch, l)) v *= g[l];
    }
  }
  return out;
}

BandProfile heat_kernel_profile(int l_max, double sigma) {
  if (sigma < 0.0) throw ValidationError("heat kernel sigma must be >= 0");
  BandProfile g(l_max + 1);
  for (int l = 0; l <= l_max; ++l) g[l] = std::exp(-sigma * sigma * l * (l + 1.0));
  return g;
}

ShCoefficients low_pass(const ShCoefficients& c, int cutoff) {
  if (cutoff < 0 || cutoff > c.l_max()) {
    throw ValidationError("low-pass cutoff must lie in [0, l_max]");
  }
  BandProfile g(c.l_max() + 1, 0.0);
  std::fill(g.begin(), g.begin() + cutoff + 1, 1.0);
  return apply_band_profile(c, g);
}

ShCoefficients restrict_degrees(const ShCoefficients& c, std::span<const int> degrees) {
  BandProfile g(c.l_max() + 1, 0.0);
  for (int l : degrees) {
    if (l >= 0 && l <= c.l_max()) g[l] = 1.0;
  }
  return apply_band_profile(c, g);
}

ShCoefficients synth_random_bandlimited(int l_max, std::uint64_t seed, double decay,
                                        int channels, double scale, double dc_mean) {
  if (!(decay > 0.0)) throw ValidationError("spectral decay must be positive");
  ShCoefficients c(l_max, channels, true);
  NormalSource normal(seed);
  for (int ch = 0; ch < channels; ++ch) {
    c.at(ch, 0, 0) = Complex(dc_mean * std::sqrt(4.0 * kPi), 0.0);
    for (int l = 1; l <= l_max; ++l) {
      const double sd = scale * std::pow(1.0 + l, -decay);
      c.at(ch, l, 0) = Complex(sd * normal.normal(), 0.0);
      for (int m = 1; m <= l; ++m) {
        const double re = normal.normal();
        const double im = normal.normal();
        c.at(ch, l, m) = Complex(re, im) * (sd / std::sqrt(2.0));
      }
    }
  }
  c.enforce_conjugate_symmetry();
  return c;
}

void block_to_real(std::span<const Complex> block, std::span<double> out) {
  const int l = static_cast<int>(block.size() - 1) / 2;
  out[0] = block[l].real();
  for (int m = 1; m <= l; ++m) {
    out[2 * m - 1] = std::sqrt(2.0) * block[l + m].real();
    out[2 * m] = std::sqrt(2.0) * block[l + m].imag();
  }
}

void real_to_block(std::span<const double> in, std::span<Complex> block) {
  const int l = static_cast<int>(block.size() - 1) / 2;
  block[l] = Complex(in[0], 0.0);
  for (int m = 1; m <= l; ++m) {
    const Complex v = Complex(in[2 * m - 1], in[2 * m]) / std::sqrt(2.0);
    block[l + m] = v;
    block[l - m] = parity(m) * std::conj(v);
  }
}

}  // namespace sphmark
