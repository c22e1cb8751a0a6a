#include "sphmark/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sphmark/error.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

double psnr(const ErpImage& a, const ErpImage& b) {
  require_same_shape(a, b, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  if (sum == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(static_cast<double>(a.size()) / sum));
}

namespace {

constexpr int kWindow = 11;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double s = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g[i] = std::exp(-x * x / (2 * 1.5 * 1.5));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

// Separable window average: wrap in columns, valid rows only.
std::vector<double> window_mean(const std::vector<double>& f, int h, int w,
                                const std::vector<double>& g) {
  std::vector<double> tmp(f.size());
  const int r = kWindow / 2;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) s += g[t + r] * f[i * w + ((j + t) % w + w) % w];
      tmp[i * w + j] = s;
    }
  }
  const int out_h = h - 2 * r;
  std::vector<double> out(static_cast<std::size_t>(out_h) * w);
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += g[t] * tmp[(i + t) * w + j];
      out[i * w + j] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const ErpImage& a, const ErpImage& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow) throw ValidationError("ssim needs height >= 11");
  const int h = a.height();
  const int w = a.width();
  const auto g = gaussian_window();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    std::vector<double> x(h * w), y(h * w), xx(h * w), yy(h * w), xy(h * w);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double u = a.at(i, j, ch), v = b.at(i, j, ch);
        const int p = i * w + j;
        x[p] = u;
        y[p] = v;
        xx[p] = u * u;
        yy[p] = v * v;
        xy[p] = u * v;
      }
    }
    const auto mx = window_mean(x, h, w, g), my = window_mean(y, h, w, g);
    const auto sxx = window_mean(xx, h, w, g), syy = window_mean(yy, h, w, g),
               sxy = window_mean(xy, h, w, g);
    double sum = 0.0;
    for (std::size_t p = 0; p < mx.size(); ++p) {
      const double vx = sxx[p] - mx[p] * mx[p];
      const double vy = syy[p] - my[p] * my[p];
      const double cxy = sxy[p] - mx[p] * my[p];
      sum += ((2 * mx[p] * my[p] + c1) * (2 * cxy + c2)) /
             ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

double bit_accuracy(const Payload& w, const Payload& w_hat) {
  if (w.size() != w_hat.size()) throw ValidationError("payload lengths differ");
  if (w.empty()) throw ValidationError("empty payload");
  std::size_t same = 0;
  for (std::size_t i = 0; i < w.size(); ++i) same += (w[i] != 0) == (w_hat[i] != 0);
  return static_cast<double>(same) / static_cast<double>(w.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different lengths");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double bispectrum_cosine(const BispectrumVector& a, const BispectrumVector& b) {
  if (a.index != b.index) throw ValidationError("bispectrum vectors use different orderings");
  const auto ra = a.real(), rb = b.real();
  return cosine_similarity(ra, rb);
}

double retained_energy_ratio(const ShCoefficients& c, int cutoff,
                             std::span<const TripletIndex> triplets) {
  if (cutoff < 0 || cutoff > c.l_max()) throw ValidationError("cutoff must lie in [0, l_max]");
  double kept = 0.0, all = 0.0;
  for (const auto& t : triplets) {
    const double e = std::norm(bispectrum_component(c, t));
    all += e;
    if (t.l3 <= cutoff && t.l2 <= cutoff && t.l1 <= cutoff) kept += e;
  }
  return all > 0.0 ? kept / all : 0.0;
}

NoiseBiasFit noise_bias_fit(const ShCoefficients& cover, std::span<const double> sigmas,
                            int trials, std::span<const TripletIndex> triplets,
                            std::uint64_t seed) {
  if (trials < 100) throw ValidationError("noise bias fit needs >= 100 trials");
  if (sigmas.size() < 2) throw ValidationError("noise bias fit needs >= 2 noise levels");
  const auto total = [&](const ShCoefficients& c) {
    Complex s(0.0, 0.0);
    for (const auto& t : triplets) s += bispectrum_component(c, t);
    return s.real();
  };
  const double base = total(cover);
  if (std::abs(base) < 1e-12) {
    throw ValidationError("cover invariant is too small for a ratio fit");
  }
  NoiseBiasFit fit;
  const int pairs = (trials + 1) / 2;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    const double sigma = sigmas[si];
    if (sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
    if (sigma == 0.0) {
      fit.ratios.emplace_back(0.0, 1.0);
      continue;
    }
    std::vector<double> sums(pairs, 0.0);
    parallel_for(0, pairs, [&](std::size_t p) {
      NormalSource normal(derive_seed(seed, si * 1000003 + p));
      ShCoefficients eps(cover.l_max(), cover.channels(), true);
      for (int ch = 0; ch < cover.channels(); ++ch) {
        for (int l = 0; l <= cover.l_max(); ++l) {
          eps.at(ch, l, 0) = Complex(sigma * normal.normal(), 0.0);
          for (int m = 1; m <= l; ++m) {
            const double re = normal.normal(), im = normal.normal();
            eps.at(ch, l, m) = Complex(re, im) * (sigma / std::sqrt(2.0));
          }
        }
      }
      eps.enforce_conjugate_symmetry();
      sums[p] = total(cover + eps) + total(cover - eps);
    });
    double mean = 0.0;
    for (double v : sums) mean += v;
    mean /= 2.0 * pairs;
    fit.ratios.emplace_back(sigma, mean / base);
  }
  // Least squares ratio = intercept + lambda * sigma^2.
  const double n = static_cast<double>(fit.ratios.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [s, r] : fit.ratios) {
    const double x = s * s;
    sx += x;
    sy += r;
    sxx += x * x;
    sxy += x * r;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) throw ValidationError("noise levels must not all be equal");
  fit.lambda = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.lambda * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / n;
  for (const auto& [s, r] : fit.ratios) {
    const double pred = fit.intercept + fit.lambda * s * s;
    ss_res += (r - pred) * (r - pred);
    ss_tot += (r - ybar) * (r - ybar);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return fit;
}

double MetricReport::get(const std::string& name) const {
  for (const auto& [k, v] : values) {
    if (k == name) return v;
  }
  throw ValidationError("metric '" + name + "' not in report");
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  if (!config_echo.empty()) os << "# config: " << config_echo << '\n';
  os << "metric,value\n";
  char buf[64];
  for (const auto& [k, v] : values) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    os << k << ',' << buf << '\n';
  }
  return os.str();
}

std::string MetricReport::summary() const {
  std::ostringstream os;
  char buf[96];
  for (const auto& [k, v] : values) {
    std::snprintf(buf, sizeof buf, "  %-18s %.6g\n", k.c_str(), v);
    os << buf;
  }
  return os.str();
}

}  // namespace sphmark
