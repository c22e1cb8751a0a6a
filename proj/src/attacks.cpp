#include "sphmark/attacks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "sphmark/error.hpp"
#include "sphmark/grid.hpp"
#include "sphmark/harmonics.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

namespace {

[[noreturn]] void grammar_error(const std::string& text, std::size_t pos, const std::string& why) {
  throw ValidationError("attack spec '" + text + "': " + why + " at position " +
                        std::to_string(pos));
}

struct Param {
  std::vector<double> values;
  std::size_t pos = 0;
};

// Splits "a=1,b=2,3" into {a: [1], b: [2, 3]}; pos is relative to `base`.
std::map<std::string, Param> parse_params(const std::string& full, const std::string& body,
                                          std::size_t base) {
  std::map<std::string, Param> out;
  std::string current;
  std::size_t i = 0;
  while (i <= body.size()) {
    const std::size_t end = std::min(body.find(',', i), body.size());
    const std::string item = body.substr(i, end - i);
    const std::size_t eq = item.find('=');
    std::string value = item;
    if (eq != std::string::npos) {
      current = item.substr(0, eq);
      if (current.empty()) grammar_error(full, base + i, "empty parameter name");
      if (out.count(current)) grammar_error(full, base + i, "repeated parameter '" + current + "'");
      out[current].pos = base + i;
      value = item.substr(eq + 1);
    } else if (current.empty()) {
      grammar_error(full, base + i, "expected key=value");
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (value.empty() || used != value.size() || !std::isfinite(v)) {
      grammar_error(full, base + i + (eq == std::string::npos ? 0 : eq + 1),
                    "invalid number '" + value + "'");
    }
    out[current].values.push_back(v);
    if (end == body.size()) break;
    i = end + 1;
  }
  return out;
}

double scalar(const std::string& full, const std::map<std::string, Param>& p,
              const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (it->second.values.size() != 1) grammar_error(full, it->second.pos, "'" + key + "' takes one value");
  return it->second.values[0];
}

void only_keys(const std::string& full, const std::map<std::string, Param>& p,
               std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) grammar_error(full, v.pos, "unknown parameter '" + k + "'");
  }
}

int integral(const std::string& full, const std::map<std::string, Param>& p,
             const std::string& key, int fallback) {
  const double v = scalar(full, p, key, fallback);
  if (v != std::floor(v)) grammar_error(full, p.at(key).pos, "'" + key + "' must be an integer");
  return static_cast<int>(v);
}

void require(const std::string& full, const std::map<std::string, Param>& p, const std::string& key,
             std::size_t fallback_pos, bool ok, const std::string& what) {
  if (ok) return;
  const auto it = p.find(key);
  grammar_error(full, it == p.end() ? fallback_pos : it->second.pos, "'" + key + "' " + what);
}

std::uint64_t seed_of(const std::string& full, const std::map<std::string, Param>& p, std::size_t pos) {
  const double v = scalar(full, p, "seed", 0.0);
  require(full, p, "seed", pos, v >= 0.0 && v == std::floor(v) && v < 9.007199254740992e15,
          "must be a non-negative integer below 2^53");
  return static_cast<std::uint64_t>(v);
}

DistortionSpec parse_at(const std::string& full, const std::string& text, std::size_t base);

std::vector<DistortionSpec> parse_list(const std::string& full, const std::string& body,
                                       std::size_t base) {
  std::vector<DistortionSpec> steps;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    const char ch = i < body.size() ? body[i] : ';';
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (ch == ';' && depth == 0) {
      if (i == start) grammar_error(full, base + i, "empty step in mixed list");
      steps.push_back(parse_at(full, body.substr(start, i - start), base + start));
      start = i + 1;
    }
  }
  return steps;
}

DistortionSpec parse_at(const std::string& full, const std::string& text, std::size_t base) {
  const std::size_t colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : text.substr(colon + 1);
  const std::size_t body_base = base + (colon == std::string::npos ? text.size() : colon + 1);
  DistortionSpec s;

  if (name == "mixed") {
    s.kind = AttackKind::kMixed;
    if (!body.empty() && body.front() == '[') {
      if (body.back() != ']') grammar_error(full, body_base + body.size(), "missing ']'");
      s.steps = parse_list(full, body.substr(1, body.size() - 2), body_base + 1);
      if (s.steps.empty()) grammar_error(full, body_base, "mixed needs at least one step");
      return s;
    }
    const auto p = parse_params(full, body, body_base);
    only_keys(full, p, {"n", "seed"});
    s.random_count = integral(full, p, "n", 3);
    s.seed = seed_of(full, p, body_base);
    require(full, p, "n", body_base, s.random_count >= 1 && s.random_count <= 8, "must lie in [1, 8]");
    return s;
  }

  const auto p = body.empty() ? std::map<std::string, Param>{} : parse_params(full, body, body_base);
  if (name == "identity" || name == "none") {
    only_keys(full, p, {});
    s.kind = AttackKind::kIdentity;
  } else if (name == "rotate") {
    only_keys(full, p, {"q", "zyz", "angle", "seed"});
    s.kind = AttackKind::kRotate;
    if (p.count("q")) {
      const auto& v = p.at("q").values;
      if (v.size() != 4) grammar_error(full, p.at("q").pos, "q needs four values");
      s.rotation = Rotation(v[0], v[1], v[2], v[3]);
    } else if (p.count("zyz")) {
      const auto& v = p.at("zyz").values;
      if (v.size() != 3) grammar_error(full, p.at("zyz").pos, "zyz needs three angles");
      s.rotation = Rotation::from_euler_zyz({v[0], v[1], v[2]});
    } else {
      s.random_rotation = true;
      s.angle = scalar(full, p, "angle", -1.0);
      require(full, p, "angle", body_base, !p.count("angle") || (s.angle >= 0.0 && s.angle <= kPi),
              "must lie in [0, pi]");
      s.seed = seed_of(full, p, body_base);
    }
  } else if (name == "specblur" || name == "blur_spectral") {
    only_keys(full, p, {"sigma", "lmax"});
    s.kind = AttackKind::kBlurSpectral;
    s.sigma = scalar(full, p, "sigma", 0.05);
    s.l_max = integral(full, p, "lmax", 16);
    require(full, p, "sigma", body_base, s.sigma >= 0.0, "must be >= 0");
    require(full, p, "lmax", body_base, s.l_max >= 0 && s.l_max <= 32, "must lie in [0, 32]");
  } else if (name == "blur" || name == "blur_spatial") {
    only_keys(full, p, {"sigma", "k"});
    s.kind = AttackKind::kBlurSpatial;
    s.sigma = scalar(full, p, "sigma", 3.0);
    s.kernel = integral(full, p, "k", 7);
    require(full, p, "sigma", body_base, s.sigma >= 0.0, "must be >= 0");
    require(full, p, "k", body_base, s.kernel >= 1 && s.kernel % 2 == 1, "must be odd and >= 1");
  } else if (name == "noise") {
    only_keys(full, p, {"std", "seed"});
    s.kind = AttackKind::kNoise;
    s.std_dev = scalar(full, p, "std", 0.05);
    require(full, p, "std", body_base, s.std_dev >= 0.0, "must be >= 0");
    s.seed = seed_of(full, p, body_base);
  } else if (name == "lowpass") {
    only_keys(full, p, {"lc"});
    s.kind = AttackKind::kLowpass;
    s.cutoff = integral(full, p, "lc", 12);
    require(full, p, "lc", body_base, s.cutoff >= 0 && s.cutoff <= 32, "must lie in [0, 32]");
  } else if (name == "resize") {
    only_keys(full, p, {"scale"});
    s.kind = AttackKind::kResize;
    s.scale = scalar(full, p, "scale", 0.5);
    require(full, p, "scale", body_base, s.scale > 0.0 && s.scale <= 1.0, "must lie in (0, 1]");
  } else if (name == "brightness") {
    only_keys(full, p, {"f"});
    s.kind = AttackKind::kBrightness;
    s.factor = scalar(full, p, "f", 1.3);
    require(full, p, "f", body_base, s.factor >= 0.5 && s.factor <= 1.5, "must lie in [0.5, 1.5]");
  } else if (name == "contrast") {
    only_keys(full, p, {"f"});
    s.kind = AttackKind::kContrast;
    s.factor = scalar(full, p, "f", 0.7);
    require(full, p, "f", body_base, s.factor >= 0.5 && s.factor <= 1.5, "must lie in [0.5, 1.5]");
  } else if (name == "jpeg" || name == "jpeg_approx") {
    only_keys(full, p, {"q"});
    s.kind = AttackKind::kJpeg;
    s.quality = integral(full, p, "q", 60);
    require(full, p, "q", body_base, s.quality >= 1 && s.quality <= 100, "must lie in [1, 100]");
  } else if (name == "median") {
    only_keys(full, p, {"k"});
    s.kind = AttackKind::kMedian;
    s.kernel = integral(full, p, "k", 3);
    require(full, p, "k", body_base, s.kernel >= 1 && s.kernel % 2 == 1, "must be odd and >= 1");
  } else {
    grammar_error(full, base, "unknown attack '" + name + "'");
  }
  return s;
}

std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

DistortionSpec parse_distortion(const std::string& text) {
  if (text.empty()) throw ValidationError("empty attack spec");
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      grammar_error(text, i, "whitespace is not allowed");
    }
  }
  return parse_at(text, text, 0);
}

std::string to_string(const DistortionSpec& s) {
  switch (s.kind) {
    case AttackKind::kIdentity: return "identity";
    case AttackKind::kRotate:
      if (s.random_rotation) {
        return "rotate:" + (s.angle > 0 ? "angle=" + fmt(s.angle) + "," : std::string()) +
               "seed=" + std::to_string(s.seed);
      }
      return "rotate:q=" + s.rotation.to_string();
    case AttackKind::kBlurSpectral:
      return "specblur:sigma=" + fmt(s.sigma) + ",lmax=" + std::to_string(s.l_max);
    case AttackKind::kBlurSpatial:
      return "blur:sigma=" + fmt(s.sigma) + ",k=" + std::to_string(s.kernel);
    case AttackKind::kNoise: return "noise:std=" + fmt(s.std_dev) + ",seed=" + std::to_string(s.seed);
    case AttackKind::kLowpass: return "lowpass:lc=" + std::to_string(s.cutoff);
    case AttackKind::kResize: return "resize:scale=" + fmt(s.scale);
    case AttackKind::kBrightness: return "brightness:f=" + fmt(s.factor);
    case AttackKind::kContrast: return "contrast:f=" + fmt(s.factor);
    case AttackKind::kJpeg: return "jpeg:q=" + std::to_string(s.quality);
    case AttackKind::kMedian: return "median:k=" + std::to_string(s.kernel);
    case AttackKind::kMixed: {
      if (s.random_count > 0) {
        return "mixed:n=" + std::to_string(s.random_count) + ",seed=" + std::to_string(s.seed);
      }
      std::string out = "mixed:[";
      for (std::size_t i = 0; i < s.steps.size(); ++i) {
        if (i) out += ";";
        out += to_string(s.steps[i]);
      }
      return out + "]";
    }
  }
  return "identity";
}

ErpImage attack_rotate(const ErpImage& x, const Rotation& r) { return rotate_image(x, r); }

ErpImage attack_blur_spectral(const ErpImage& x, double sigma, int l_max) {
  if (sigma < 0.0) throw ValidationError("spectral blur sigma must be >= 0");
  const auto c = forward_sht(x, l_max);
  ErpImage out = inverse_sht(apply_band_profile(c, heat_kernel_profile(l_max, sigma)), x.height());
  out.clamp_unit();
  return out;
}

ErpImage attack_blur_spatial(const ErpImage& x, double sigma_px, int kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ValidationError("blur kernel size must be odd and >= 1");
  }
  if (sigma_px < 0.0) throw ValidationError("blur sigma must be >= 0");
  const int r = kernel_size / 2;
  std::vector<double> g(kernel_size, 0.0);
  if (sigma_px == 0.0) {
    g[r] = 1.0;
  } else {
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
      g[i + r] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));
      sum += g[i + r];
    }
    for (auto& v : g) v /= sum;
  }
  const int h = x.height(), w = x.width(), nc = x.channels();
  ErpImage tmp(h, w, nc), out(h, w, nc);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int ch = 0; ch < nc; ++ch) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) s += g[t + r] * x.at(i, ((j + t) % w + w) % w, ch);
        tmp.at(i, j, ch) = s;
      }
    }
  }
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int ch = 0; ch < nc; ++ch) {
        double s = 0.0;
        for (int t = -r; t <= r; ++t) s += g[t + r] * tmp.at(std::clamp(i + t, 0, h - 1), j, ch);
        out.at(i, j, ch) = s;
      }
    }
  }
  out.clamp_unit();
  return out;
}

ErpImage attack_noise(const ErpImage& x, double std_dev, std::uint64_t seed) {
  if (std_dev < 0.0) throw ValidationError("noise std must be >= 0");
  if (std_dev == 0.0) return x;
  NormalSource normal(seed);
  ErpImage out = x;
  for (auto& v : out.data()) v += std_dev * normal.normal();
  out.clamp_unit();
  return out;
}

ErpImage attack_lowpass(const ErpImage& x, int cutoff) {
  if (cutoff < 0) throw ValidationError("low-pass cutoff must be >= 0");
  ErpImage out = inverse_sht(forward_sht(x, cutoff), x.height());
  out.clamp_unit();
  return out;
}

ErpImage attack_resize(const ErpImage& x, double scale) {
  if (!(scale > 0.0) || scale > 1.0) throw ValidationError("resize scale must lie in (0, 1]");
  const int small = std::max(1, static_cast<int>(std::floor(scale * x.height())));
  if (small == x.height()) return x;
  ErpImage out = resample(resample(x, small), x.height());
  out.clamp_unit();
  return out;
}

ErpImage attack_brightness(const ErpImage& x, double factor) {
  if (factor < 0.5 || factor > 1.5) throw ValidationError("brightness factor must lie in [0.5, 1.5]");
  ErpImage out = x;
  for (auto& v : out.data()) v *= factor;
  out.clamp_unit();
  return out;
}

ErpImage attack_contrast(const ErpImage& x, double factor) {
  if (factor < 0.5 || factor > 1.5) throw ValidationError("contrast factor must lie in [0.5, 1.5]");
  const auto w = quadrature_weights(x.height());
  const int nc = x.channels();
  std::vector<double> mean(nc, 0.0);
  double total = 0.0;
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      for (int ch = 0; ch < nc; ++ch) mean[ch] += w[i] * x.at(i, j, ch);
    }
    total += w[i] * x.width();
  }
  for (auto& m : mean) m /= total;
  ErpImage out = x;
  for (int i = 0; i < x.height(); ++i) {
    for (int j = 0; j < x.width(); ++j) {
      for (int ch = 0; ch < nc; ++ch) {
        out.at(i, j, ch) = mean[ch] + factor * (x.at(i, j, ch) - mean[ch]);
      }
    }
  }
  out.clamp_unit();
  return out;
}

namespace {

constexpr int kLuma[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                           14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                           18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                           49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

}  // namespace

ErpImage attack_jpeg_approx(const ErpImage& x, int quality) {
  if (quality < 1 || quality > 100) throw ValidationError("jpeg quality must lie in [1, 100]");
  const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  double q[64];
  for (int i = 0; i < 64; ++i) q[i] = std::max(1, (kLuma[i] * s + 50) / 100);
  double basis[8][8];
  for (int u = 0; u < 8; ++u) {
    const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
    for (int n = 0; n < 8; ++n) basis[u][n] = cu * std::cos((2 * n + 1) * u * kPi / 16.0);
  }
  const int h = x.height(), w = x.width(), nc = x.channels();
  ErpImage out = x;
  for (int ch = 0; ch < nc; ++ch) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        double blk[8][8], coef[8][8], tmp[8][8];
        for (int i = 0; i < 8; ++i) {
          for (int j = 0; j < 8; ++j) {
            blk[i][j] = 255.0 * x.at(std::min(by + i, h - 1), std::min(bx + j, w - 1), ch) - 128.0;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int j = 0; j < 8; ++j) {
            double acc = 0.0;
            for (int i = 0; i < 8; ++i) acc += basis[u][i] * blk[i][j];
            tmp[u][j] = acc;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int j = 0; j < 8; ++j) acc += tmp[u][j] * basis[v][j];
            const double qq = q[u * 8 + v];
            coef[u][v] = std::round(acc / qq) * qq;
          }
        }
        for (int i = 0; i < 8; ++i) {
          for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) acc += basis[u][i] * coef[u][v];
            tmp[i][v] = acc;
          }
        }
        for (int i = 0; i < 8 && by + i < h; ++i) {
          for (int j = 0; j < 8 && bx + j < w; ++j) {
            double acc = 0.0;
            for (int v = 0; v < 8; ++v) acc += tmp[i][v] * basis[v][j];
            out.at(by + i, bx + j, ch) = (acc + 128.0) / 255.0;
          }
        }
      }
    }
  }
  out.clamp_unit();
  return out;
}

ErpImage attack_median(const ErpImage& x, int kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ValidationError("median kernel size must be odd and >= 1");
  }
  const int r = kernel_size / 2;
  const int h = x.height(), w = x.width(), nc = x.channels();
  ErpImage out(h, w, nc);
  std::vector<double> win;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int ch = 0; ch < nc; ++ch) {
        win.clear();
        for (int di = -r; di <= r; ++di) {
          for (int dj = -r; dj <= r; ++dj) {
            win.push_back(x.at(std::clamp(i + di, 0, h - 1), ((j + dj) % w + w) % w, ch));
          }
        }
        std::nth_element(win.begin(), win.begin() + win.size() / 2, win.end());
        out.at(i, j, ch) = win[win.size() / 2];
      }
    }
  }
  return out;
}

std::vector<DistortionSpec> random_mix(int count, std::uint64_t seed) {
  Rng rng(seed);
  const auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  std::vector<int> kinds{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<DistortionSpec> out;
  for (int n = 0; n < count && !kinds.empty(); ++n) {
    const std::size_t pick = rng() % kinds.size();
    const int kind = kinds[pick];
    kinds.erase(kinds.begin() + static_cast<long>(pick));
    DistortionSpec s;
    switch (kind) {
      case 0: s.kind = AttackKind::kJpeg; s.quality = 60; break;
      case 1: s.kind = AttackKind::kResize; s.scale = 0.5; break;
      case 2: s.kind = AttackKind::kContrast; s.factor = uniform(0.7, 1.3); break;
      case 3: s.kind = AttackKind::kBrightness; s.factor = uniform(0.7, 1.3); break;
      case 4: s.kind = AttackKind::kNoise; s.std_dev = 0.05; s.seed = rng(); break;
      case 5: s.kind = AttackKind::kBlurSpatial; s.sigma = 3.0; s.kernel = 7; break;
      case 6: s.kind = AttackKind::kMedian; s.kernel = 3; break;
      default:
        s.kind = AttackKind::kRotate;
        s.random_rotation = true;
        s.angle = -1.0;
        s.seed = rng();
        break;
    }
    out.push_back(s);
  }
  return out;
}

ErpImage attack_mixed(const ErpImage& x, const std::vector<DistortionSpec>& steps) {
  if (steps.empty()) throw ValidationError("mixed attack needs at least one step");
  ErpImage y = x;
  for (const auto& s : steps) y = apply_distortion(y, s);
  return y;
}

ErpImage apply_distortion(const ErpImage& x, const DistortionSpec& s) {
  switch (s.kind) {
    case AttackKind::kIdentity: return x;
    case AttackKind::kRotate: {
      Rotation r = s.rotation;
      if (s.random_rotation) {
        r = s.angle > 0.0 ? random_axis_rotation(s.seed, s.angle) : random_rotation(s.seed);
      }
      return attack_rotate(x, r);
    }
    case AttackKind::kBlurSpectral: return attack_blur_spectral(x, s.sigma, s.l_max);
    case AttackKind::kBlurSpatial: return attack_blur_spatial(x, s.sigma, s.kernel);
    case AttackKind::kNoise: return attack_noise(x, s.std_dev, s.seed);
    case AttackKind::kLowpass: return attack_lowpass(x, s.cutoff);
    case AttackKind::kResize: return attack_resize(x, s.scale);
    case AttackKind::kBrightness: return attack_brightness(x, s.factor);
    case AttackKind::kContrast: return attack_contrast(x, s.factor);
    case AttackKind::kJpeg: return attack_jpeg_approx(x, s.quality);
    case AttackKind::kMedian: return attack_median(x, s.kernel);
    case AttackKind::kMixed:
      return attack_mixed(x, s.random_count > 0 ? random_mix(s.random_count, s.seed) : s.steps);
  }
  return x;
}

std::vector<std::pair<std::string, DistortionSpec>> standard_distortions(std::uint64_t seed) {
  std::vector<std::pair<std::string, DistortionSpec>> out;
  const auto add = [&](const std::string& name, const std::string& spec) {
    out.emplace_back(name, parse_distortion(spec));
  };
  add("none", "identity");
  add("rotate", "rotate:seed=" + std::to_string(derive_seed(seed, 1) % 1000000));
  add("blur", "blur:sigma=3,k=7");
  add("noise", "noise:std=0.05,seed=" + std::to_string(derive_seed(seed, 2) % 1000000));
  add("resize", "resize:scale=0.5");
  add("lowpass", "lowpass:lc=12");
  add("brightness_0.7", "brightness:f=0.7");
  add("brightness_1.3", "brightness:f=1.3");
  add("contrast_0.7", "contrast:f=0.7");
  add("contrast_1.3", "contrast:f=1.3");
  add("jpeg", "jpeg:q=60");
  add("median", "median:k=3");
  add("mixed", "mixed:n=3,seed=" + std::to_string(derive_seed(seed, 3) % 1000000));
  return out;
}

}  // namespace sphmark
