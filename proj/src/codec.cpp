#include "sphmark/codec.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "sphmark/error.hpp"
#include "sphmark/grid.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

Payload parse_payload(const std::string& text, int bits) {
  if (bits < 1) throw ValidationError("payload needs at least one bit");
  Payload w;
  if (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0) {
    const std::string hex = text.substr(2);
    const std::size_t nibbles = (static_cast<std::size_t>(bits) + 3) / 4;
    if (hex.size() != nibbles) {
      throw ValidationError("hex payload must have " + std::to_string(nibbles) +
                            " digits for " + std::to_string(bits) + " bits");
    }
    std::vector<std::uint8_t> all;
    for (char ch : hex) {
      int v = 0;
      if (ch >= '0' && ch <= '9') v = ch - '0';
      else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
      else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
      else throw ValidationError(std::string("invalid hex digit '") + ch + "' in payload");
      for (int b = 3; b >= 0; --b) all.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    }
    const std::size_t pad = all.size() - bits;
    for (std::size_t i = 0; i < pad; ++i) {
      if (all[i]) throw ValidationError("hex payload has bits beyond the payload length");
    }
    w.assign(all.begin() + pad, all.end());
    return w;
  }
  if (static_cast<int>(text.size()) != bits) {
    throw ValidationError("bit-string payload must have exactly " + std::to_string(bits) +
                          " characters");
  }
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      throw ValidationError("bit-string payload may only contain 0 and 1");
    }
    w.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return w;
}

std::string payload_bits(const Payload& w) {
  std::string s;
  for (auto b : w) s.push_back(b ? '1' : '0');
  return s;
}

std::string payload_hex(const Payload& w) {
  static const char* digits = "0123456789abcdef";
  const std::size_t pad = (4 - w.size() % 4) % 4;
  std::vector<std::uint8_t> all(pad, 0);
  all.insert(all.end(), w.begin(), w.end());
  std::string s = "0x";
  for (std::size_t i = 0; i < all.size(); i += 4) {
    s.push_back(digits[all[i] * 8 + all[i + 1] * 4 + all[i + 2] * 2 + all[i + 3]]);
  }
  return s;
}

Payload random_payload(int bits, std::uint64_t seed) {
  Rng rng(seed);
  Payload w(bits);
  for (auto& b : w) b = static_cast<std::uint8_t>(rng() >> 63);
  return w;
}

int embedding_capacity(const CodecConfig& cfg, int channels) {
  int dim = 0;
  for (int l : cfg.embed_degrees) dim += 2 * l + 1;
  return dim * channels;
}

void CodecConfig::validate(int channels) const {
  if (l_max < 1 || l_max > 32) throw ValidationError("l_max must lie in [1, 32]");
  if (embed_degrees.empty()) throw ValidationError("embed degree set is empty");
  std::set<int> seen;
  for (int l : embed_degrees) {
    if (l <= 0 || l > l_max) {
      throw ValidationError("embed degrees must lie in [1, l_max]; got " + std::to_string(l));
    }
    if (!seen.insert(l).second) throw ValidationError("embed degrees must be distinct");
  }
  if (bits < 1) throw ValidationError("payload length must be >= 1");
  if (groups < 1 || channels % groups != 0) {
    throw ValidationError("groups (" + std::to_string(groups) +
                          ") must divide the channel multiplicity (" +
                          std::to_string(channels) + ")");
  }
  const int cap = embedding_capacity(*this, channels);
  if (bits > cap) {
    throw ValidationError("payload of " + std::to_string(bits) +
                          " bits exceeds the orthogonal capacity; at most " +
                          std::to_string(cap) + " bits fit these embed degrees");
  }
  if (!(strength >= 0.0) || !(alpha_override >= 0.0)) {
    throw ValidationError("embedding strength must be nonnegative");
  }
  if (mask_floor < 0.0 || mask_floor > 1.0) {
    throw ValidationError("mask floor must lie in [0, 1]");
  }
}

std::vector<FeatureIndex> feature_layout(const CodecConfig& cfg, int channels) {
  const int per_group = channels / cfg.groups;
  const auto local = coupled_layout(cfg.embed_degrees, cfg.l_max, per_group);
  std::vector<FeatureIndex> out;
  out.reserve(local.size() * cfg.groups);
  for (int g = 0; g < cfg.groups; ++g) {
    for (auto f : local) {
      for (auto& ch : f.channels) ch += g * per_group;
      out.push_back(f);
    }
  }
  return out;
}

PatternBank generate_patterns(std::uint64_t key, const CodecConfig& cfg, int channels) {
  cfg.validate(channels);
  const int per_group = channels / cfg.groups;
  std::vector<int> degrees = cfg.embed_degrees;
  std::sort(degrees.begin(), degrees.end());

  // Slots of each group, degree-major; bits go round-robin over the group's
  // slots, skipping full ones.
  std::vector<std::vector<Slot>> slots(cfg.groups);
  for (int g = 0; g < cfg.groups; ++g) {
    for (int l : degrees) {
      for (int ch = 0; ch < per_group; ++ch) slots[g].push_back({l, g * per_group + ch});
    }
  }
  PatternBank bank;
  std::map<Slot, std::vector<int>> members;
  std::vector<int> cursor(cfg.groups, 0);
  for (int k = 0; k < cfg.bits; ++k) {
    int g = k % cfg.groups;
    // A group can run out of room before the others; spill to the next one.
    Slot chosen{-1, -1};
    for (int tries = 0; tries < cfg.groups && chosen.l < 0; ++tries, g = (g + 1) % cfg.groups) {
      const auto& gs = slots[g];
      for (std::size_t step = 0; step < gs.size(); ++step) {
        const Slot s = gs[(cursor[g] + step) % gs.size()];
        if (static_cast<int>(members[s].size()) < 2 * s.l + 1) {
          chosen = s;
          cursor[g] = static_cast<int>((cursor[g] + step + 1) % gs.size());
          break;
        }
      }
      if (chosen.l >= 0) break;
    }
    bank.slot.push_back(chosen);
    bank.group.push_back(g);
    members[chosen].push_back(k);
  }

  bank.patterns.assign(cfg.bits, ShCoefficients(cfg.l_max, channels, true));
  for (const auto& [slot, bits] : members) {
    const int n = 2 * slot.l + 1;
    NormalSource normal(derive_seed(key, static_cast<std::uint64_t>(slot.l) * 64 + slot.channel));
    std::vector<Eigen::VectorXd> basis;
    for (int k : bits) {
      Eigen::VectorXd v(n);
      double norm = 0.0;
      while (norm < 1e-6) {
        for (int i = 0; i < n; ++i) v(i) = normal.normal();
        for (int pass = 0; pass < 2; ++pass) {
          for (const auto& b : basis) v -= b.dot(v) * b;
        }
        norm = v.norm();
      }
      v /= norm;
      basis.push_back(v);
      std::vector<double> coords(v.data(), v.data() + n);
      real_to_block(coords, bank.patterns[k].block(slot.channel, slot.l));
    }
  }
  return bank;
}

double cover_rms(const ShCoefficients& c, const CodecConfig& cfg) {
  double energy = 0.0;
  int count = 0;
  for (int ch = 0; ch < c.channels(); ++ch) {
    for (int l : cfg.embed_degrees) {
      for (const auto& v : c.block(ch, l)) energy += std::norm(v);
      count += 2 * l + 1;
    }
  }
  return count ? std::sqrt(energy / count) : 0.0;
}

namespace {

double resolve_alpha(const ShCoefficients& c, const CodecConfig& cfg) {
  return cfg.alpha_override > 0.0 ? cfg.alpha_override : cfg.strength * cover_rms(c, cfg);
}

ShCoefficients modulated_sum(const PatternBank& bank, const Payload& w, double alpha) {
  ShCoefficients d = bank.patterns.front();
  d *= 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = w[k] ? alpha : -alpha;
    for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] += s * bank.patterns[k].data()[i];
  }
  return d;
}

std::vector<double> combined_mask(const ErpImage& x, const CodecConfig& cfg) {
  const int h = x.height();
  const int w = x.width();
  std::vector<double> m(static_cast<std::size_t>(h) * w, 1.0);
  if (cfg.use_texture_mask) m = texture_mask(x, cfg.mask_floor);
  if (cfg.use_geometric_mask) {
    const auto geo = geometric_mask(h);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) m[static_cast<std::size_t>(r) * w + c] *= geo[r];
    }
  }
  return m;
}

ErpImage apply_mask(const ErpImage& x, const std::vector<double>& mask) {
  ErpImage out = x;
  const int nc = x.channels();
  for (std::size_t p = 0; p < mask.size(); ++p) {
    for (int ch = 0; ch < nc; ++ch) out.data()[p * nc + ch] *= mask[p];
  }
  return out;
}

void check_payload(const Payload& w, const CodecConfig& cfg) {
  if (static_cast<int>(w.size()) != cfg.bits) {
    throw ValidationError("payload has " + std::to_string(w.size()) + " bits, config expects " +
                          std::to_string(cfg.bits));
  }
}

}  // namespace

ShCoefficients embed_coefficients(const ShCoefficients& c, const Payload& w,
                                  std::uint64_t key, const CodecConfig& cfg,
                                  double* alpha_used) {
  check_payload(w, cfg);
  if (c.l_max() != cfg.l_max) throw ValidationError("coefficient l_max does not match config");
  const auto bank = generate_patterns(key, cfg, c.channels());
  const double alpha = resolve_alpha(c, cfg);
  if (alpha_used) *alpha_used = alpha;
  return c + modulated_sum(bank, w, alpha);
}

EmbedResult embed(const ErpImage& x, const Payload& w, std::uint64_t key,
                  const CodecConfig& cfg) {
  check_payload(w, cfg);
  cfg.validate(x.channels());
  const ShCoefficients c = forward_sht(x, cfg.l_max);
  double alpha = 0.0;
  ErpImage dx;
  std::vector<double> mask;
  if (cfg.mode == EmbedMode::kInformed) {
    // The perturbation is solved against the exact features, so spatial
    // masks would undo it; they are not applied in this mode.
    const auto code = make_invariant_code(key, cfg, x.channels(), cfg.family);
    dx = inverse_sht(embed_informed_coefficients(c, w, code, cfg, &alpha) - c, x.height());
    mask.assign(static_cast<std::size_t>(x.height()) * x.width(), 1.0);
  } else {
    const auto bank = generate_patterns(key, cfg, x.channels());
    alpha = resolve_alpha(c, cfg);
    dx = inverse_sht(modulated_sum(bank, w, alpha), x.height());
    mask = combined_mask(x, cfg);
  }
  const ErpImage masked = apply_mask(dx, mask);

  EmbedResult r;
  r.image = x;
  double intended = 0.0, kept = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double target = x.data()[i] + masked.data()[i];
    const double clamped = std::clamp(target, 0.0, 1.0);
    r.image.data()[i] = clamped;
    intended += masked.data()[i] * masked.data()[i];
    kept += (clamped - x.data()[i]) * (clamped - x.data()[i]);
  }
  r.clip_loss = intended > 0.0 ? std::max(0.0, 1.0 - kept / intended) : 0.0;
  r.strength_warning = r.clip_loss > 0.1;

  auto& side = r.side;
  side.cfg = cfg;
  side.channels = x.channels();
  side.height = x.height();
  side.alpha = alpha;
  side.cover = restrict_degrees(c, cfg.embed_degrees);
  side.z0 = compute_features(c, cfg).real();
  side.realized_delta = forward_sht(r.image, cfg.l_max) - c;
  side.mask = mask;
  return r;
}

ShCoefficients synthetic_cover_coefficients(int l_max, int channels, std::uint64_t seed) {
  return synth_random_bandlimited(l_max, seed, 1.5, channels, 0.5, 0.5);
}

ErpImage synthetic_cover(int height, int channels, std::uint64_t seed) {
  ErpImage x = inverse_sht(synthetic_cover_coefficients(16, channels, seed), height);
  x.clamp_unit();
  return x;
}

namespace {

struct CoordBlock {
  int channel;
  int l;
  int offset;
};

std::vector<CoordBlock> coordinate_blocks(const CodecConfig& cfg, int channels) {
  std::vector<CoordBlock> out;
  int offset = 0;
  for (int ch = 0; ch < channels; ++ch) {
    for (int l : cfg.embed_degrees) {
      out.push_back({ch, l, offset});
      offset += 2 * l + 1;
    }
  }
  return out;
}

int coordinate_offset(const CodecConfig& cfg, int channel, int l) {
  int offset = 0;
  for (int ch = 0; ch < channel; ++ch) {
    for (int d : cfg.embed_degrees) offset += 2 * d + 1;
  }
  for (int d : cfg.embed_degrees) {
    if (d == l) return offset;
    offset += 2 * d + 1;
  }
  throw ValidationError("degree " + std::to_string(l) + " is not an embed degree");
}

struct PowerPair {
  int l;
  int a;
  int b;
};

std::vector<PowerPair> power_pairs(const CodecConfig& cfg, int channels) {
  const int per_group = channels / cfg.groups;
  std::vector<PowerPair> out;
  for (int g = 0; g < cfg.groups; ++g) {
    for (int l : cfg.embed_degrees) {
      for (int a = 0; a < per_group; ++a) {
        for (int b = a; b < per_group; ++b) out.push_back({l, g * per_group + a, g * per_group + b});
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> embed_coordinates(const ShCoefficients& c, const CodecConfig& cfg) {
  const auto blocks = coordinate_blocks(cfg, c.channels());
  std::vector<double> x(embedding_capacity(cfg, c.channels()));
  for (const auto& b : blocks) {
    block_to_real(c.block(b.channel, b.l),
                  std::span<double>(x.data() + b.offset, static_cast<std::size_t>(2 * b.l + 1)));
  }
  return x;
}

void add_embed_coordinates(ShCoefficients& c, const CodecConfig& cfg, std::span<const double> x) {
  if (static_cast<int>(x.size()) != embedding_capacity(cfg, c.channels())) {
    throw ValidationError("coordinate vector length does not match the embed subspace");
  }
  std::vector<double> tmp;
  for (const auto& b : coordinate_blocks(cfg, c.channels())) {
    const std::size_t n = 2 * b.l + 1;
    tmp.assign(n, 0.0);
    auto block = c.block(b.channel, b.l);
    block_to_real(block, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] += x[b.offset + i];
    real_to_block(tmp, block);
  }
}

std::vector<double> family_features(const ShCoefficients& c, const CodecConfig& cfg,
                                    FeatureFamily family) {
  if (family == FeatureFamily::kBispectrum) return compute_features(c, cfg).real();
  const auto x = embed_coordinates(c, cfg);
  std::vector<double> out;
  for (const auto& p : power_pairs(cfg, c.channels())) {
    const int oa = coordinate_offset(cfg, p.a, p.l);
    const int ob = coordinate_offset(cfg, p.b, p.l);
    double acc = 0.0;
    for (int i = 0; i < 2 * p.l + 1; ++i) acc += x[oa + i] * x[ob + i];
    out.push_back(acc);
  }
  return out;
}

std::vector<double> family_jacobian(const ShCoefficients& c, const CodecConfig& cfg,
                                    FeatureFamily family) {
  const int dim = embedding_capacity(cfg, c.channels());
  if (family == FeatureFamily::kPower) {
    const auto x = embed_coordinates(c, cfg);
    const auto pairs = power_pairs(cfg, c.channels());
    std::vector<double> jac(pairs.size() * dim, 0.0);
    for (std::size_t r = 0; r < pairs.size(); ++r) {
      const auto& p = pairs[r];
      const int oa = coordinate_offset(cfg, p.a, p.l);
      const int ob = coordinate_offset(cfg, p.b, p.l);
      double* row = jac.data() + r * dim;
      for (int i = 0; i < 2 * p.l + 1; ++i) {
        row[oa + i] += x[ob + i];
        row[ob + i] += x[oa + i];
      }
    }
    return jac;
  }
  const auto layout = feature_layout(cfg, c.channels());
  std::vector<double> jac(layout.size() * dim, 0.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  parallel_for(0, layout.size(), [&](std::size_t r) {
    const auto& f = layout[r];
    const auto& t = f.degrees;
    const auto& table = projection_table(t);
    const auto a = c.block(f.channels[0], t.l1);
    const auto b = c.block(f.channels[1], t.l2);
    const auto d = c.block(f.channels[2], t.l3);
    std::vector<Complex> g[3] = {std::vector<Complex>(2 * t.l1 + 1),
                                 std::vector<Complex>(2 * t.l2 + 1),
                                 std::vector<Complex>(2 * t.l3 + 1)};
    // Gradient of the trilinear form with respect to each slot.
    for (int m1 = -t.l1; m1 <= t.l1; ++m1) {
      for (int m2 = std::max(-t.l2, -t.l3 - m1); m2 <= std::min(t.l2, t.l3 - m1); ++m2) {
        const double coef = table(m1, m2);
        if (coef == 0.0) continue;
        const int m3 = -m1 - m2;
        g[0][m1 + t.l1] += coef * b[m2 + t.l2] * d[m3 + t.l3];
        g[1][m2 + t.l2] += coef * a[m1 + t.l1] * d[m3 + t.l3];
        g[2][m3 + t.l3] += coef * a[m1 + t.l1] * b[m2 + t.l2];
      }
    }
    const int ls[3] = {t.l1, t.l2, t.l3};
    double* row = jac.data() + r * dim;
    for (int p = 0; p < 3; ++p) {
      const int l = ls[p];
      const int off = coordinate_offset(cfg, f.channels[p], l);
      const auto& gp = g[p];
      // Chain rule through real_to_block.
      row[off] += gp[l].real();
      for (int m = 1; m <= l; ++m) {
        const double sign = (m % 2) ? -1.0 : 1.0;
        row[off + 2 * m - 1] += (gp[l + m] + sign * gp[l - m]).real() * inv_sqrt2;
        row[off + 2 * m] -= (gp[l + m] - sign * gp[l - m]).imag() * inv_sqrt2;
      }
    }
  });
  return jac;
}

InvariantCode make_invariant_code(std::uint64_t key, const CodecConfig& cfg, int channels,
                                  FeatureFamily family) {
  cfg.validate(channels);
  InvariantCode code;
  code.family = family;
  std::vector<std::vector<double>> ref(kReferenceCovers);
  parallel_for(0, ref.size(), [&](std::size_t i) {
    ref[i] = family_features(
        synthetic_cover_coefficients(cfg.l_max, channels, derive_seed(0x726566, i)), cfg, family);
  });
  const std::size_t f = ref.front().size();
  code.center.assign(f, 0.0);
  code.scale.assign(f, 1.0);
  for (std::size_t t = 0; t < f; ++t) {
    double m = 0.0, v = 0.0;
    for (const auto& r : ref) m += r[t];
    m /= static_cast<double>(ref.size());
    for (const auto& r : ref) v += (r[t] - m) * (r[t] - m);
    const double sd = std::sqrt(v / static_cast<double>(ref.size()));
    code.center[t] = m;
    if (sd > 0.0) code.scale[t] = sd;
  }
  std::vector<int> perm(f);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(key, family == FeatureFamily::kBispectrum ? 0x626973 : 0x706f77));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> base_sign(f);
  for (auto& sg : base_sign) sg = (rng() & 1) ? 1 : -1;
  for (int k = 0; k < cfg.bits; ++k) {
    const int t = perm[k % f];
    const bool wrapped = (k / static_cast<int>(f)) % 2 == 1;
    code.feature.push_back(t);
    code.sign.push_back(wrapped ? -base_sign[t] : base_sign[t]);
  }
  return code;
}

ShCoefficients embed_informed_coefficients(const ShCoefficients& c, const Payload& w,
                                           const InvariantCode& code, const CodecConfig& cfg,
                                           double* alpha_used) {
  check_payload(w, cfg);
  if (c.l_max() != cfg.l_max) throw ValidationError("coefficient l_max does not match config");
  cfg.validate(c.channels());
  if (static_cast<int>(code.feature.size()) != cfg.bits) {
    throw ValidationError("invariant code does not match the payload length");
  }
  const double alpha = resolve_alpha(c, cfg);
  if (alpha_used) *alpha_used = alpha;
  const double budget = alpha * std::sqrt(static_cast<double>(cfg.bits));
  const int dim = embedding_capacity(cfg, c.channels());
  const int k = cfg.bits;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  ShCoefficients current = c;
  for (int it = 0; it < cfg.informed_iterations; ++it) {
    current = c;
    add_embed_coordinates(current, cfg, std::span<const double>(x.data(), dim));
    const auto f = family_features(current, cfg, code.family);
    const auto jac = family_jacobian(current, cfg, code.family);
    if (code.center.size() != f.size()) {
      throw ValidationError("invariant code does not match the feature layout");
    }
    Eigen::MatrixXd a(k, dim);
    Eigen::VectorXd r(k);
    for (int b = 0; b < k; ++b) {
      const int t = code.feature[b];
      const double s = (w[b] ? 1.0 : -1.0) * code.sign[b] / code.scale[t];
      for (int j = 0; j < dim; ++j) a(b, j) = s * jac[static_cast<std::size_t>(t) * dim + j];
      const double v = s * (f[t] - code.center[t]);
      // Hinge target: features already past the margin are left where they are.
      r(b) = std::max(cfg.margin, v) - v;
    }
    r += a * x;
    const double damping = 1e-3 * a.squaredNorm() / dim;
    Eigen::MatrixXd normal = a.transpose() * a;
    normal.diagonal().array() += damping > 0.0 ? damping : 1e-12;
    x = normal.ldlt().solve(a.transpose() * r);
    const double n = x.norm();
    if (n > budget) x *= budget / n;
  }
  current = c;
  add_embed_coordinates(current, cfg, std::span<const double>(x.data(), dim));
  return current;
}

BispectrumVector compute_features(const ShCoefficients& c, const CodecConfig& cfg) {
  const auto layout = feature_layout(cfg, c.channels());
  return bispectrum_vector(c, layout);
}

BispectrumVector compute_features(const ErpImage& y, const CodecConfig& cfg) {
  return compute_features(forward_sht(y, cfg.l_max), cfg);
}

namespace {

void check_side(const SignatureSet& side) {
  if (side.channels < 1 || side.height < 2 || side.z0.empty()) {
    throw ValidationError("side information is empty or incomplete");
  }
  side.cfg.validate(side.channels);
  if (side.cover.l_max() != side.cfg.l_max || side.cover.channels() != side.channels) {
    throw ValidationError("side information cover block does not match its config");
  }
  if (side.z0.size() != feature_layout(side.cfg, side.channels).size()) {
    throw ValidationError("side information feature length does not match its config");
  }
  if (side.mask.size() != static_cast<std::size_t>(side.height) * 2 * side.height) {
    throw ValidationError("side information mask does not match its height");
  }
}

}  // namespace

std::vector<std::vector<double>> decision_directions(const SignatureSet& side,
                                                     std::uint64_t key) {
  check_side(side);
  const auto& cfg = side.cfg;
  const auto bank = generate_patterns(key, cfg, side.channels);
  const auto layout = feature_layout(cfg, side.channels);
  std::vector<std::vector<double>> d(cfg.bits);
  parallel_for(0, cfg.bits, [&](std::size_t k) {
    ShCoefficients p = bank.patterns[k];
    p *= side.alpha;
    const ErpImage px = apply_mask(inverse_sht(p, side.height), side.mask);
    const ShCoefficients rk = restrict_degrees(forward_sht(px, cfg.l_max), cfg.embed_degrees);
    const auto plus = bispectrum_vector(side.cover + rk, layout).real();
    const auto minus = bispectrum_vector(side.cover - rk, layout).real();
    d[k].resize(plus.size());
    for (std::size_t t = 0; t < plus.size(); ++t) d[k][t] = plus[t] - minus[t];
  });
  return d;
}

Extraction decide(const std::vector<double>& z, const SignatureSet& side,
                  const std::vector<std::vector<double>>& directions, Decision rule) {
  const std::size_t f = side.z0.size();
  const int k = static_cast<int>(directions.size());
  if (z.size() != f) throw ValidationError("feature vector length does not match side info");
  for (const auto& d : directions) {
    if (d.size() != f) throw ValidationError("decision direction length mismatch");
  }
  Extraction out;
  out.statistic.assign(k, 0.0);
  if (rule == Decision::kMatched) {
    for (int b = 0; b < k; ++b) {
      double num = 0.0, den = 0.0;
      for (std::size_t t = 0; t < f; ++t) {
        num += (z[t] - side.z0[t]) * directions[b][t];
        den += directions[b][t] * directions[b][t];
      }
      out.statistic[b] = den > 0.0 ? 2.0 * num / den : 0.0;
    }
  } else {
    const auto layout = feature_layout(side.cfg, side.channels);
    const auto& degrees = side.cfg.embed_degrees;
    const int cols = k + static_cast<int>(degrees.size());
    Eigen::MatrixXd a(f, cols);
    Eigen::VectorXd rhs(f);
    for (std::size_t t = 0; t < f; ++t) {
      for (int b = 0; b < k; ++b) a(t, b) = 0.5 * directions[b][t];
      const auto& tri = layout[t].degrees;
      for (std::size_t j = 0; j < degrees.size(); ++j) {
        const int l = degrees[j];
        const int mult = (tri.l1 == l) + (tri.l2 == l) + (tri.l3 == l);
        a(t, k + j) = mult * side.z0[t];
      }
      rhs(t) = z[t];
    }
    Eigen::VectorXd scale(cols);
    for (int j = 0; j < cols; ++j) {
      scale(j) = a.col(j).norm();
      if (scale(j) > 0.0) a.col(j) /= scale(j);
    }
    const Eigen::VectorXd theta = a.colPivHouseholderQr().solve(rhs);
    for (int b = 0; b < k; ++b) out.statistic[b] = scale(b) > 0.0 ? theta(b) / scale(b) : 0.0;
    // Share of the gain-model residual that the bit directions explain.
    const Eigen::MatrixXd gains = a.rightCols(cols - k);
    const Eigen::VectorXd r0 = rhs - gains * gains.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd r1 = rhs - a * theta;
    const double base = r0.squaredNorm();
    out.explained = base > 0.0 ? std::max(0.0, 1.0 - r1.squaredNorm() / base) : 0.0;
  }
  out.bits.resize(k);
  std::vector<double> mags(k);
  for (int b = 0; b < k; ++b) {
    out.bits[b] = out.statistic[b] > 0.0 ? 1 : 0;
    mags[b] = std::abs(out.statistic[b]);
  }
  std::nth_element(mags.begin(), mags.begin() + k / 2, mags.end());
  out.confidence = k ? mags[k / 2] : 0.0;
  out.low_confidence = rule == Decision::kJoint ? out.explained < kMinExplained : out.confidence < 0.25;
  return out;
}

Extraction extract_nonblind(const ErpImage& y, const SignatureSet& side, std::uint64_t key,
                            Decision rule) {
  check_side(side);
  if (y.channels() != side.channels) {
    throw ValidationError("image channel count does not match side info");
  }
  const auto z = compute_features(y, side.cfg).real();
  return decide(z, side, decision_directions(side, key), rule);
}

EmbedResult resolution_scale_embed(const ErpImage& x, const Payload& w, std::uint64_t key,
                                   const CodecConfig& cfg, int native_height) {
  if (native_height < 2) throw ValidationError("native height must be >= 2");
  if (x.height() == native_height) return embed(x, w, key, cfg);
  const ErpImage small = resample(x, native_height);
  EmbedResult r = embed(small, w, key, cfg);
  ErpImage residual = r.image;
  for (std::size_t i = 0; i < residual.size(); ++i) residual.data()[i] -= small.data()[i];
  const ErpImage up = resample(residual, x.height());
  ErpImage out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::clamp(out.data()[i] + up.data()[i], 0.0, 1.0);
  }
  r.image = std::move(out);
  return r;
}

}  // namespace sphmark
