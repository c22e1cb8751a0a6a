#include "sphmark/so3.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "sphmark/error.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

namespace {

std::array<double, 4> quat_mul(const std::array<double, 4>& a,
                               const std::array<double, 4>& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse rotation component '" + item + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) {
      throw ValidationError("cannot parse rotation component '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

Rotation::Rotation(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n < 1e-300) {
    throw ValidationError("rotation quaternion must be finite and nonzero");
  }
  q_ = {w / n, x / n, y / n, z / n};
}

Rotation Rotation::from_axis_angle(const std::array<double, 3>& axis, double angle) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(n > 0.0)) throw ValidationError("rotation axis must be nonzero");
  const double s = std::sin(angle / 2.0) / n;
  return {std::cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s};
}

Rotation Rotation::from_euler_zyz(const EulerZyz& e) {
  const std::array<double, 4> za{std::cos(e.alpha / 2), 0.0, 0.0, std::sin(e.alpha / 2)};
  const std::array<double, 4> yb{std::cos(e.beta / 2), 0.0, std::sin(e.beta / 2), 0.0};
  const std::array<double, 4> zg{std::cos(e.gamma / 2), 0.0, 0.0, std::sin(e.gamma / 2)};
  const auto q = quat_mul(quat_mul(za, yb), zg);
  return {q[0], q[1], q[2], q[3]};
}

Rotation operator*(const Rotation& a, const Rotation& b) {
  const auto q = quat_mul(a.q_, b.q_);
  return {q[0], q[1], q[2], q[3]};
}

std::array<std::array<double, 3>, 3> Rotation::matrix() const {
  const double w = q_[0], x = q_[1], y = q_[2], z = q_[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

std::array<double, 3> Rotation::apply(const std::array<double, 3>& v) const {
  const auto m = matrix();
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

EulerZyz Rotation::to_euler_zyz() const {
  const auto r = matrix();
  EulerZyz e;
  const double sb = std::hypot(r[0][2], r[1][2]);
  e.beta = std::atan2(sb, r[2][2]);
  if (sb > 1e-12) {
    e.alpha = std::atan2(r[1][2], r[0][2]);
    e.gamma = std::atan2(r[2][1], -r[2][0]);
  } else if (r[2][2] > 0.0) {
    e.alpha = std::atan2(r[1][0], r[0][0]);
    e.gamma = 0.0;
  } else {
    e.alpha = std::atan2(-r[1][0], -r[0][0]);
    e.gamma = 0.0;
  }
  return e;
}

Rotation Rotation::parse(const std::string& text) {
  if (text.rfind("zyz:", 0) == 0) {
    const auto v = parse_reals(text.substr(4));
    if (v.size() != 3) throw ValidationError("zyz rotation needs three angles");
    return from_euler_zyz({v[0], v[1], v[2]});
  }
  const auto v = parse_reals(text);
  if (v.size() != 4) {
    throw ValidationError("rotation must be 'w,x,y,z' or 'zyz:alpha,beta,gamma'");
  }
  return {v[0], v[1], v[2], v[3]};
}

std::string Rotation::to_string() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", q_[0], q_[1], q_[2], q_[3]);
  return buf;
}

Rotation random_rotation(std::uint64_t seed) {
  NormalSource n(seed);
  const double w = n.normal();
  const double x = n.normal();
  const double y = n.normal();
  const double z = n.normal();
  return {w, x, y, z};
}

double rotation_angle(const Rotation& r) {
  return 2.0 * std::acos(std::min(1.0, std::abs(r.w())));
}

Rotation random_axis_rotation(std::uint64_t seed, double angle) {
  NormalSource n(seed);
  std::array<double, 3> axis{};
  double len = 0.0;
  while (len < 1e-12) {
    axis = {n.normal(), n.normal(), n.normal()};
    len = std::hypot(axis[0], axis[1], axis[2]);
  }
  return Rotation::from_axis_angle(axis, angle);
}

SmallD little_d(int l, double beta) {
  if (l < 0 || l > kMaxWignerDegree) {
    throw ValidationError("little_d degree must lie in [0, 32]");
  }
  // The alternating sum cancels by up to eight decades at l = 32, so terms
  // are accumulated in binary128 from an exact factorial table.
  using Quad = __float128;
  static const std::vector<Quad> fact = [] {
    std::vector<Quad> f(2 * kMaxWignerDegree + 1, 1);
    for (int n = 1; n <= 2 * kMaxWignerDegree; ++n) f[n] = f[n - 1] * n;
    return f;
  }();
  const auto quad_sqrt = [](Quad v) {
    Quad r = std::sqrt(static_cast<long double>(v));
    r = 0.5 * (r + v / r);
    return 0.5 * (r + v / r);
  };

  SmallD d(l);
  const Quad c = std::cos(static_cast<long double>(beta) / 2);
  const Quad s = std::sin(static_cast<long double>(beta) / 2);
  std::vector<Quad> cp(2 * l + 1, 1), sp(2 * l + 1, 1);
  for (int k = 1; k <= 2 * l; ++k) {
    cp[k] = cp[k - 1] * c;
    sp[k] = sp[k - 1] * s;
  }
  for (int m = -l; m <= l; ++m) {
    for (int mp = -l; mp <= l; ++mp) {
      const Quad pre = quad_sqrt(fact[l + m] * fact[l - m] * fact[l + mp] * fact[l - mp]);
      const int k_lo = std::max(0, mp - m);
      const int k_hi = std::min(l + mp, l - m);
      Quad sum = 0;
      for (int k = k_lo; k <= k_hi; ++k) {
        const Quad term = pre / (fact[l + mp - k] * fact[k] * fact[m - mp + k] * fact[l - m - k]) *
                          cp[2 * l + mp - m - 2 * k] * sp[m - mp + 2 * k];
        sum += ((m - mp + k) & 1) ? -term : term;
      }
      d(m, mp) = static_cast<double>(sum);
    }
  }
  return d;
}

WignerD wigner_D(int l, const Rotation& r) {
  const EulerZyz e = r.to_euler_zyz();
  const SmallD d = little_d(l, e.beta);
  WignerD out(l);
  for (int m = -l; m <= l; ++m) {
    const Complex ea = std::polar(1.0, -m * e.alpha);
    for (int mp = -l; mp <= l; ++mp) {
      out(m, mp) = ea * d(m, mp) * std::polar(1.0, -mp * e.gamma);
    }
  }
  return out;
}

ShCoefficients rotate_coeffs(const ShCoefficients& c, const Rotation& r) {
  if (c.l_max() > kMaxWignerDegree) {
    throw ValidationError("rotate_coeffs supports l_max <= 32");
  }
  ShCoefficients out(c.l_max(), c.channels(), c.is_real());
  for (int l = 0; l <= c.l_max(); ++l) {
    const WignerD d = wigner_D(l, r);
    for (int ch = 0; ch < c.channels(); ++ch) {
      const auto in = c.block(ch, l);
      auto dst = out.block(ch, l);
      double norm = 0.0;
      for (int m = -l; m <= l; ++m) {
        Complex s(0.0, 0.0);
        for (int mp = -l; mp <= l; ++mp) s += d(m, mp) * in[mp + l];
        dst[m + l] = s;
        norm = std::max(norm, std::abs(s));
      }
      if (!c.is_real()) continue;
      double err = std::abs(dst[l].imag());
      for (int m = 1; m <= l; ++m) {
        const double sign = (m & 1) ? -1.0 : 1.0;
        err = std::max(err, std::abs(dst[l - m] - sign * std::conj(dst[l + m])));
      }
      if (err > 1e-9 * std::max(1.0, norm)) {
        throw NumericalError("rotate_coeffs: conjugate symmetry lost at degree " +
                             std::to_string(l));
      }
    }
  }
  if (c.is_real()) out.enforce_conjugate_symmetry();
  return out;
}

ErpImage rotate_image(const ErpImage& x, const Rotation& r) {
  const int h = x.height();
  const int w = x.width();
  const int nc = x.channels();
  const auto inv = r.inverse().matrix();
  ErpImage out(h, w, nc);
  parallel_for(0, h, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    for (int j = 0; j < w; ++j) {
      const auto v = pixel_center_direction(i, j, h).to_vector();
      const std::array<double, 3> u{inv[0][0] * v[0] + inv[0][1] * v[1] + inv[0][2] * v[2],
                                    inv[1][0] * v[0] + inv[1][1] * v[1] + inv[1][2] * v[2],
                                    inv[2][0] * v[0] + inv[2][1] * v[1] + inv[2][2] * v[2]};
      sample_bilinear(x, Direction::from_vector(u), &out.at(i, j, 0));
    }
  });
  return out;
}

}  // namespace sphmark
