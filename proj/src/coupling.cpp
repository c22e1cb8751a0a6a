#include "sphmark/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "sphmark/error.hpp"

namespace sphmark {

namespace {

constexpr int kMaxFactorial = 300;

const std::vector<long double>& log_factorial_table() {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(kMaxFactorial + 1, 0.0L);
    for (int n = 2; n <= kMaxFactorial; ++n) t[n] = t[n - 1] + std::log(static_cast<long double>(n));
    return t;
  }();
  return table;
}

long double lf(int n) { return log_factorial_table()[n]; }

}  // namespace

double log_factorial(int n) {
  if (n < 0 || n > kMaxFactorial) {
    throw ValidationError("log_factorial argument " + std::to_string(n) +
                          " outside [0, 300]");
  }
  return static_cast<double>(lf(n));
}

double wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3) {
  if (l1 < 0 || l2 < 0 || l3 < 0) return 0.0;
  if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) return 0.0;
  if (m1 + m2 + m3 != 0) return 0.0;
  if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return 0.0;
  if (m1 == 0 && m2 == 0 && ((l1 + l2 + l3) & 1)) return 0.0;
  if (l1 + l2 + l3 + 1 > kMaxFactorial) {
    throw ValidationError("wigner_3j degrees too large for the factorial table");
  }

  const long double log_pre =
      0.5L * (lf(l1 + l2 - l3) + lf(l1 - l2 + l3) + lf(-l1 + l2 + l3) -
              lf(l1 + l2 + l3 + 1) + lf(l1 + m1) + lf(l1 - m1) + lf(l2 + m2) +
              lf(l2 - m2) + lf(l3 + m3) + lf(l3 - m3));
  const int k_lo = std::max({0, l2 - l3 - m1, l1 - l3 + m2});
  const int k_hi = std::min({l1 + l2 - l3, l1 - m1, l2 + m2});
  long double sum = 0.0L;
  for (int k = k_lo; k <= k_hi; ++k) {
    const long double term =
        std::exp(log_pre - lf(k) - lf(l3 - l2 + k + m1) - lf(l3 - l1 + k - m2) -
                 lf(l1 + l2 - l3 - k) - lf(l1 - k - m1) - lf(l2 - k + m2));
    sum += (k & 1) ? -term : term;
  }
  const int phase = l1 - l2 - m3;
  return static_cast<double>((phase & 1) ? -sum : sum);
}

bool is_admissible(const TripletIndex& t) {
  if (t.l1 < 0 || t.l2 < 0 || t.l3 < 0) return false;
  if (t.l3 < std::abs(t.l1 - t.l2) || t.l3 > t.l1 + t.l2) return false;
  return ((t.l1 + t.l2 + t.l3) & 1) == 0;
}

double trivial_projection_coeff(const TripletIndex& t, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0) return 0.0;
  const double pre = std::sqrt((2.0 * t.l1 + 1) * (2.0 * t.l2 + 1) * (2.0 * t.l3 + 1) /
                               (4.0 * 3.14159265358979323846));
  return pre * wigner_3j(t.l1, t.l2, t.l3, 0, 0, 0) *
         wigner_3j(t.l1, t.l2, t.l3, m1, m2, m3);
}

TrivialProjectionTable::TrivialProjectionTable(const TripletIndex& t)
    : t_(t), v_(static_cast<std::size_t>(2 * t.l1 + 1) * (2 * t.l2 + 1), 0.0) {
  if (!is_admissible(t)) {
    throw ValidationError("triplet (" + std::to_string(t.l1) + "," + std::to_string(t.l2) +
                          "," + std::to_string(t.l3) + ") is not admissible");
  }
  for (int m1 = -t.l1; m1 <= t.l1; ++m1) {
    for (int m2 = -t.l2; m2 <= t.l2; ++m2) {
      const int m3 = -m1 - m2;
      if (std::abs(m3) > t.l3) continue;
      v_[(m1 + t.l1) * (2 * t.l2 + 1) + m2 + t.l2] = trivial_projection_coeff(t, m1, m2, m3);
    }
  }
}

Complex TrivialProjectionTable::contract(std::span<const Complex> a,
                                         std::span<const Complex> b,
                                         std::span<const Complex> c) const {
  const int l1 = t_.l1, l2 = t_.l2, l3 = t_.l3;
  Complex sum(0.0, 0.0);
  for (int m1 = -l1; m1 <= l1; ++m1) {
    const int m2_lo = std::max(-l2, -l3 - m1);
    const int m2_hi = std::min(l2, l3 - m1);
    const double* row = &v_[(m1 + l1) * (2 * l2 + 1) + l2];
    Complex inner(0.0, 0.0);
    for (int m2 = m2_lo; m2 <= m2_hi; ++m2) {
      inner += row[m2] * b[m2 + l2] * c[-m1 - m2 + l3];
    }
    sum += a[m1 + l1] * inner;
  }
  return sum;
}

const TrivialProjectionTable& projection_table(const TripletIndex& t) {
  static std::mutex mu;
  static std::map<TripletIndex, std::unique_ptr<TrivialProjectionTable>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(t);
    if (it != cache.end()) return *it->second;
  }
  auto table = std::make_unique<TrivialProjectionTable>(t);
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(t, std::move(table));
  return *it->second;
}

std::vector<TripletIndex> admissible_triplets(std::span<const int> degrees, int l_max) {
  std::vector<int> ls;
  for (int l : degrees) {
    if (l >= 0 && l <= l_max) ls.push_back(l);
  }
  std::sort(ls.begin(), ls.end());
  ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
  std::vector<TripletIndex> out;
  for (std::size_t a = 0; a < ls.size(); ++a) {
    for (std::size_t b = a; b < ls.size(); ++b) {
      for (std::size_t c = b; c < ls.size(); ++c) {
        const TripletIndex t{ls[a], ls[b], ls[c]};
        if (is_admissible(t)) out.push_back(t);
      }
    }
  }
  return out;
}

std::vector<TripletIndex> all_triplets(int l_max) {
  std::vector<int> ls(l_max + 1);
  for (int l = 0; l <= l_max; ++l) ls[l] = l;
  return admissible_triplets(ls, l_max);
}

std::vector<FeatureIndex> coupled_layout(std::span<const int> degrees, int l_max,
                                         int channels) {
  if (channels < 1) throw ValidationError("coupled layout needs >= 1 channel");
  std::vector<FeatureIndex> out;
  for (const auto& t : admissible_triplets(degrees, l_max)) {
    for (int a = 0; a < channels; ++a) {
      for (int b = 0; b < channels; ++b) {
        if (t.l1 == t.l2 && b < a) continue;
        for (int c = 0; c < channels; ++c) {
          if (t.l2 == t.l3 && c < b) continue;
          out.push_back({t, {a, b, c}});
        }
      }
    }
  }
  return out;
}

std::vector<FeatureIndex> summed_layout(std::span<const TripletIndex> triplets) {
  std::vector<FeatureIndex> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back({t, {-1, -1, -1}});
  return out;
}

std::vector<double> BispectrumVector::real() const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i].real();
  return out;
}

namespace {

void require_degrees(const ShCoefficients& c, const TripletIndex& t) {
  if (t.l3 > c.l_max() || t.l1 > c.l_max() || t.l2 > c.l_max()) {
    throw ValidationError("triplet degree exceeds coefficient l_max");
  }
}

}  // namespace

Complex bispectrum_component(const ShCoefficients& c, const TripletIndex& t) {
  require_degrees(c, t);
  const auto& table = projection_table(t);
  Complex sum(0.0, 0.0);
  for (int ch = 0; ch < c.channels(); ++ch) {
    sum += table.contract(c.block(ch, t.l1), c.block(ch, t.l2), c.block(ch, t.l3));
  }
  return sum;
}

Complex bispectrum_component(const ShCoefficients& c, const FeatureIndex& f) {
  if (f.summed()) return bispectrum_component(c, f.degrees);
  require_degrees(c, f.degrees);
  for (int ch : f.channels) {
    if (ch >= c.channels()) throw ValidationError("feature channel out of range");
  }
  const auto& t = f.degrees;
  return projection_table(t).contract(c.block(f.channels[0], t.l1),
                                      c.block(f.channels[1], t.l2),
                                      c.block(f.channels[2], t.l3));
}

BispectrumVector bispectrum_vector(const ShCoefficients& c,
                                   std::span<const TripletIndex> triplets) {
  const auto layout = summed_layout(triplets);
  return bispectrum_vector(c, layout);
}

BispectrumVector bispectrum_vector(const ShCoefficients& c,
                                   std::span<const FeatureIndex> layout) {
  BispectrumVector v;
  v.index.assign(layout.begin(), layout.end());
  v.values.reserve(layout.size());
  for (const auto& f : layout) {
    v.values.push_back(bispectrum_component(c, f));
    v.total += v.values.back();
  }
  return v;
}

std::vector<Complex> perturbation_sensitivity(const ShCoefficients& c,
                                              const ShCoefficients& delta,
                                              std::span<const TripletIndex> triplets) {
  if (!c.same_layout(delta)) {
    throw ValidationError("perturbation must match the coefficient layout");
  }
  std::vector<Complex> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) {
    require_degrees(c, t);
    const auto& table = projection_table(t);
    Complex s(0.0, 0.0);
    for (int ch = 0; ch < c.channels(); ++ch) {
      const auto a = c.block(ch, t.l1), b = c.block(ch, t.l2), e = c.block(ch, t.l3);
      const auto da = delta.block(ch, t.l1), db = delta.block(ch, t.l2),
                 de = delta.block(ch, t.l3);
      s += table.contract(da, b, e) + table.contract(a, db, e) + table.contract(a, b, de);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> power_spectrum_features(const ShCoefficients& c,
                                            std::span<const int> degrees) {
  std::vector<double> out;
  out.reserve(degrees.size());
  for (int l : degrees) {
    if (l < 0 || l > c.l_max()) throw ValidationError("power feature degree out of range");
    double p = 0.0;
    for (int ch = 0; ch < c.channels(); ++ch) {
      for (const auto& v : c.block(ch, l)) p += std::norm(v);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> coupled_power_features(const ShCoefficients& c,
                                           std::span<const int> degrees) {
  std::vector<double> out;
  for (int l : degrees) {
    if (l < 0 || l > c.l_max()) throw ValidationError("power feature degree out of range");
    for (int a = 0; a < c.channels(); ++a) {
      for (int b = a; b < c.channels(); ++b) {
        const auto x = c.block(a, l), y = c.block(b, l);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] * std::conj(y[i])).real();
        out.push_back(s);
      }
    }
  }
  return out;
}

}  // namespace sphmark
