#pragma once

#include <cmath>
#include <cstdlib>

#include <boost/multiprecision/cpp_int.hpp>

namespace sphmark::testing {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline cpp_int fact(int n) {
  cpp_int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Racah formula in exact rational arithmetic; only the final square root is
// taken in floating point.
inline double exact_3j(int l1, int l2, int l3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0 || std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(m3) > l3) {
    return 0.0;
  }
  if (l3 < std::abs(l1 - l2) || l3 > l1 + l2) return 0.0;
  const cpp_rational tri(fact(l1 + l2 - l3) * fact(l1 - l2 + l3) * fact(-l1 + l2 + l3),
                         fact(l1 + l2 + l3 + 1));
  const cpp_rational norm = tri * cpp_rational(fact(l1 + m1) * fact(l1 - m1) * fact(l2 + m2) *
                                               fact(l2 - m2) * fact(l3 + m3) * fact(l3 - m3));
  cpp_rational s = 0;
  for (int k = 0; k <= l1 + l2 + l3; ++k) {
    const int a = l3 - l2 + k + m1, b = l3 - l1 + k - m2, c = l1 + l2 - l3 - k,
              d = l1 - k - m1, e = l2 - k + m2;
    if (a < 0 || b < 0 || c < 0 || d < 0 || e < 0) continue;
    const cpp_rational term(1, fact(k) * fact(a) * fact(b) * fact(c) * fact(d) * fact(e));
    s += (k % 2) ? -term : term;
  }
  if (s == 0) return 0.0;
  const double mag = std::sqrt(static_cast<double>(s * s * norm));
  const int phase = ((l1 - l2 - m3) % 2 + 2) % 2;
  const double sign = (s > 0) == (phase == 0) ? 1.0 : -1.0;
  return sign * mag;
}

}  // namespace sphmark::testing
