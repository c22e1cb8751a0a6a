#pragma once

#include <array>
#include <compare>
#include <span>
#include <vector>

#include "sphmark/harmonics.hpp"

namespace sphmark {

/// ln(n!) from a table; throws ValidationError for n outside [0, 300].
double log_factorial(int n);

/// Wigner 3j symbol via the Racah sum. Exactly 0 when a selection rule
/// fails (|m_i| <= l_i, m1 + m2 + m3 = 0, triangle inequality).
double wigner_3j(int l1, int l2, int l3, int m1, int m2, int m3);

struct TripletIndex {
  int l1 = 0;
  int l2 = 0;
  int l3 = 0;
  auto operator<=>(const TripletIndex&) const = default;
};

/// Triangle inequality and even l1 + l2 + l3.
bool is_admissible(const TripletIndex& t);

/// sqrt((2l1+1)(2l2+1)(2l3+1) / 4pi) * 3j(l1 l2 l3; 0 0 0) * 3j(l1 l2 l3; m).
double trivial_projection_coeff(const TripletIndex& t, int m1, int m2, int m3);

/// Dense table of trivial-projection coefficients for one triplet, stored
/// over (m1, m2) with m3 = -m1 - m2 implied (zero where |m3| > l3).
class TrivialProjectionTable {
 public:
  explicit TrivialProjectionTable(const TripletIndex& t);

  const TripletIndex& triplet() const noexcept { return t_; }
  double operator()(int m1, int m2) const noexcept {
    return v_[(m1 + t_.l1) * (2 * t_.l2 + 1) + m2 + t_.l2];
  }
  /// sum over m1 + m2 + m3 = 0 of C * a^{m1} b^{m2} c^{m3}.
  Complex contract(std::span<const Complex> a, std::span<const Complex> b,
                   std::span<const Complex> c) const;

 private:
  TripletIndex t_;
  std::vector<double> v_;
};

/// Process-wide cache; tables are built once and never modified.
const TrivialProjectionTable& projection_table(const TripletIndex& t);

/// All l1 <= l2 <= l3 drawn from degrees that are admissible, in
/// lexicographic order. Degrees above l_max are ignored.
std::vector<TripletIndex> admissible_triplets(std::span<const int> degrees,
                                              int l_max);
/// Every admissible triplet with l3 <= l_max (the full cross-spectrum).
std::vector<TripletIndex> all_triplets(int l_max);

/// One irreducible copy: a degree inside one channel.
struct Slot {
  int l = 0;
  int channel = 0;
  auto operator<=>(const Slot&) const = default;
};

/// A bispectral component over three slots; channel == -1 in all three
/// slots means "same channel, summed over channels".
struct FeatureIndex {
  TripletIndex degrees;
  std::array<int, 3> channels{-1, -1, -1};
  bool summed() const noexcept { return channels[0] < 0; }
  auto operator<=>(const FeatureIndex&) const = default;
};

/// Cross-channel layout: for each admissible degree triplet, every channel
/// assignment, with channels nondecreasing across equal degrees so each
/// invariant appears once. With one channel this is the triplet list.
std::vector<FeatureIndex> coupled_layout(std::span<const int> degrees,
                                         int l_max, int channels);
std::vector<FeatureIndex> summed_layout(std::span<const TripletIndex> triplets);

struct BispectrumVector {
  std::vector<FeatureIndex> index;
  std::vector<Complex> values;
  Complex total{0.0, 0.0};

  std::size_t size() const noexcept { return values.size(); }
  /// Real parts, the representation used by decoders and cosine metrics.
  std::vector<double> real() const;
};

/// I_t = sum C * c_{l1}^{m1} c_{l2}^{m2} c_{l3}^{m3}, per channel, summed
/// over channels.
Complex bispectrum_component(const ShCoefficients& c, const TripletIndex& t);
Complex bispectrum_component(const ShCoefficients& c, const FeatureIndex& f);

BispectrumVector bispectrum_vector(const ShCoefficients& c,
                                   std::span<const TripletIndex> triplets);
BispectrumVector bispectrum_vector(const ShCoefficients& c,
                                   std::span<const FeatureIndex> layout);

/// First-order change of each component under c -> c + delta (the three
/// single-placement terms of the trilinear expansion).
std::vector<Complex> perturbation_sensitivity(
    const ShCoefficients& c, const ShCoefficients& delta,
    std::span<const TripletIndex> triplets);

/// [P(l)] for l in degrees, summed over channels.
std::vector<double> power_spectrum_features(const ShCoefficients& c,
                                            std::span<const int> degrees);

/// Second-order counterpart of coupled_layout: Re <c_{l,a}, c_{l,b}> for
/// every degree and channel pair a <= b.
std::vector<double> coupled_power_features(const ShCoefficients& c,
                                           std::span<const int> degrees);

}  // namespace sphmark
