#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sphmark/attacks.hpp"
#include "sphmark/codec.hpp"
#include "sphmark/coupling.hpp"
#include "sphmark/error.hpp"
#include "sphmark/harmonics.hpp"
#include "sphmark/metrics.hpp"

using namespace sphmark;

namespace {

// Band-limited image that stays inside [0, 1] with room to spare.
ErpImage gentle_image(int height, std::uint64_t seed, int l_max = 16) {
  const auto c = synth_random_bandlimited(l_max, seed, 1.5, 3, 0.12, 0.5);
  ErpImage x = inverse_sht(c, height);
  REQUIRE(x.is_valid_unit());
  return x;
}

double max_diff(const ErpImage& a, const ErpImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::string error_of(const std::string& spec) {
  try {
    parse_distortion(spec);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("spec grammar round trips") {
  for (const std::string s :
       {"identity", "rotate:q=0.92,0.3,0.2,0.1", "rotate:zyz=0.1,0.2,0.3", "rotate:angle=1.5,seed=4",
        "specblur:sigma=0.05,lmax=16", "blur:sigma=3,k=7", "noise:std=0.05,seed=7", "lowpass:lc=12",
        "resize:scale=0.5", "brightness:f=0.7", "contrast:f=1.3", "jpeg:q=60", "median:k=3",
        "mixed:[blur:sigma=3,k=7;resize:scale=0.5;noise:std=0.05,seed=2]", "mixed:n=3,seed=5"}) {
    const auto spec = parse_distortion(s);
    CHECK(to_string(parse_distortion(to_string(spec))) == to_string(spec));
  }
  CHECK(parse_distortion("jpeg_approx:q=60").kind == AttackKind::kJpeg);
  CHECK(parse_distortion("blur_spatial:sigma=3,k=7").kind == AttackKind::kBlurSpatial);
  CHECK(parse_distortion("blur_spectral:sigma=0.1").kind == AttackKind::kBlurSpectral);
  CHECK(to_string(parse_distortion("brightness:f=0.7")) == "brightness:f=0.7");
}

TEST_CASE("spec grammar errors name the position") {
  CHECK(error_of("blur:sigma=x").find("position 11") != std::string::npos);
  CHECK(error_of("sharpen").find("position 0") != std::string::npos);
  CHECK(error_of("noise:std=0.05,wat=1").find("position 15") != std::string::npos);
  CHECK(error_of("mixed:[blur;;noise]").find("position") != std::string::npos);
  CHECK(error_of("blur: sigma=3").find("position") != std::string::npos);
  CHECK_FALSE(error_of("blur:k=4").empty());
  CHECK_FALSE(error_of("resize:scale=1.5").empty());
  CHECK_FALSE(error_of("brightness:f=2").empty());
  CHECK(error_of("jpeg:q=0").find("position 5") != std::string::npos);
  CHECK_FALSE(error_of("noise:seed=-1").empty());
  CHECK_FALSE(error_of("lowpass:lc=40").empty());
  CHECK_FALSE(error_of("rotate:q=1,0,0").empty());
  CHECK_FALSE(error_of("mixed:[blur").empty());
}

TEST_CASE("parameter-neutral attacks are identities") {
  const ErpImage x = gentle_image(64, 1);
  CHECK(apply_distortion(x, parse_distortion("identity")).data() == x.data());
  CHECK(max_diff(attack_rotate(x, Rotation::identity()), x) < 1e-12);
  CHECK(attack_noise(x, 0.0, 3).data() == x.data());
  CHECK(attack_resize(x, 1.0).data() == x.data());
  CHECK(max_diff(attack_brightness(x, 1.0), x) == 0.0);
  CHECK(max_diff(attack_contrast(x, 1.0), x) < 1e-15);
  CHECK(max_diff(attack_blur_spatial(x, 1e-9, 1), x) == 0.0);
  CHECK(max_diff(attack_blur_spatial(x, 0.0, 7), x) == 0.0);
  CHECK(max_diff(attack_blur_spectral(x, 0.0, 16), x) < 1e-10);
  CHECK(max_diff(attack_lowpass(x, 16), x) < 1e-10);
  CHECK(max_diff(apply_distortion(x, parse_distortion("mixed:[rotate:q=1,0,0,0;resize:scale=1;noise:std=0]")), x) <
        1e-12);
}

TEST_CASE("constant images survive smoothing attacks") {
  const ErpImage flat = ErpImage::with_height(32, 3, 0.3);
  for (const auto& a : {attack_blur_spatial(flat, 3.0, 7), attack_median(flat, 3), attack_resize(flat, 0.5)}) {
    CHECK(max_diff(a, flat) < 1e-12);
  }
}

TEST_CASE("rotation composition versus single resampling") {
  const ErpImage x = gentle_image(128, 2);
  const Rotation a = random_rotation(10), b = random_rotation(11);
  const ErpImage twice = attack_rotate(attack_rotate(x, b), a);
  const ErpImage once = attack_rotate(x, a * b);
  CHECK(max_diff(twice, once) <= 2.0 / 255.0);
}

TEST_CASE("spectral blur follows the heat kernel") {
  CHECK(heat_kernel_profile(16, 0.05)[16] == doctest::Approx(0.5066).epsilon(1e-4));
  const ErpImage x = gentle_image(64, 3);
  const double sigma = 0.05;
  const auto before = forward_sht(x, 16);
  const auto after = forward_sht(attack_blur_spectral(x, sigma, 16), 16);
  for (int l = 0; l <= 16; ++l) {
    const double g = std::exp(-sigma * sigma * l * (l + 1));
    for (int ch = 0; ch < 3; ++ch) {
      for (int m = -l; m <= l; ++m) {
        const Complex c0 = before.at(ch, l, m);
        if (std::abs(c0) < 1e-6) continue;
        CHECK(std::abs(after.at(ch, l, m) / c0 - g) <= 1e-10);
      }
    }
  }
}

TEST_CASE("spectral blur commutes with rotation") {
  const ErpImage x = gentle_image(64, 4);
  const Rotation r = random_rotation(12);
  const auto a = forward_sht(attack_rotate(attack_blur_spectral(x, 0.05, 16), r), 16);
  const auto b = forward_sht(attack_blur_spectral(attack_rotate(x, r), 0.05, 16), 16);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  CHECK(worst <= 1e-3);
}

TEST_CASE("noise statistics") {
  const ErpImage gray = ErpImage::with_height(64, 3, 0.5);
  const ErpImage y = attack_noise(gray, 0.05, 9);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y.data()[i] - 0.5) * (y.data()[i] - 0.5);
  CHECK(std::sqrt(s / y.size()) == doctest::Approx(0.05).epsilon(0.05));
  CHECK(attack_noise(gray, 0.05, 9).data() == y.data());
  CHECK(attack_noise(gray, 0.05, 10).data() != y.data());

  const ErpImage x = gentle_image(32, 5);
  std::vector<double> mean(x.size(), 0.0);
  for (int t = 0; t < 200; ++t) {
    const ErpImage n = attack_noise(x, 0.02, 1000 + t);
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += n.data()[i] / 200.0;
  }
  const double bound = 3.0 * 0.02 / std::sqrt(200.0);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < x.size(); ++i) outside += std::abs(mean[i] - x.data()[i]) > bound;
  // A 3-sigma band holds for about 99.7% of pixels.
  CHECK(static_cast<double>(outside) / x.size() <= 0.01);
}

TEST_CASE("brightness scales the bispectrum cubically") {
  const ErpImage x = gentle_image(64, 6);
  const auto triplets = all_triplets(8);
  const auto b0 = bispectrum_vector(forward_sht(x, 8), triplets);
  const double f = 1.2;
  REQUIRE(*std::max_element(x.data().begin(), x.data().end()) * f < 1.0);
  const auto b1 = bispectrum_vector(forward_sht(attack_brightness(x, f), 8), triplets);
  for (std::size_t t = 0; t < b0.size(); ++t) {
    CHECK(std::abs(b1.values[t] - f * f * f * b0.values[t]) <= 1e-9 * (1.0 + std::abs(b0.values[t])));
  }
}

TEST_CASE("contrast keeps the decoded signs") {
  const CodecConfig cfg;
  const ErpImage x = synthetic_cover(64, 3, 7);
  const Payload w = random_payload(cfg.bits, 8);
  const auto r = embed(x, w, 42, cfg);
  for (double f : {0.7, 0.85, 1.15}) {
    const auto e = extract_nonblind(attack_contrast(r.image, f), r.side, 42);
    CHECK(e.bits == w);
  }
  const ErpImage c = attack_contrast(x, 0.7);
  CHECK(c.is_valid_unit());
}

TEST_CASE("jpeg approximation") {
  const ErpImage x = gentle_image(64, 8);
  CHECK(max_diff(attack_jpeg_approx(x, 100), x) <= 2.0 / 255.0);
  const ErpImage once = attack_jpeg_approx(x, 60);
  CHECK(max_diff(attack_jpeg_approx(once, 60), once) <= 3.0 / 255.0);

  // Mid-gray has a zero DC coefficient after level shift, so it is exact.
  const ErpImage gray = ErpImage::with_height(32, 3, 128.0 / 255.0);
  for (int q : {1, 10, 60, 95}) CHECK(max_diff(attack_jpeg_approx(gray, q), gray) < 1e-12);
  const ErpImage level = ErpImage::with_height(32, 1, 0.3);
  CHECK(max_diff(attack_jpeg_approx(level, 100), level) < 1e-12);
  // Elsewhere a constant block moves by at most half a DC step, Q / 16 / 255.
  CHECK(max_diff(attack_jpeg_approx(level, 60), level) <= 13.0 / 16.0 / 255.0 + 1e-12);
}

TEST_CASE("mixed applies its steps in order") {
  const ErpImage x = gentle_image(32, 9);
  const auto blur = parse_distortion("blur:sigma=2,k=5");
  CHECK(apply_distortion(x, parse_distortion("mixed:[blur:sigma=2,k=5]")).data() ==
        apply_distortion(x, blur).data());
  const auto chained = attack_noise(attack_resize(attack_blur_spatial(x, 3.0, 7), 0.5), 0.05, 2);
  const auto mixed = apply_distortion(x, parse_distortion("mixed:[blur:sigma=3,k=7;resize:scale=0.5;noise:std=0.05,seed=2]"));
  CHECK(mixed.data() == chained.data());
  CHECK(random_mix(3, 4).size() == 3);
  CHECK(to_string(random_mix(3, 4)[0]) == to_string(random_mix(3, 4)[0]));
  CHECK_THROWS_AS(attack_mixed(x, {}), ValidationError);
}

TEST_CASE("every attack yields a valid image of the same shape") {
  const ErpImage x = synthetic_cover(32, 3, 10);
  const auto grid = standard_distortions(3);
  std::set<AttackKind> kinds;
  for (const auto& [name, spec] : grid) {
    const ErpImage y = apply_distortion(x, spec);
    CHECK(y.same_shape(x));
    CHECK(y.is_valid_unit());
    kinds.insert(spec.kind);
  }
  for (auto k : {AttackKind::kRotate, AttackKind::kBlurSpatial, AttackKind::kNoise, AttackKind::kLowpass,
                 AttackKind::kResize, AttackKind::kBrightness, AttackKind::kContrast, AttackKind::kJpeg,
                 AttackKind::kMixed}) {
    CHECK(kinds.count(k) == 1);
  }
  CHECK(apply_distortion(x, parse_distortion("specblur:sigma=0.1")).is_valid_unit());
}

TEST_CASE("bispectrum stays close under the isolated distortions") {
  const ErpImage x = synthetic_cover(64, 3, 12);
  const auto triplets = all_triplets(16);
  const auto b0 = bispectrum_vector(forward_sht(x, 16), triplets);
  const auto cos_after = [&](const ErpImage& y) {
    return bispectrum_cosine(b0, bispectrum_vector(forward_sht(y, 16), triplets));
  };
  CHECK(cos_after(attack_blur_spatial(x, 3.0, 7)) >= 0.99);
  CHECK(cos_after(attack_resize(x, 0.5)) >= 0.995);
  CHECK(cos_after(attack_noise(x, 0.05, 1)) >= 0.995);
}
