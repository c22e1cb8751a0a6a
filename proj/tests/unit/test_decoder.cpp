#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sphmark/decoder.hpp"
#include "sphmark/error.hpp"
#include "sphmark/metrics.hpp"
#include "sphmark/rng.hpp"
#include "sphmark/so3.hpp"

using namespace sphmark;

namespace {

// Compressed features cbrt(f) = sum_k (2 w_k - 1) d_k + noise, with fixed
// random d_k, so the set is linearly separable where the decoder looks.
std::vector<Sample> separable_set(int n, int bits, int features, std::uint64_t seed) {
  NormalSource dirs(seed);
  std::vector<std::vector<double>> d(bits, std::vector<double>(features));
  for (auto& row : d) {
    for (double& v : row) v = dirs.normal();
  }
  NormalSource noise(seed + 1);
  std::vector<Sample> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].bits = random_payload(bits, derive_seed(seed, i));
    out[i].features.assign(features, 0.0);
    for (int k = 0; k < bits; ++k) {
      const double s = out[i].bits[k] ? 1.0 : -1.0;
      for (int f = 0; f < features; ++f) out[i].features[f] += s * d[k][f];
    }
    for (double& v : out[i].features) {
      v += 0.05 * noise.normal();
      v = v * v * v;
    }
  }
  return out;
}

LinearDecoder random_decoder(int bits, int features, std::uint64_t seed) {
  LinearDecoder dec = LinearDecoder::zeros(bits, features);
  NormalSource n(seed);
  for (double& v : dec.mean) v = 0.1 * n.normal();
  for (double& v : dec.scale) v = 0.5 + std::abs(n.normal());
  for (double& v : dec.weights) v = 0.3 * n.normal();
  for (double& v : dec.bias) v = 0.1 * n.normal();
  return dec;
}

}  // namespace

TEST_CASE("cube-root compression") {
  CHECK(compress_feature(8.0) == doctest::Approx(2.0));
  CHECK(compress_feature(-27.0) == doctest::Approx(-3.0));
  CHECK(compress_feature(0.0) == 0.0);
}

TEST_CASE("zero decoder sits on the decision boundary") {
  const LinearDecoder dec = LinearDecoder::zeros(8, 5);
  const std::vector<double> f{1.0, -2.0, 3.0, 0.5, 0.0};
  const auto d = decode(dec, f);
  for (double p : d.probabilities) CHECK(p == 0.5);
  for (auto b : d.bits) CHECK(b == 0);
  CHECK_THROWS_AS(decode(dec, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("bce values") {
  const Payload w{1, 0, 1, 1};
  CHECK(bce_loss(std::vector<double>{0.5, 0.5, 0.5, 0.5}, w) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(std::vector<double>{1.0, 0.0, 1.0, 1.0}, w) <= 1.1e-7);
  CHECK(std::isfinite(bce_loss(std::vector<double>{0.0, 1.0, 0.0, 0.0}, w)));
  CHECK(bce_loss(std::vector<double>{0.0, 1.0, 0.0, 0.0}, w) == doctest::Approx(-std::log(1e-7)));
}

TEST_CASE("logit gradient matches finite differences") {
  const Payload w{1, 0, 0, 1, 1};
  const std::vector<double> logits{0.3, -1.2, 2.0, -0.4, 0.0};
  std::vector<double> p(logits.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = sigmoid(logits[k]);
  const auto g = bce_logit_gradient(p, w);
  const double h = 1e-6;
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto lp = p, lm = p;
    lp[k] = sigmoid(logits[k] + h);
    lm[k] = sigmoid(logits[k] - h);
    const double fd = (bce_loss(lp, w) - bce_loss(lm, w)) / (2 * h);
    CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
    CHECK(g[k] == doctest::Approx((p[k] - w[k]) / 5.0));
  }
}

TEST_CASE("parameter gradient check") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const LinearDecoder dec = random_decoder(6, 9, s);
    Sample sample;
    sample.bits = random_payload(6, s + 10);
    NormalSource n(s + 20);
    for (int f = 0; f < 9; ++f) sample.features.push_back(2.0 * n.normal());
    CHECK(gradient_check(dec, sample, 1e-5) <= 1e-4);
    // Second-order central differences: smaller steps agree better.
    CHECK(gradient_check(dec, sample, 1e-5) < gradient_check(dec, sample, 1e-3));
  }
  CHECK_THROWS_AS(gradient_check(random_decoder(2, 2, 0), Sample{{1.0, 2.0}, {1, 0}}, 1e-2), ValidationError);
}

TEST_CASE("zero features give exactly zero weight gradients") {
  LinearDecoder dec = random_decoder(4, 3, 7);
  std::fill(dec.mean.begin(), dec.mean.end(), 0.0);
  Sample s;
  s.bits = {1, 0, 1, 0};
  s.features.assign(3, 0.0);
  const auto g = loss_gradient(dec, s);
  for (double v : g.weights) CHECK(v == 0.0);
  CHECK(gradient_check(dec, s, 1e-5) <= 1e-4);
}

TEST_CASE("training separates a separable set") {
  const auto data = separable_set(200, 8, 32, 3);
  TrainConfig cfg;
  cfg.seed = 5;
  const auto run = train(data, cfg);
  CHECK(run.loss_curve.size() == 200);
  for (double v : run.loss_curve) CHECK(std::isfinite(v));
  CHECK(dataset_accuracy(run.decoder, data) == 1.0);
  CHECK(run.best_loss == doctest::Approx(*std::min_element(run.loss_curve.begin(), run.loss_curve.end())));

  const auto again = train(data, cfg);
  CHECK(again.decoder.weights == run.decoder.weights);
  CHECK(again.decoder.bias == run.decoder.bias);
}

TEST_CASE("full-batch descent with a small step is monotone") {
  const auto data = separable_set(100, 4, 6, 9);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 0;
  cfg.epochs = 50;
  const auto run = train(data, cfg);
  for (std::size_t e = 1; e < run.loss_curve.size(); ++e) CHECK(run.loss_curve[e] <= run.loss_curve[e - 1] + 1e-15);
}

TEST_CASE("feature permutation permutes the learned weights") {
  const auto data = separable_set(120, 4, 5, 11);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  auto permuted = data;
  for (auto& s : permuted) {
    std::vector<double> f(5);
    for (int i = 0; i < 5; ++i) f[i] = s.features[perm[i]];
    s.features = f;
  }
  TrainConfig cfg;
  cfg.epochs = 30;
  const auto a = train(data, cfg);
  const auto b = train(permuted, cfg);
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 5; ++i) {
      CHECK(b.decoder.weights[k * 5 + i] == doctest::Approx(a.decoder.weights[k * 5 + perm[i]]).epsilon(1e-9));
    }
  }
}

TEST_CASE("unusable training input is rejected") {
  auto data = separable_set(50, 2, 3, 13);
  data[7].features[1] = std::nan("");
  CHECK_THROWS_AS(train(data, TrainConfig{}), ValidationError);
  CHECK_THROWS_AS(train(std::vector<Sample>(data.begin(), data.begin() + 1), TrainConfig{}), ValidationError);
}

TEST_CASE("blind decoding is invariant under coefficient rotation") {
  CodecConfig cfg;
  cfg.mode = EmbedMode::kInformed;
  cfg.bits = 16;
  const auto data = make_dataset(cfg, FeatureFamily::kBispectrum, 42, 200, 3);
  TrainConfig tc;
  tc.epochs = 60;
  const auto run = train(data, tc);
  const auto code = make_invariant_code(42, cfg, 3, FeatureFamily::kBispectrum);
  const ShCoefficients c = synthetic_cover_coefficients(cfg.l_max, 3, 999);
  const Payload w = random_payload(cfg.bits, 998);
  const ShCoefficients m = embed_informed_coefficients(c, w, code, cfg);
  const auto base = decode(run.decoder, family_features(m, cfg, FeatureFamily::kBispectrum));
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto r = decode(run.decoder, family_features(rotate_coeffs(m, random_rotation(s)), cfg,
                                                       FeatureFamily::kBispectrum));
    CHECK(r.bits == base.bits);
  }
}

TEST_CASE("datasets are deterministic and shared across families") {
  CodecConfig cfg;
  cfg.mode = EmbedMode::kInformed;
  cfg.bits = 16;
  const auto a = make_dataset(cfg, FeatureFamily::kPower, 1, 6, 4);
  const auto b = make_dataset(cfg, FeatureFamily::kPower, 1, 6, 4);
  const auto c = make_dataset(cfg, FeatureFamily::kBispectrum, 1, 6, 4);
  for (int i = 0; i < 6; ++i) {
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].bits == c[i].bits);
  }
  CHECK(a[0].features.size() == 18);
  CHECK(c[0].features.size() == 147);
}

TEST_CASE("small ablation is deterministic and ordered") {
  BlindBenchmarkConfig bench;
  bench.train_samples = 150;
  bench.test_samples = 60;
  bench.train.epochs = 40;
  const std::vector<int> bits{16};
  const auto a = ablate_power_spectrum(bench, bits);
  const auto b = ablate_power_spectrum(bench, bits);
  REQUIRE(a.size() == 1);
  CHECK(a[0].bispectrum_accuracy == b[0].bispectrum_accuracy);
  CHECK(a[0].power_accuracy == b[0].power_accuracy);
  CHECK(a[0].bispectrum_accuracy >= 0.8);
}
