#include "sphmark/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sphmark/error.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"

namespace sphmark {

namespace {

constexpr double kClip = 1e-7;
constexpr double kDivergence = 1e3;

void check_sample(const LinearDecoder& dec, const Sample& s) {
  if (static_cast<int>(s.features.size()) != dec.features()) {
    throw ValidationError("feature length " + std::to_string(s.features.size()) +
                          " does not match decoder input " + std::to_string(dec.features()));
  }
  if (static_cast<int>(s.bits.size()) != dec.bits()) {
    throw ValidationError("payload length " + std::to_string(s.bits.size()) +
                          " does not match decoder output " + std::to_string(dec.bits()));
  }
}

std::vector<double> probabilities(const LinearDecoder& dec, std::span<const double> features) {
  auto z = dec.logits_from_normalized(dec.normalize(features));
  for (auto& v : z) v = sigmoid(v);
  return z;
}

}  // namespace

double compress_feature(double v) { return std::cbrt(v); }

LinearDecoder LinearDecoder::zeros(int bits, int features) {
  if (bits < 1 || features < 1) throw ValidationError("decoder needs bits >= 1 and features >= 1");
  LinearDecoder d;
  d.mean.assign(features, 0.0);
  d.scale.assign(features, 1.0);
  d.weights.assign(static_cast<std::size_t>(bits) * features, 0.0);
  d.bias.assign(bits, 0.0);
  return d;
}

std::vector<double> LinearDecoder::normalize(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != this->features()) {
    throw ValidationError("feature length " + std::to_string(features.size()) +
                          " does not match decoder input " + std::to_string(this->features()));
  }
  std::vector<double> u(features.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = (compress_feature(features[i]) - mean[i]) / scale[i];
  }
  return u;
}

std::vector<double> LinearDecoder::logits_from_normalized(std::span<const double> u) const {
  const int f = features();
  std::vector<double> z(bias);
  for (int k = 0; k < bits(); ++k) {
    const double* row = weights.data() + static_cast<std::size_t>(k) * f;
    double acc = 0.0;
    for (int i = 0; i < f; ++i) acc += row[i] * u[i];
    z[k] += acc;
  }
  return z;
}

void LinearDecoder::validate() const {
  const int f = features();
  if (f < 1 || bits() < 1) throw ValidationError("decoder has no inputs or outputs");
  if (static_cast<int>(scale.size()) != f ||
      weights.size() != static_cast<std::size_t>(bits()) * f) {
    throw ValidationError("decoder parameter shapes are inconsistent");
  }
  for (double s : scale) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("decoder scales must be positive");
  }
  const auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(mean) || !finite(weights) || !finite(bias)) {
    throw ValidationError("decoder parameters must be finite");
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Decoded decode(const LinearDecoder& dec, std::span<const double> features) {
  Decoded out;
  out.probabilities = probabilities(dec, features);
  out.bits.resize(out.probabilities.size());
  for (std::size_t k = 0; k < out.bits.size(); ++k) out.bits[k] = out.probabilities[k] > 0.5 ? 1 : 0;
  return out;
}

double bce_loss(std::span<const double> p, const Payload& w) {
  if (p.size() != w.size() || p.empty()) throw ValidationError("bce needs matching non-empty inputs");
  double loss = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = std::clamp(p[k], kClip, 1.0 - kClip);
    loss -= w[k] ? std::log(q) : std::log(1.0 - q);
  }
  return loss / static_cast<double>(p.size());
}

std::vector<double> bce_logit_gradient(std::span<const double> p, const Payload& w) {
  if (p.size() != w.size() || p.empty()) throw ValidationError("bce needs matching non-empty inputs");
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    g[k] = (p[k] - static_cast<double>(w[k])) / static_cast<double>(p.size());
  }
  return g;
}

double sample_loss(const LinearDecoder& dec, const Sample& s) {
  check_sample(dec, s);
  return bce_loss(probabilities(dec, s.features), s.bits);
}

DecoderGradient loss_gradient(const LinearDecoder& dec, const Sample& s) {
  check_sample(dec, s);
  const auto u = dec.normalize(s.features);
  auto p = dec.logits_from_normalized(u);
  for (auto& v : p) v = sigmoid(v);
  const auto g = bce_logit_gradient(p, s.bits);
  DecoderGradient out;
  const int f = dec.features();
  out.weights.assign(dec.weights.size(), 0.0);
  out.bias = g;
  for (int k = 0; k < dec.bits(); ++k) {
    for (int i = 0; i < f; ++i) out.weights[static_cast<std::size_t>(k) * f + i] = g[k] * u[i];
  }
  return out;
}

double gradient_check(const LinearDecoder& dec, const Sample& s, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) {
    throw ValidationError("gradient check epsilon must lie in [1e-6, 1e-3]");
  }
  const auto analytic = loss_gradient(dec, s);
  LinearDecoder probe = dec;
  double worst = 0.0;
  const auto compare = [&](double a, double& param) {
    const double saved = param;
    param = saved + epsilon;
    const double up = sample_loss(probe, s);
    param = saved - epsilon;
    const double down = sample_loss(probe, s);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    if (a == 0.0 && numeric == 0.0) return;
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t i = 0; i < probe.weights.size(); ++i) compare(analytic.weights[i], probe.weights[i]);
  for (std::size_t i = 0; i < probe.bias.size(); ++i) compare(analytic.bias[i], probe.bias[i]);
  return worst;
}

LinearDecoder fit_normalization(const std::vector<Sample>& data) {
  if (data.size() < 2) throw ValidationError("training needs at least 2 samples");
  const std::size_t f = data.front().features.size();
  const std::size_t k = data.front().bits.size();
  for (const auto& s : data) {
    if (s.features.size() != f || s.bits.size() != k) {
      throw ValidationError("training samples have inconsistent shapes");
    }
  }
  LinearDecoder dec = LinearDecoder::zeros(static_cast<int>(k), static_cast<int>(f));
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < f; ++i) {
    double m = 0.0;
    for (const auto& s : data) m += compress_feature(s.features[i]);
    m /= n;
    double v = 0.0;
    for (const auto& s : data) {
      const double d = compress_feature(s.features[i]) - m;
      v += d * d;
    }
    const double sd = std::sqrt(v / n);
    dec.mean[i] = m;
    // Constant features carry nothing; unit scale keeps them at zero input.
    dec.scale[i] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 1.0;
  }
  return dec;
}

double mean_loss(const LinearDecoder& dec, const std::vector<Sample>& data) {
  double total = 0.0;
  for (const auto& s : data) total += sample_loss(dec, s);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

double dataset_accuracy(const LinearDecoder& dec, const std::vector<Sample>& data) {
  std::size_t ok = 0, total = 0;
  for (const auto& s : data) {
    check_sample(dec, s);
    const auto d = decode(dec, s.features);
    for (std::size_t k = 0; k < s.bits.size(); ++k) {
      ok += d.bits[k] == s.bits[k];
      ++total;
    }
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

TrainRun train(const std::vector<Sample>& data, const TrainConfig& cfg) {
  return train_from(fit_normalization(data), data, cfg);
}

TrainRun train_from(LinearDecoder dec, const std::vector<Sample>& data, const TrainConfig& cfg) {
  if (data.size() < 2) throw ValidationError("training needs at least 2 samples");
  if (!(cfg.learning_rate > 0.0) || cfg.epochs < 1 || cfg.batch_size < 0) {
    throw ValidationError("training needs learning_rate > 0, epochs >= 1, batch_size >= 0");
  }
  dec.validate();
  for (const auto& s : data) check_sample(dec, s);

  const std::size_t n = data.size();
  const int f = dec.features();
  const int k = dec.bits();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min<std::size_t>(cfg.batch_size, n);

  // Normalized inputs do not change during training.
  std::vector<std::vector<double>> inputs(n);
  for (std::size_t i = 0; i < n; ++i) inputs[i] = dec.normalize(data[i].features);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0x7261696e));

  TrainRun run;
  run.decoder = dec;
  run.best_loss = std::numeric_limits<double>::infinity();
  run.best_epoch = -1;

  std::vector<double> gw(dec.weights.size());
  std::vector<double> gb(k);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::fill(gw.begin(), gw.end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const auto& u = inputs[order[b]];
        auto p = dec.logits_from_normalized(u);
        for (auto& v : p) v = sigmoid(v);
        const auto g = bce_logit_gradient(p, data[order[b]].bits);
        for (int j = 0; j < k; ++j) {
          double* row = gw.data() + static_cast<std::size_t>(j) * f;
          for (int i = 0; i < f; ++i) row[i] += g[j] * u[i];
          gb[j] += g[j];
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < gw.size(); ++i) dec.weights[i] -= step * gw[i];
      for (int j = 0; j < k; ++j) dec.bias[j] -= step * gb[j];
    }
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto p = dec.logits_from_normalized(inputs[i]);
      for (auto& v : p) v = sigmoid(v);
      loss += bce_loss(p, data[i].bits);
      for (int j = 0; j < k; ++j) correct += (p[j] > 0.5) == (data[i].bits[j] != 0);
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss) || loss > kDivergence) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ": loss " +
                           std::to_string(loss) + " with learning rate " +
                           std::to_string(cfg.learning_rate));
    }
    run.loss_curve.push_back(loss);
    run.accuracy_curve.push_back(static_cast<double>(correct) / static_cast<double>(n * k));
    if (loss < run.best_loss) {
      run.best_loss = loss;
      run.best_epoch = epoch;
      run.decoder = dec;
    }
  }
  return run;
}

std::vector<Sample> make_dataset(const CodecConfig& cfg, FeatureFamily family,
                                 std::uint64_t key, int count, std::uint64_t seed,
                                 int channels) {
  if (count < 1) throw ValidationError("dataset needs at least one sample");
  CodecConfig c = cfg;
  c.mode = EmbedMode::kInformed;
  c.family = family;
  c.validate(channels);
  const auto code = make_invariant_code(key, c, channels, family);
  std::vector<Sample> out(count);
  parallel_for(0, out.size(), [&](std::size_t i) {
    const auto cover =
        synthetic_cover_coefficients(c.l_max, channels, derive_seed(seed, 2 * i));
    out[i].bits = random_payload(c.bits, derive_seed(seed, 2 * i + 1));
    const auto marked = embed_informed_coefficients(cover, out[i].bits, code, c);
    out[i].features = family_features(marked, c, family);
  });
  return out;
}

std::vector<AblationRow> ablate_power_spectrum(const BlindBenchmarkConfig& bench,
                                               std::span<const int> bit_counts) {
  std::vector<AblationRow> rows;
  for (int bits : bit_counts) {
    CodecConfig cfg = bench.codec;
    cfg.bits = bits;
    AblationRow row;
    row.bits = bits;
    for (auto family : {FeatureFamily::kBispectrum, FeatureFamily::kPower}) {
      const auto train_set =
          make_dataset(cfg, family, bench.key, bench.train_samples, bench.seed, bench.channels);
      const auto test_set = make_dataset(cfg, family, bench.key, bench.test_samples,
                                         derive_seed(bench.seed, 0x74657374), bench.channels);
      const auto run = train(train_set, bench.train);
      const double test_acc = dataset_accuracy(run.decoder, test_set);
      const double train_acc = dataset_accuracy(run.decoder, train_set);
      if (family == FeatureFamily::kBispectrum) {
        row.bispectrum_accuracy = test_acc;
        row.bispectrum_train_accuracy = train_acc;
      } else {
        row.power_accuracy = test_acc;
        row.power_train_accuracy = train_acc;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sphmark
