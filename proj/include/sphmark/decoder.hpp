#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphmark/codec.hpp"

namespace sphmark {

/// sign(v) |v|^(1/3).
double compress_feature(double v);

/// Cube-root compression, per-feature standardization, one linear layer and
/// a sigmoid per bit.
struct LinearDecoder {
  std::vector<double> mean;
  std::vector<double> scale;
  /// Row-major, bits x features.
  std::vector<double> weights;
  std::vector<double> bias;

  int bits() const noexcept { return static_cast<int>(bias.size()); }
  int features() const noexcept { return static_cast<int>(mean.size()); }

  static LinearDecoder zeros(int bits, int features);

  std::vector<double> normalize(std::span<const double> features) const;
  std::vector<double> logits_from_normalized(std::span<const double> u) const;
  /// Throws ValidationError on non-finite or non-positive parameters.
  void validate() const;
};

struct Decoded {
  Payload bits;
  std::vector<double> probabilities;
};

double sigmoid(double x);

/// Bit k is 1 iff p_k > 0.5.
Decoded decode(const LinearDecoder& dec, std::span<const double> features);

/// Mean binary cross-entropy with p clipped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probabilities, const Payload& w);

/// d bce / d logit_k = (p_k - w_k) / k.
std::vector<double> bce_logit_gradient(std::span<const double> probabilities,
                                       const Payload& w);

struct Sample {
  std::vector<double> features;
  Payload bits;
};

struct DecoderGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

double sample_loss(const LinearDecoder& dec, const Sample& s);
DecoderGradient loss_gradient(const LinearDecoder& dec, const Sample& s);

/// Largest |analytic - central difference| / max(|analytic|, |numeric|, 1e-8)
/// over all weights and biases; entries where both are exactly zero count as
/// zero error.
double gradient_check(const LinearDecoder& dec, const Sample& s, double epsilon);

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 200;
  /// 0 means full batch.
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainRun {
  LinearDecoder decoder;
  /// Mean training loss after each epoch.
  std::vector<double> loss_curve;
  /// Training bit accuracy after each epoch.
  std::vector<double> accuracy_curve;
  int best_epoch = 0;
  double best_loss = 0.0;
};

/// Normalization statistics of compressed features; weights start at zero.
LinearDecoder fit_normalization(const std::vector<Sample>& data);

/// Minibatch gradient descent on BCE. Returns the parameters with the lowest
/// epoch loss. Throws NumericalError when the loss exceeds 1e3.
TrainRun train(const std::vector<Sample>& data, const TrainConfig& cfg);

/// Training from a given starting decoder (normalization kept).
TrainRun train_from(LinearDecoder start, const std::vector<Sample>& data,
                    const TrainConfig& cfg);

double mean_loss(const LinearDecoder& dec, const std::vector<Sample>& data);
double dataset_accuracy(const LinearDecoder& dec, const std::vector<Sample>& data);

/// Informed-mode watermarked synthetic covers in the coefficient domain,
/// featurized with `family`. Sample i uses cover and payload seeds derived
/// from (seed, i) only, so two families built with the same seed share
/// covers and payloads.
std::vector<Sample> make_dataset(const CodecConfig& cfg, FeatureFamily family,
                                 std::uint64_t key, int count, std::uint64_t seed,
                                 int channels = 3);

struct BlindBenchmarkConfig {
  CodecConfig codec;
  int channels = 3;
  int train_samples = 1200;
  int test_samples = 400;
  std::uint64_t key = 42;
  std::uint64_t seed = 1;
  TrainConfig train;
};

struct AblationRow {
  int bits = 0;
  double bispectrum_accuracy = 0.0;
  double power_accuracy = 0.0;
  double bispectrum_train_accuracy = 0.0;
  double power_train_accuracy = 0.0;
};

/// Trains one decoder per feature family and payload length on the same
/// covers, payloads and alpha, and reports held-out bit accuracy.
std::vector<AblationRow> ablate_power_spectrum(const BlindBenchmarkConfig& bench,
                                               std::span<const int> bit_counts);

}  // namespace sphmark
