#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sphmark/codec.hpp"

namespace sphmark::cli {

/// Runs one sphmark command line (args excludes the program name). Returns
/// the process exit code: 0 success, 1 validation or usage error, 2 I/O
/// error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct InvarianceProtocol {
  CodecConfig cfg;
  int height = 64;
  int channels = 3;
  int covers = 1;
  int axes = 100;
  std::vector<double> angles{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  int algebraic_rotations = 100;
  std::uint64_t key = 42;
  std::uint64_t seed = 1;
};

struct AngleRow {
  double angle = 0.0;
  double mean_accuracy = 0.0;
  double min_accuracy = 0.0;
  int trials = 0;
};

struct InvarianceResult {
  std::vector<AngleRow> rows;
  /// max |I(D c) - I(c)| / (1 + |I(c)|) over the coefficient-domain check.
  double algebraic_max_deviation = 0.0;
};

/// Embed, rotate the image about random axes at each angle, extract
/// non-blind. Covers, payloads and axes are derived from the seed.
InvarianceResult run_invariance(const InvarianceProtocol& p);

struct BenchProtocol {
  CodecConfig cfg;
  int height = 64;
  int channels = 3;
  int covers = 4;
  std::uint64_t key = 42;
  std::uint64_t seed = 1;
  std::vector<double> strengths{0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
};

struct AttackRow {
  std::string name;
  std::string spec;
  double bit_accuracy = 0.0;
  /// Full cross-spectrum cosine between watermarked and attacked images.
  double bispectrum_cosine = 0.0;
  double explained = 0.0;
};

struct TradeoffRow {
  double strength = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double accuracy = 0.0;
  double noise_accuracy = 0.0;
};

struct BenchResult {
  double psnr_mean = 0.0;
  double psnr_min = 0.0;
  double ssim_mean = 0.0;
  double ssim_min = 0.0;
  std::vector<AttackRow> attacks;
  std::vector<TradeoffRow> tradeoff;
};

BenchResult run_bench(const BenchProtocol& p);

}  // namespace sphmark::cli
