#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphmark/coupling.hpp"
#include "sphmark/harmonics.hpp"
#include "sphmark/image.hpp"

namespace sphmark {

/// k watermark bits, each 0 or 1.
using Payload = std::vector<std::uint8_t>;

/// Accepts a bit string ("0110...") or hex with a 0x prefix; hex expands
/// most significant bit first and must match `bits` exactly.
Payload parse_payload(const std::string& text, int bits);
std::string payload_bits(const Payload& w);
/// Hex, most significant bit first, zero-padded to whole nibbles.
std::string payload_hex(const Payload& w);
Payload random_payload(int bits, std::uint64_t seed);

/// Invariant features a blind decoder reads.
enum class FeatureFamily {
  /// Cross-channel bispectrum, feature_layout order.
  kBispectrum,
  /// Re <c_{l,a}, c_{l,b}> for channel pairs a <= b inside each group.
  kPower,
};

enum class EmbedMode {
  /// Keyed orthogonal patterns, alpha * sum (2w - 1) p_k; read non-blind.
  kAdditive,
  /// Cover-dependent perturbation that drives one invariant feature per bit
  /// to the bit's sign; read by a trained blind decoder.
  kInformed,
};

struct CodecConfig {
  int l_max = 16;
  std::vector<int> embed_degrees{6, 8, 14};
  int bits = 32;
  /// alpha = strength * RMS of the cover coefficients on the embed degrees,
  /// unless alpha_override > 0.
  double strength = 1.0;
  double alpha_override = 0.0;
  /// Channel groups; features are computed independently inside each group.
  int groups = 1;
  bool use_geometric_mask = true;
  bool use_texture_mask = true;
  double mask_floor = 0.25;

  EmbedMode mode = EmbedMode::kAdditive;
  /// Informed mode only.
  FeatureFamily family = FeatureFamily::kBispectrum;
  /// Target for each carrying feature, in reference standard deviations.
  double margin = 1.0;
  int informed_iterations = 8;

  /// Throws ValidationError on an unusable configuration for this channel
  /// count (bad degrees, groups not dividing channels, too many bits).
  void validate(int channels) const;
};

/// Real dimension available to the watermark: channels * sum(2l + 1).
int embedding_capacity(const CodecConfig& cfg, int channels);

/// Per-group cross-channel bispectral layout, groups concatenated in order.
std::vector<FeatureIndex> feature_layout(const CodecConfig& cfg, int channels);

struct PatternBank {
  std::vector<ShCoefficients> patterns;
  std::vector<Slot> slot;
  std::vector<int> group;
};

/// Unit patterns, each supported on one (channel, degree) slot of its bit's
/// group; bits sharing a slot are orthonormalized against each other, so
/// distinct patterns are exactly orthogonal. Deterministic in key.
PatternBank generate_patterns(std::uint64_t key, const CodecConfig& cfg, int channels);

/// Side information for non-blind extraction. The decision directions are
/// not stored; they are rebuilt from the key, the stored cover block and
/// the stored spatial mask, so a wrong key yields unrelated directions.
struct SignatureSet {
  CodecConfig cfg;
  int channels = 0;
  int height = 0;
  double alpha = 0.0;
  /// Cover coefficients restricted to the embed degrees.
  ShCoefficients cover;
  /// Cover features z0 in feature_layout order.
  std::vector<double> z0;
  /// forward_sht(watermarked) - forward_sht(cover), all degrees.
  ShCoefficients realized_delta;
  /// Combined spatial mask, one value per pixel (all ones if disabled).
  std::vector<double> mask;
};

struct EmbedResult {
  ErpImage image;
  SignatureSet side;
  /// Fraction of residual energy removed by clamping.
  double clip_loss = 0.0;
  bool strength_warning = false;
};

/// Coefficient RMS over the embed degrees and all channels.
double cover_rms(const ShCoefficients& c, const CodecConfig& cfg);

EmbedResult embed(const ErpImage& x, const Payload& w, std::uint64_t key,
                  const CodecConfig& cfg);

/// Embedding without masks or clamping: c + alpha * sum (2w - 1) p_k.
ShCoefficients embed_coefficients(const ShCoefficients& c, const Payload& w,
                                  std::uint64_t key, const CodecConfig& cfg,
                                  double* alpha_used = nullptr);

/// Bispectrum features of the watermark (the input of non-blind decoding).
BispectrumVector compute_features(const ShCoefficients& c, const CodecConfig& cfg);
BispectrumVector compute_features(const ErpImage& y, const CodecConfig& cfg);

/// Band-limited synthetic cover: decay 1.5, coefficient scale 0.5, mean 0.5,
/// l_max 16 content. The image version is synthesized and clamped.
ShCoefficients synthetic_cover_coefficients(int l_max, int channels, std::uint64_t seed);
ErpImage synthetic_cover(int height, int channels, std::uint64_t seed);

/// Real coordinates used by informed embedding: block_to_real of every
/// (channel, embed degree) block, channel-major, degrees in config order.
std::vector<double> embed_coordinates(const ShCoefficients& c, const CodecConfig& cfg);
void add_embed_coordinates(ShCoefficients& c, const CodecConfig& cfg, std::span<const double> x);

/// Feature vector of the given family, real valued.
std::vector<double> family_features(const ShCoefficients& c, const CodecConfig& cfg,
                                    FeatureFamily family);

/// d family_features / d embed_coordinates, row-major (features x coordinates).
std::vector<double> family_jacobian(const ShCoefficients& c, const CodecConfig& cfg,
                                    FeatureFamily family);

/// Keyed assignment of bits to features. Bit k is carried by the sign of
/// sign[k] * (f[feature[k]] - center) / scale. When bits outnumber features
/// the assignment wraps with flipped signs. Center and scale come from
/// reference synthetic covers that do not depend on the key.
struct InvariantCode {
  FeatureFamily family = FeatureFamily::kBispectrum;
  std::vector<int> feature;
  std::vector<int> sign;
  std::vector<double> center;
  std::vector<double> scale;
};

inline constexpr int kReferenceCovers = 64;

InvariantCode make_invariant_code(std::uint64_t key, const CodecConfig& cfg, int channels,
                                  FeatureFamily family);

/// Informed embedding in the coefficient domain. Damped Gauss-Newton steps
/// push every carrying feature past the margin while the perturbation
/// energy stays within that of additive embedding at the same alpha
/// (alpha^2 * bits).
ShCoefficients embed_informed_coefficients(const ShCoefficients& c, const Payload& w,
                                           const InvariantCode& code, const CodecConfig& cfg,
                                           double* alpha_used = nullptr);

/// Per-bit decision directions d_k = B(c + r_k) - B(c - r_k), where r_k is
/// the realized (masked) residual of bit k.
std::vector<std::vector<double>> decision_directions(const SignatureSet& side,
                                                     std::uint64_t key);

/// Joint-rule extractions explaining less than this are flagged.
inline constexpr double kMinExplained = 0.7;

struct Extraction {
  Payload bits;
  /// Estimated signed amplitude per bit; about +-1 when the bit is present.
  std::vector<double> statistic;
  /// Median |statistic|.
  double confidence = 0.0;
  /// Joint rule only: fraction of the feature residual left by the gain
  /// model that the bit directions explain. Near 1 for the right key.
  double explained = 0.0;
  bool low_confidence = false;
};

enum class Decision {
  /// <z - z0, d_k> / |d_k|^2 per bit.
  kMatched,
  /// Joint least squares on all d_k plus one gain column per embed degree.
  kJoint,
};

/// Non-blind decoding from features z.
Extraction decide(const std::vector<double>& z, const SignatureSet& side,
                  const std::vector<std::vector<double>>& directions,
                  Decision rule = Decision::kJoint);
Extraction extract_nonblind(const ErpImage& y, const SignatureSet& side, std::uint64_t key,
                            Decision rule = Decision::kJoint);

/// Downsample to the native height, embed, upsample the residual back and add.
EmbedResult resolution_scale_embed(const ErpImage& x, const Payload& w, std::uint64_t key,
                                   const CodecConfig& cfg, int native_height);

}  // namespace sphmark
