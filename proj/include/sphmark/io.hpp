#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sphmark/codec.hpp"
#include "sphmark/decoder.hpp"
#include "sphmark/harmonics.hpp"
#include "sphmark/image.hpp"

namespace sphmark {

/// Library version, echoed into every report.
const char* version();

/// Binary PPM (P6) or PGM (P5), maxval 255, value = byte / 255. The width
/// must be twice the height.
ErpImage read_ppm(const std::string& path);
/// P6 for three channels, P5 for one; samples rounded to the nearest byte.
void write_ppm(const std::string& path, const ErpImage& x);

/// .coef layout, little endian: magic "SPHC", u32 version (1), u32 l_max,
/// u32 channels, u32 real flag, then (re, im) f64 pairs in storage order.
void write_coefficients(const std::string& path, const ShCoefficients& c);
ShCoefficients read_coefficients(const std::string& path);
std::string coefficients_to_json(const ShCoefficients& c);

std::string codec_config_to_json(const CodecConfig& cfg);
/// Unknown keys are rejected; missing keys keep their defaults.
CodecConfig codec_config_from_json(const std::string& text);

/// Writes "<base>.sig.json" (configuration and sizes) and "<base>.sig.bin"
/// (cover block, z0, realized residual, mask as little-endian f64).
void write_signature(const std::string& base, const SignatureSet& side);
SignatureSet read_signature(const std::string& base);

struct DecoderCheckpoint {
  CodecConfig cfg;
  FeatureFamily family = FeatureFamily::kBispectrum;
  int channels = 3;
  LinearDecoder decoder;
  std::string config_echo;
};

void write_checkpoint(const std::string& path, const DecoderCheckpoint& ckpt);
DecoderCheckpoint read_checkpoint(const std::string& path);

std::string family_name(FeatureFamily f);
FeatureFamily parse_family(const std::string& name);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace sphmark
