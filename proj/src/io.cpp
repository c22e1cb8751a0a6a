#include "sphmark/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "sphmark/error.hpp"

#ifndef SPHMARK_VERSION
#define SPHMARK_VERSION "0.0.0"
#endif

namespace sphmark {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

const char* version() { return SPHMARK_VERSION; }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::string read_bytes(const std::string& path) { return read_text_file(path); }

// Header token reader that skips whitespace and # comments.
class PnmHeader {
 public:
  PnmHeader(const std::string& data, const std::string& path) : d_(data), path_(path) {}

  std::string token() {
    skip();
    std::string t;
    while (pos_ < d_.size() && !std::isspace(static_cast<unsigned char>(d_[pos_]))) t += d_[pos_++];
    if (t.empty()) throw IoError("truncated header in '" + path_ + "'");
    return t;
  }
  int number() {
    const std::string t = token();
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        throw IoError("bad header field '" + t + "' in '" + path_ + "'");
      }
    }
    if (t.size() > 9) throw IoError("header field too large in '" + path_ + "'");
    return std::stoi(t);
  }
  std::size_t pixel_start() {
    if (pos_ >= d_.size() || !std::isspace(static_cast<unsigned char>(d_[pos_]))) {
      throw IoError("missing separator before pixel data in '" + path_ + "'");
    }
    return pos_ + 1;
  }

 private:
  void skip() {
    while (pos_ < d_.size()) {
      if (std::isspace(static_cast<unsigned char>(d_[pos_]))) {
        ++pos_;
      } else if (d_[pos_] == '#') {
        while (pos_ < d_.size() && d_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& d_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}
void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}
void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

class Reader {
 public:
  Reader(const std::string& d, const std::string& path) : d_(d), path_(path) {}
  void need(std::size_t n) const {
    if (pos_ + n > d_.size()) throw IoError("'" + path_ + "' is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, d_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, d_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, d_.data() + pos_, 8);
    pos_ += 8;
    if (!std::isfinite(v)) throw IoError("non-finite value in '" + path_ + "'");
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == d_.size(); }

 private:
  const std::string& d_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

void put_coefficients(std::string& out, const ShCoefficients& c) {
  put_u32(out, static_cast<std::uint32_t>(c.l_max()));
  put_u32(out, static_cast<std::uint32_t>(c.channels()));
  put_u32(out, c.is_real() ? 1u : 0u);
  for (const auto& v : c.data()) {
    put_f64(out, v.real());
    put_f64(out, v.imag());
  }
}

ShCoefficients get_coefficients(Reader& r, const std::string& path) {
  const std::uint32_t l_max = r.u32();
  const std::uint32_t channels = r.u32();
  const std::uint32_t real = r.u32();
  if (l_max > 256 || channels < 1 || channels > 3 || real > 1) {
    throw IoError("implausible coefficient header in '" + path + "'");
  }
  ShCoefficients c(static_cast<int>(l_max), static_cast<int>(channels), real == 1);
  for (auto& v : c.data()) {
    const double re = r.f64();
    const double im = r.f64();
    v = {re, im};
  }
  return c;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace

ErpImage read_ppm(const std::string& path) {
  const std::string data = read_bytes(path);
  PnmHeader h(data, path);
  const std::string magic = h.token();
  int channels = 0;
  if (magic == "P6") channels = 3;
  else if (magic == "P5") channels = 1;
  else throw IoError("'" + path + "' is not a binary PPM/PGM (magic " + magic + ")");
  const int width = h.number();
  const int height = h.number();
  const int maxval = h.number();
  if (maxval != 255) throw IoError("'" + path + "' must be 8-bit (maxval 255)");
  if (height < 2 || width != 2 * height) {
    throw ValidationError("'" + path + "' is " + std::to_string(width) + "x" +
                          std::to_string(height) + "; equirectangular images need width = 2 * height");
  }
  const std::size_t start = h.pixel_start();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (data.size() < start + need) throw IoError("'" + path + "' has truncated pixel data");
  ErpImage x(height, width, channels);
  for (std::size_t i = 0; i < need; ++i) {
    x.data()[i] = static_cast<unsigned char>(data[start + i]) / 255.0;
  }
  return x;
}

void write_ppm(const std::string& path, const ErpImage& x) {
  if (x.empty()) throw ValidationError("cannot write an empty image");
  std::string out = (x.channels() == 3 ? "P6\n" : "P5\n") + std::to_string(x.width()) + " " +
                    std::to_string(x.height()) + "\n255\n";
  out.reserve(out.size() + x.size());
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite sample while writing '" + path + "'");
    const long b = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(b)));
  }
  write_text_file(path, out);
}

void write_coefficients(const std::string& path, const ShCoefficients& c) {
  std::string out = "SPHC";
  put_u32(out, 1);
  put_coefficients(out, c);
  write_text_file(path, out);
}

ShCoefficients read_coefficients(const std::string& path) {
  const std::string data = read_bytes(path);
  Reader r(data, path);
  if (r.bytes(4) != "SPHC") throw IoError("'" + path + "' is not a .coef file");
  if (r.u32() != 1) throw IoError("unsupported .coef version in '" + path + "'");
  ShCoefficients c = get_coefficients(r, path);
  if (!r.done()) throw IoError("trailing bytes in '" + path + "'");
  return c;
}

std::string coefficients_to_json(const ShCoefficients& c) {
  json j;
  j["l_max"] = c.l_max();
  j["channels"] = c.channels();
  j["real"] = c.is_real();
  json chans = json::array();
  for (int ch = 0; ch < c.channels(); ++ch) {
    json degrees = json::array();
    for (int l = 0; l <= c.l_max(); ++l) {
      json block = json::array();
      for (const auto& v : c.block(ch, l)) block.push_back({v.real(), v.imag()});
      degrees.push_back(block);
    }
    chans.push_back(degrees);
  }
  j["coefficients"] = chans;
  return j.dump(1);
}

namespace {

json config_json(const CodecConfig& cfg) {
  json j;
  j["l_max"] = cfg.l_max;
  j["embed_degrees"] = cfg.embed_degrees;
  j["bits"] = cfg.bits;
  j["strength"] = cfg.strength;
  j["alpha_override"] = cfg.alpha_override;
  j["groups"] = cfg.groups;
  j["use_geometric_mask"] = cfg.use_geometric_mask;
  j["use_texture_mask"] = cfg.use_texture_mask;
  j["mask_floor"] = cfg.mask_floor;
  j["mode"] = cfg.mode == EmbedMode::kInformed ? "informed" : "additive";
  j["family"] = family_name(cfg.family);
  j["margin"] = cfg.margin;
  j["informed_iterations"] = cfg.informed_iterations;
  return j;
}

CodecConfig config_from(const json& j) {
  if (!j.is_object()) throw ValidationError("codec config must be a JSON object");
  static const char* known[] = {"l_max", "embed_degrees", "bits", "strength", "alpha_override",
                                "groups", "use_geometric_mask", "use_texture_mask", "mask_floor",
                                "mode", "family", "margin", "informed_iterations"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ValidationError("unknown codec config key '" + it.key() + "'");
  }
  CodecConfig cfg;
  try {
    cfg.l_max = get_or(j, "l_max", cfg.l_max);
    cfg.embed_degrees = get_or(j, "embed_degrees", cfg.embed_degrees);
    cfg.bits = get_or(j, "bits", cfg.bits);
    cfg.strength = get_or(j, "strength", cfg.strength);
    cfg.alpha_override = get_or(j, "alpha_override", cfg.alpha_override);
    cfg.groups = get_or(j, "groups", cfg.groups);
    cfg.use_geometric_mask = get_or(j, "use_geometric_mask", cfg.use_geometric_mask);
    cfg.use_texture_mask = get_or(j, "use_texture_mask", cfg.use_texture_mask);
    cfg.mask_floor = get_or(j, "mask_floor", cfg.mask_floor);
    const std::string mode = get_or<std::string>(j, "mode", "additive");
    if (mode == "additive") cfg.mode = EmbedMode::kAdditive;
    else if (mode == "informed") cfg.mode = EmbedMode::kInformed;
    else throw ValidationError("mode must be 'additive' or 'informed', got '" + mode + "'");
    cfg.family = parse_family(get_or<std::string>(j, "family", "bispectrum"));
    cfg.margin = get_or(j, "margin", cfg.margin);
    cfg.informed_iterations = get_or(j, "informed_iterations", cfg.informed_iterations);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("codec config has a field of the wrong type: ") + e.what());
  }
  return cfg;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string family_name(FeatureFamily f) {
  return f == FeatureFamily::kPower ? "power" : "bispectrum";
}

FeatureFamily parse_family(const std::string& name) {
  if (name == "bispectrum") return FeatureFamily::kBispectrum;
  if (name == "power") return FeatureFamily::kPower;
  throw ValidationError("feature family must be 'bispectrum' or 'power', got '" + name + "'");
}

std::string codec_config_to_json(const CodecConfig& cfg) { return config_json(cfg).dump(1); }

CodecConfig codec_config_from_json(const std::string& text) {
  return config_from(parse_json(text, "codec config"));
}

void write_signature(const std::string& base, const SignatureSet& side) {
  json j;
  j["format"] = "sphmark-signature";
  j["version"] = 1;
  j["tool_version"] = version();
  j["config"] = config_json(side.cfg);
  j["channels"] = side.channels;
  j["height"] = side.height;
  j["alpha"] = side.alpha;
  j["features"] = side.z0.size();
  j["mask"] = side.mask.size();
  write_text_file(base + ".sig.json", j.dump(1) + "\n");

  std::string bin = "SPHS";
  put_u32(bin, 1);
  put_coefficients(bin, side.cover);
  put_coefficients(bin, side.realized_delta);
  put_u64(bin, side.z0.size());
  for (double v : side.z0) put_f64(bin, v);
  put_u64(bin, side.mask.size());
  for (double v : side.mask) put_f64(bin, v);
  write_text_file(base + ".sig.bin", bin);
}

SignatureSet read_signature(const std::string& base) {
  const std::string meta_path = base + ".sig.json";
  const std::string bin_path = base + ".sig.bin";
  const json j = parse_json(read_text_file(meta_path), "'" + meta_path + "'");
  if (get_or<std::string>(j, "format", "") != "sphmark-signature") {
    throw IoError("'" + meta_path + "' is not a signature file");
  }
  SignatureSet side;
  try {
    side.cfg = config_from(j.at("config"));
    side.channels = j.at("channels").get<int>();
    side.height = j.at("height").get<int>();
    side.alpha = j.at("alpha").get<double>();
  } catch (const json::exception& e) {
    throw IoError("'" + meta_path + "' is missing fields: " + e.what());
  }
  const std::string data = read_bytes(bin_path);
  Reader r(data, bin_path);
  if (r.bytes(4) != "SPHS") throw IoError("'" + bin_path + "' is not a signature payload");
  if (r.u32() != 1) throw IoError("unsupported signature version in '" + bin_path + "'");
  side.cover = get_coefficients(r, bin_path);
  side.realized_delta = get_coefficients(r, bin_path);
  const std::uint64_t nz = r.u64();
  if (nz != j.value("features", std::uint64_t{0})) {
    throw IoError("signature pair '" + base + "' is inconsistent (feature count)");
  }
  r.need(nz * 8);
  side.z0.resize(nz);
  for (auto& v : side.z0) v = r.f64();
  const std::uint64_t nm = r.u64();
  if (nm != j.value("mask", std::uint64_t{0})) {
    throw IoError("signature pair '" + base + "' is inconsistent (mask size)");
  }
  r.need(nm * 8);
  side.mask.resize(nm);
  for (auto& v : side.mask) v = r.f64();
  if (!r.done()) throw IoError("trailing bytes in '" + bin_path + "'");
  return side;
}

void write_checkpoint(const std::string& path, const DecoderCheckpoint& ckpt) {
  ckpt.decoder.validate();
  json j;
  j["format"] = "sphmark-decoder";
  j["version"] = 1;
  j["tool_version"] = version();
  j["config"] = config_json(ckpt.cfg);
  j["family"] = family_name(ckpt.family);
  j["channels"] = ckpt.channels;
  j["bits"] = ckpt.decoder.bits();
  j["features"] = ckpt.decoder.features();
  j["mean"] = ckpt.decoder.mean;
  j["scale"] = ckpt.decoder.scale;
  j["weights"] = ckpt.decoder.weights;
  j["bias"] = ckpt.decoder.bias;
  if (!ckpt.config_echo.empty()) j["config_echo"] = ckpt.config_echo;
  write_text_file(path, j.dump(1) + "\n");
}

DecoderCheckpoint read_checkpoint(const std::string& path) {
  const json j = parse_json(read_text_file(path), "'" + path + "'");
  if (get_or<std::string>(j, "format", "") != "sphmark-decoder") {
    throw IoError("'" + path + "' is not a decoder checkpoint");
  }
  DecoderCheckpoint c;
  try {
    c.cfg = config_from(j.at("config"));
    c.family = parse_family(j.at("family").get<std::string>());
    c.channels = j.at("channels").get<int>();
    c.decoder.mean = j.at("mean").get<std::vector<double>>();
    c.decoder.scale = j.at("scale").get<std::vector<double>>();
    c.decoder.weights = j.at("weights").get<std::vector<double>>();
    c.decoder.bias = j.at("bias").get<std::vector<double>>();
    c.config_echo = get_or<std::string>(j, "config_echo", "");
  } catch (const json::exception& e) {
    throw IoError("'" + path + "' is malformed: " + e.what());
  }
  c.decoder.validate();
  if (c.decoder.bits() != c.cfg.bits) {
    throw IoError("'" + path + "' decoder width does not match its config");
  }
  return c;
}

}  // namespace sphmark
