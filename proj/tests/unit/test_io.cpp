#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sphmark/error.hpp"
#include "sphmark/io.hpp"
#include "temp_dir.hpp"

using namespace sphmark;

TEST_CASE("ppm round trip") {
  TempDir dir;
  const ErpImage x = synthetic_cover(16, 3, 1);
  write_ppm(dir.file("a.ppm"), x);
  const ErpImage y = read_ppm(dir.file("a.ppm"));
  REQUIRE(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.data()[i] - x.data()[i]) <= 0.5 / 255.0 + 1e-12);
  // Stored values are exact bytes, so a second round trip is lossless.
  write_ppm(dir.file("b.ppm"), y);
  CHECK(read_text_file(dir.file("a.ppm")) == read_text_file(dir.file("b.ppm")));

  const ErpImage gray = synthetic_cover(8, 1, 2);
  write_ppm(dir.file("g.pgm"), gray);
  CHECK(read_ppm(dir.file("g.pgm")).channels() == 1);
}

TEST_CASE("ppm errors") {
  TempDir dir;
  CHECK_THROWS_AS(read_ppm(dir.file("missing.ppm")), IoError);
  write_text_file(dir.file("bad.ppm"), "P3\n4 2\n255\n");
  CHECK_THROWS_AS(read_ppm(dir.file("bad.ppm")), Error);
  write_text_file(dir.file("square.ppm"), "P5\n4 4\n255\n" + std::string(16, 'a'));
  CHECK_THROWS_AS(read_ppm(dir.file("square.ppm")), ValidationError);
  write_text_file(dir.file("short.ppm"), "P5\n# comment\n8 4\n255\n" + std::string(5, 'a'));
  CHECK_THROWS_AS(read_ppm(dir.file("short.ppm")), IoError);
  write_text_file(dir.file("ok.ppm"), "P5\n# comment\n8 4\n255\n" + std::string(32, 'a'));
  CHECK(read_ppm(dir.file("ok.ppm")).height() == 4);
}

TEST_CASE("coefficient file round trip") {
  TempDir dir;
  const ShCoefficients c = synthetic_cover_coefficients(8, 3, 4);
  write_coefficients(dir.file("c.coef"), c);
  const ShCoefficients d = read_coefficients(dir.file("c.coef"));
  CHECK(d.l_max() == 8);
  CHECK(d.channels() == 3);
  CHECK(d.data() == c.data());
  write_text_file(dir.file("x.coef"), "NOPE");
  CHECK_THROWS_AS(read_coefficients(dir.file("x.coef")), IoError);
  CHECK(coefficients_to_json(c).find("\"l_max\"") != std::string::npos);
}

TEST_CASE("codec config json") {
  CodecConfig cfg;
  cfg.strength = 0.5;
  cfg.embed_degrees = {4, 9};
  cfg.mode = EmbedMode::kInformed;
  cfg.family = FeatureFamily::kPower;
  const CodecConfig back = codec_config_from_json(codec_config_to_json(cfg));
  CHECK(back.strength == 0.5);
  CHECK(back.embed_degrees == cfg.embed_degrees);
  CHECK(back.mode == EmbedMode::kInformed);
  CHECK(back.family == FeatureFamily::kPower);
  CHECK(codec_config_from_json("{}").bits == 32);
  CHECK_THROWS_AS(codec_config_from_json("{\"nope\": 1}"), ValidationError);
  CHECK_THROWS_AS(codec_config_from_json("{\"bits\": "), IoError);
}

TEST_CASE("side info round trip") {
  TempDir dir;
  const CodecConfig cfg;
  const ErpImage x = synthetic_cover(64, 3, 5);
  const Payload w = random_payload(cfg.bits, 6);
  const auto r = embed(x, w, 42, cfg);
  write_signature(dir.file("s"), r.side);
  CHECK(std::filesystem::exists(dir.file("s.sig.json")));
  CHECK(std::filesystem::exists(dir.file("s.sig.bin")));
  const SignatureSet back = read_signature(dir.file("s"));
  CHECK(back.alpha == r.side.alpha);
  CHECK(back.z0 == r.side.z0);
  CHECK(back.mask == r.side.mask);
  CHECK(back.cover.data() == r.side.cover.data());
  CHECK(extract_nonblind(r.image, back, 42).bits == w);
  CHECK_THROWS_AS(read_signature(dir.file("absent")), IoError);

  // A truncated binary half is an I/O error, not a crash.
  const std::string bin = read_text_file(dir.file("s.sig.bin"));
  write_text_file(dir.file("s.sig.bin"), bin.substr(0, bin.size() / 2));
  CHECK_THROWS_AS(read_signature(dir.file("s")), IoError);
}

TEST_CASE("decoder checkpoint round trip") {
  TempDir dir;
  DecoderCheckpoint ck;
  ck.cfg.bits = 2;
  ck.family = FeatureFamily::kPower;
  ck.decoder = LinearDecoder::zeros(2, 3);
  ck.decoder.mean = {0.1, -0.2, 0.3};
  ck.decoder.scale = {1.0, 2.0, 0.5};
  ck.decoder.weights = {0.1, 0.2, 0.3, -0.4, -0.5, 0.6};
  ck.decoder.bias = {0.01, -0.02};
  ck.config_echo = "{\"command\":\"train-decoder\"}";
  write_checkpoint(dir.file("d.json"), ck);
  const auto back = read_checkpoint(dir.file("d.json"));
  CHECK(back.decoder.weights == ck.decoder.weights);
  CHECK(back.decoder.mean == ck.decoder.mean);
  CHECK(back.family == FeatureFamily::kPower);
  CHECK(back.config_echo == ck.config_echo);
  const std::vector<double> f{1.0, 2.0, 3.0};
  CHECK(decode(back.decoder, f).probabilities == decode(ck.decoder, f).probabilities);
  write_text_file(dir.file("e.json"), "{\"format\":\"other\"}");
  CHECK_THROWS_AS(read_checkpoint(dir.file("e.json")), Error);
}

TEST_CASE("family names") {
  CHECK(parse_family(family_name(FeatureFamily::kBispectrum)) == FeatureFamily::kBispectrum);
  CHECK(parse_family("power") == FeatureFamily::kPower);
  CHECK_THROWS_AS(parse_family("trispectrum"), ValidationError);
}
