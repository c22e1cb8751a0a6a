#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphmark/attacks.hpp"
#include "sphmark/decoder.hpp"
#include "sphmark/error.hpp"
#include "sphmark/io.hpp"
#include "sphmark/metrics.hpp"
#include "sphmark/parallel.hpp"
#include "sphmark/rng.hpp"
#include "sphmark/so3.hpp"

namespace sphmark::cli {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

Payload payload_for(std::uint64_t seed, std::size_t i, int bits) {
  return random_payload(bits, derive_seed(seed, 0x7061790000ULL + i));
}

ErpImage cover_for(std::uint64_t seed, std::size_t i, int height, int channels) {
  return synthetic_cover(height, channels, derive_seed(seed, 0x636f760000ULL + i));
}

std::vector<double> feature_values(const ErpImage& y, const CodecConfig& cfg) {
  return compute_features(y, cfg).real();
}

}  // namespace

InvarianceResult run_invariance(const InvarianceProtocol& p) {
  if (p.covers < 1 || p.axes < 1) throw ValidationError("invariance needs covers >= 1 and axes >= 1");
  p.cfg.validate(p.channels);
  InvarianceResult result;
  struct Marked {
    EmbedResult embedded;
    Payload w;
  };
  std::vector<Marked> marked(p.covers);
  for (int c = 0; c < p.covers; ++c) {
    marked[c].w = payload_for(p.seed, c, p.cfg.bits);
    marked[c].embedded = embed(cover_for(p.seed, c, p.height, p.channels), marked[c].w, p.key, p.cfg);
  }
  std::vector<std::vector<std::vector<double>>> directions(p.covers);
  for (int c = 0; c < p.covers; ++c) directions[c] = decision_directions(marked[c].embedded.side, p.key);

  for (std::size_t a = 0; a < p.angles.size(); ++a) {
    const double angle = p.angles[a];
    const std::size_t trials = static_cast<std::size_t>(p.covers) * p.axes;
    std::vector<double> acc(trials);
    parallel_for(0, trials, [&](std::size_t t) {
      const int c = static_cast<int>(t / p.axes);
      const std::size_t axis = t % p.axes;
      const Rotation r = random_axis_rotation(derive_seed(p.seed, (a << 32) | axis), angle);
      const auto& m = marked[c];
      const ErpImage y = angle == 0.0 ? m.embedded.image : rotate_image(m.embedded.image, r);
      const auto e = decide(feature_values(y, p.cfg), m.embedded.side, directions[c], Decision::kJoint);
      acc[t] = bit_accuracy(m.w, e.bits);
    });
    AngleRow row;
    row.angle = angle;
    row.trials = static_cast<int>(trials);
    row.min_accuracy = *std::min_element(acc.begin(), acc.end());
    double sum = 0.0;
    for (double v : acc) sum += v;
    row.mean_accuracy = sum / static_cast<double>(trials);
    result.rows.push_back(row);
  }

  const ShCoefficients c = forward_sht(marked[0].embedded.image, p.cfg.l_max);
  const auto base = compute_features(c, p.cfg);
  std::vector<double> dev(std::max(p.algebraic_rotations, 0), 0.0);
  parallel_for(0, dev.size(), [&](std::size_t i) {
    const auto rotated = compute_features(rotate_coeffs(c, random_rotation(derive_seed(p.seed ^ 0xa1, i))), p.cfg);
    double worst = 0.0;
    for (std::size_t t = 0; t < base.size(); ++t) {
      worst = std::max(worst, std::abs(rotated.values[t] - base.values[t]) / (1.0 + std::abs(base.values[t])));
    }
    dev[i] = worst;
  });
  for (double d : dev) result.algebraic_max_deviation = std::max(result.algebraic_max_deviation, d);
  return result;
}

BenchResult run_bench(const BenchProtocol& p) {
  if (p.covers < 1) throw ValidationError("bench needs covers >= 1");
  p.cfg.validate(p.channels);
  BenchResult result;
  const auto grid = standard_distortions(p.seed);
  std::vector<std::pair<std::string, DistortionSpec>> rows = grid;
  rows.emplace_back("combined", parse_distortion("mixed:[blur:sigma=3,k=7;resize:scale=0.5;noise:std=0.05,seed=" +
                                                std::to_string(derive_seed(p.seed, 4) % 1000000) + "]"));
  const auto triplets = all_triplets(p.cfg.l_max);

  std::vector<double> ps(p.covers), ss(p.covers);
  std::vector<std::vector<double>> acc(p.covers, std::vector<double>(rows.size()));
  std::vector<std::vector<double>> cosv(p.covers, std::vector<double>(rows.size()));
  std::vector<std::vector<double>> expl(p.covers, std::vector<double>(rows.size()));
  for (int c = 0; c < p.covers; ++c) {
    const ErpImage x = cover_for(p.seed, c, p.height, p.channels);
    const Payload w = payload_for(p.seed, c, p.cfg.bits);
    const auto r = embed(x, w, p.key, p.cfg);
    ps[c] = psnr(x, r.image);
    ss[c] = ssim(x, r.image);
    const auto dirs = decision_directions(r.side, p.key);
    const auto clean = bispectrum_vector(forward_sht(r.image, p.cfg.l_max), triplets);
    parallel_for(0, rows.size(), [&](std::size_t a) {
      const ErpImage y = apply_distortion(r.image, rows[a].second);
      const auto e = decide(feature_values(y, p.cfg), r.side, dirs, Decision::kJoint);
      acc[c][a] = bit_accuracy(w, e.bits);
      expl[c][a] = e.explained;
      cosv[c][a] = bispectrum_cosine(clean, bispectrum_vector(forward_sht(y, p.cfg.l_max), triplets));
    });
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  result.psnr_mean = mean(ps);
  result.psnr_min = *std::min_element(ps.begin(), ps.end());
  result.ssim_mean = mean(ss);
  result.ssim_min = *std::min_element(ss.begin(), ss.end());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    AttackRow row;
    row.name = rows[a].first;
    row.spec = to_string(rows[a].second);
    for (int c = 0; c < p.covers; ++c) {
      row.bit_accuracy += acc[c][a] / p.covers;
      row.bispectrum_cosine += cosv[c][a] / p.covers;
      row.explained += expl[c][a] / p.covers;
    }
    result.attacks.push_back(row);
  }

  const DistortionSpec noise = parse_distortion("noise:std=0.05,seed=" + std::to_string(derive_seed(p.seed, 5) % 1000000));
  for (double s : p.strengths) {
    CodecConfig cfg = p.cfg;
    cfg.strength = s;
    cfg.alpha_override = 0.0;
    std::vector<double> tp(p.covers), ts(p.covers), ta(p.covers), tn(p.covers);
    parallel_for(0, static_cast<std::size_t>(p.covers), [&](std::size_t c) {
      const ErpImage x = cover_for(p.seed, c, p.height, p.channels);
      const Payload w = payload_for(p.seed, c, cfg.bits);
      const auto r = embed(x, w, p.key, cfg);
      tp[c] = psnr(x, r.image);
      ts[c] = ssim(x, r.image);
      const auto dirs = decision_directions(r.side, p.key);
      ta[c] = bit_accuracy(w, decide(feature_values(r.image, cfg), r.side, dirs, Decision::kJoint).bits);
      const ErpImage y = apply_distortion(r.image, noise);
      tn[c] = bit_accuracy(w, decide(feature_values(y, cfg), r.side, dirs, Decision::kJoint).bits);
    });
    result.tradeoff.push_back({s, mean(tp), mean(ts), mean(ta), mean(tn)});
  }
  return result;
}

namespace {

using nlohmann::json;

struct CodecFlags {
  CodecConfig cfg;
  std::vector<int> degrees{6, 8, 14};
  bool no_geo = false;
  bool no_texture = false;
  std::string mode = "additive";
  std::string family = "bispectrum";

  void attach(CLI::App* app) {
    app->add_option("--lmax", cfg.l_max, "Band limit of the analysis");
    app->add_option("--degrees", degrees, "Embed degrees")->delimiter(',');
    app->add_option("--bits", cfg.bits, "Payload length k");
    app->add_option("--strength", cfg.strength, "alpha = strength * cover RMS on the embed degrees");
    app->add_option("--alpha", cfg.alpha_override, "Absolute alpha (overrides --strength when > 0)");
    app->add_option("--groups", cfg.groups, "Channel groups");
    app->add_flag("--no-geo-mask", no_geo, "Disable the sin(theta) mask");
    app->add_flag("--no-texture-mask", no_texture, "Disable the texture mask");
    app->add_option("--mask-floor", cfg.mask_floor, "Texture mask floor");
    app->add_option("--mode", mode, "additive or informed")->check(CLI::IsMember({"additive", "informed"}));
    app->add_option("--family", family, "Informed-mode feature family")->check(CLI::IsMember({"bispectrum", "power"}));
    app->add_option("--margin", cfg.margin, "Informed-mode target margin");
  }

  CodecConfig resolve() const {
    CodecConfig c = cfg;
    c.embed_degrees = degrees;
    c.use_geometric_mask = !no_geo;
    c.use_texture_mask = !no_texture;
    c.mode = mode == "informed" ? EmbedMode::kInformed : EmbedMode::kAdditive;
    c.family = parse_family(family);
    return c;
  }
};

// Flat JSON config: every key is a long flag of the active command. Values
// already given on the command line win.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config '" + path + "' must be a JSON object");
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::vector<std::string> out = args;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (given.count(it.key())) continue;
    const json& v = it.value();
    std::string text;
    if (v.is_boolean()) {
      out.push_back("--" + it.key() + "=" + (v.get<bool>() ? "true" : "false"));
      continue;
    }
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) text += ",";
        text += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
      }
    } else if (v.is_string()) {
      text = v.get<std::string>();
    } else if (v.is_number() || v.is_null()) {
      text = v.dump();
    } else {
      throw ValidationError("config key '" + it.key() + "' has an unsupported value");
    }
    out.push_back("--" + it.key() + "=" + text);
  }
  return out;
}

std::string echo_options(const CLI::App* sub) {
  json j;
  j["command"] = sub->get_name();
  j["version"] = version();
  json opts = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) value += ",";
        value += r[i];
      }
    } else {
      value = opt->get_default_str();
    }
    opts[name] = value;
  }
  j["options"] = opts;
  return j.dump();
}

std::string with_echo(const std::string& echo, const std::string& csv) {
  return "# config: " + echo + "\n" + csv;
}

std::string strip_ppm(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.extension() == ".ppm" || p.extension() == ".pgm") return (p.parent_path() / p.stem()).string();
  return path;
}

std::uint64_t parse_key(const std::string& text) {
  if (text.empty()) throw ValidationError("key must be a 64-bit unsigned integer");
  for (char ch : text) {
    if (ch < '0' || ch > '9') throw ValidationError("key must be a 64-bit unsigned integer, got '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ValidationError("key '" + text + "' does not fit in 64 bits");
  }
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotation-invariant spherical watermarking"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  std::string config_path;
  app.add_option("--config", config_path, "Flat JSON file of option values");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embed a payload into an ERP image");
  std::string in_path, out_path, side_base, payload_text, key_text = "42", report_path, coef_out;
  std::uint64_t synthetic_seed = 0, payload_seed = 0;
  int height = 64, channels = 3, native_height = 0;
  bool use_synthetic = false;
  CodecFlags embed_flags;
  embed_flags.attach(embed_cmd);
  auto* embed_in = embed_cmd->add_option("--input", in_path, "Cover PPM");
  auto* embed_syn = embed_cmd->add_option("--synthetic", synthetic_seed, "Use the bundled synthetic cover with this seed");
  embed_cmd->add_option("--height", height, "Synthetic cover height");
  embed_cmd->add_option("--channels", channels, "Synthetic cover channels");
  embed_cmd->add_option("--output", out_path, "Watermarked PPM")->required();
  embed_cmd->add_option("--side", side_base, "Side-info base path (default: output without extension)");
  embed_cmd->add_option("--payload", payload_text, "Payload as bits or 0x hex");
  embed_cmd->add_option("--payload-seed", payload_seed, "Random payload seed when --payload is absent");
  embed_cmd->add_option("--key", key_text, "64-bit key");
  embed_cmd->add_option("--report", report_path, "Metric CSV");
  embed_cmd->add_option("--coef-out", coef_out, "Also write the watermarked coefficients (.coef)");
  embed_cmd->add_option("--native-height", native_height, "Embed at this height and upsample the residual");
  embed_in->excludes(embed_syn);

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Recover a payload");
  std::string ex_in, ex_side, ex_ckpt, ex_expect, ex_rule = "joint", ex_report;
  extract_cmd->add_option("--input", ex_in, "Image to read")->required();
  auto* ex_side_opt = extract_cmd->add_option("--side", ex_side, "Side-info base path (non-blind)");
  auto* ex_ckpt_opt = extract_cmd->add_option("--checkpoint", ex_ckpt, "Decoder checkpoint (blind)");
  extract_cmd->add_option("--key", key_text, "64-bit key (non-blind)");
  extract_cmd->add_option("--rule", ex_rule, "joint or matched")->check(CLI::IsMember({"joint", "matched"}));
  extract_cmd->add_option("--expect", ex_expect, "Reference payload; reports bit accuracy");
  extract_cmd->add_option("--report", ex_report, "Per-bit CSV");
  ex_side_opt->excludes(ex_ckpt_opt);

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Apply a distortion");
  std::string at_in, at_out, at_spec;
  attack_cmd->add_option("--input", at_in, "Input PPM")->required();
  attack_cmd->add_option("--output", at_out, "Output PPM")->required();
  attack_cmd->add_option("--spec", at_spec, "Attack spec, e.g. rotate:seed=3 or mixed:[blur;noise]")->required();

  // invariance
  auto* inv_cmd = app.add_subcommand("invariance", "Bit accuracy versus rotation angle");
  InvarianceProtocol inv;
  CodecFlags inv_flags;
  inv_flags.attach(inv_cmd);
  std::string inv_report;
  inv_cmd->add_option("--height", inv.height, "Cover height");
  inv_cmd->add_option("--channels", inv.channels, "Cover channels");
  inv_cmd->add_option("--covers", inv.covers, "Synthetic covers");
  inv_cmd->add_option("--axes", inv.axes, "Random axes per angle");
  inv_cmd->add_option("--angles", inv.angles, "Rotation angles in radians")->delimiter(',');
  inv_cmd->add_option("--algebraic", inv.algebraic_rotations, "Coefficient-domain rotations for the exact check");
  inv_cmd->add_option("--key", key_text, "64-bit key");
  inv_cmd->add_option("--seed", inv.seed, "Protocol seed");
  inv_cmd->add_option("--report", inv_report, "CSV (angle, mean accuracy)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Distortion grid, fidelity and strength trade-off");
  BenchProtocol bench;
  CodecFlags bench_flags;
  bench_flags.attach(bench_cmd);
  std::string bench_report, bench_tradeoff, bench_metrics;
  bench_cmd->add_option("--height", bench.height, "Cover height");
  bench_cmd->add_option("--channels", bench.channels, "Cover channels");
  bench_cmd->add_option("--covers", bench.covers, "Synthetic covers");
  bench_cmd->add_option("--key", key_text, "64-bit key");
  bench_cmd->add_option("--seed", bench.seed, "Protocol seed");
  bench_cmd->add_option("--strengths", bench.strengths, "Strength grid for the trade-off curve")->delimiter(',');
  bench_cmd->add_option("--report", bench_report, "Per-attack CSV");
  bench_cmd->add_option("--tradeoff", bench_tradeoff, "Strength trade-off CSV");
  bench_cmd->add_option("--metrics", bench_metrics, "Fidelity metric CSV");

  // train-decoder
  auto* train_cmd = app.add_subcommand("train-decoder", "Train a blind decoder on synthetic covers");
  CodecFlags train_flags;
  train_flags.attach(train_cmd);
  TrainConfig tcfg;
  int train_n = 1200, test_n = 400;
  std::uint64_t data_seed = 1;
  std::string ckpt_out, train_report;
  train_cmd->add_option("--train", train_n, "Training samples");
  train_cmd->add_option("--test", test_n, "Held-out samples");
  train_cmd->add_option("--channels", channels, "Cover channels");
  train_cmd->add_option("--epochs", tcfg.epochs, "Epochs");
  train_cmd->add_option("--lr", tcfg.learning_rate, "Learning rate");
  train_cmd->add_option("--batch", tcfg.batch_size, "Batch size (0 = full batch)");
  train_cmd->add_option("--train-seed", tcfg.seed, "Shuffle seed");
  train_cmd->add_option("--seed", data_seed, "Dataset seed");
  train_cmd->add_option("--key", key_text, "64-bit key");
  train_cmd->add_option("--checkpoint", ckpt_out, "Output checkpoint JSON")->required();
  train_cmd->add_option("--report", train_report, "CSV (epoch, loss, train_acc)");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Bispectrum versus power-spectrum blind decoding");
  CodecFlags ablate_flags;
  ablate_flags.attach(ablate_cmd);
  BlindBenchmarkConfig abl;
  std::vector<int> abl_bits{16, 32};
  std::string abl_report;
  ablate_cmd->add_option("--train", abl.train_samples, "Training samples");
  ablate_cmd->add_option("--test", abl.test_samples, "Held-out samples");
  ablate_cmd->add_option("--bit-counts", abl_bits, "Payload lengths")->delimiter(',');
  ablate_cmd->add_option("--epochs", abl.train.epochs, "Epochs");
  ablate_cmd->add_option("--lr", abl.train.learning_rate, "Learning rate");
  ablate_cmd->add_option("--batch", abl.train.batch_size, "Batch size (0 = full batch)");
  ablate_cmd->add_option("--seed", abl.seed, "Dataset seed");
  ablate_cmd->add_option("--key", key_text, "64-bit key");
  ablate_cmd->add_option("--report", abl_report, "CSV (bits, bispectrum, power)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write the bundled synthetic cover");
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--output", synth_out, "Output PPM")->required();
  synth_cmd->add_option("--seed", synth_seed, "Cover seed");
  synth_cmd->add_option("--height", height, "Height");
  synth_cmd->add_option("--channels", channels, "Channels");

  try {
    std::vector<std::string> args = merge_config_file(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      std::ostringstream o, er;
      const int code = app.exit(e, o, er);
      out << o.str();
      err << er.str();
      return code == 0 ? 0 : 1;
    }
    const std::uint64_t key = parse_key(key_text);

    if (*embed_cmd) {
      const std::string echo = echo_options(embed_cmd);
      const CodecConfig cfg = embed_flags.resolve();
      use_synthetic = embed_syn->count() > 0;
      if (!use_synthetic && in_path.empty()) throw ValidationError("embed needs --input or --synthetic");
      const ErpImage x = use_synthetic ? synthetic_cover(height, channels, synthetic_seed) : read_ppm(in_path);
      const Payload w = payload_text.empty() ? random_payload(cfg.bits, payload_seed)
                                             : parse_payload(payload_text, cfg.bits);
      const EmbedResult r = native_height > 0 ? resolution_scale_embed(x, w, key, cfg, native_height)
                                              : embed(x, w, key, cfg);
      write_ppm(out_path, r.image);
      write_signature(side_base.empty() ? strip_ppm(out_path) : side_base, r.side);
      if (!coef_out.empty()) write_coefficients(coef_out, forward_sht(r.image, cfg.l_max));
      MetricReport rep;
      rep.config_echo = echo;
      // Metrics against the stored 8-bit image, which is what a reader gets.
      const ErpImage stored = read_ppm(out_path);
      rep.add("psnr", psnr(x, stored));
      rep.add("ssim", ssim(x, stored));
      rep.add("alpha", r.side.alpha);
      rep.add("clip_loss", r.clip_loss);
      out << "payload_hex " << payload_hex(w) << "\npayload_bits " << payload_bits(w) << '\n'
          << rep.summary();
      if (r.strength_warning) {
        err << "warning: clamping removed " << fmt(100.0 * r.clip_loss, "%.1f")
            << "% of the watermark energy; lower --strength\n";
      }
      if (!report_path.empty()) write_text_file(report_path, rep.to_csv());
      return 0;
    }

    if (*extract_cmd) {
      const std::string echo = echo_options(extract_cmd);
      if (ex_side.empty() && ex_ckpt.empty()) {
        throw ValidationError("extract needs --side (non-blind) or --checkpoint (blind)");
      }
      const ErpImage y = read_ppm(ex_in);
      Payload bits;
      std::vector<double> stat;
      if (!ex_side.empty()) {
        const SignatureSet side = read_signature(ex_side);
        const auto e = extract_nonblind(y, side, key, ex_rule == "matched" ? Decision::kMatched : Decision::kJoint);
        bits = e.bits;
        stat = e.statistic;
        out << "mode nonblind\nrule " << ex_rule << "\n";
        out << "confidence " << fmt(e.confidence) << '\n';
        if (ex_rule == "joint") out << "explained " << fmt(e.explained) << '\n';
        if (e.low_confidence) {
          err << "warning: low confidence; the key, side info or image may not match\n";
        }
      } else {
        const DecoderCheckpoint ck = read_checkpoint(ex_ckpt);
        if (y.channels() != ck.channels) throw ValidationError("image channels do not match the checkpoint");
        const auto feats = family_features(forward_sht(y, ck.cfg.l_max), ck.cfg, ck.family);
        const auto d = decode(ck.decoder, feats);
        bits = d.bits;
        stat = d.probabilities;
        out << "mode blind\nfamily " << family_name(ck.family) << '\n';
      }
      out << "payload_hex " << payload_hex(bits) << "\npayload_bits " << payload_bits(bits) << '\n';
      if (!ex_expect.empty()) {
        const Payload expect = parse_payload(ex_expect, static_cast<int>(bits.size()));
        out << "bit_accuracy " << fmt(bit_accuracy(expect, bits)) << '\n';
      }
      std::string csv = "bit,value,statistic\n";
      for (std::size_t k = 0; k < bits.size(); ++k) {
        csv += std::to_string(k) + "," + std::to_string(bits[k]) + "," + fmt(stat[k]) + "\n";
      }
      out << csv;
      if (!ex_report.empty()) write_text_file(ex_report, with_echo(echo, csv));
      return 0;
    }

    if (*attack_cmd) {
      const DistortionSpec spec = parse_distortion(at_spec);
      write_ppm(at_out, apply_distortion(read_ppm(at_in), spec));
      out << "applied " << to_string(spec) << '\n';
      return 0;
    }

    if (*inv_cmd) {
      const std::string echo = echo_options(inv_cmd);
      inv.cfg = inv_flags.resolve();
      inv.key = key;
      const auto res = run_invariance(inv);
      std::string csv = "angle,mean_accuracy,min_accuracy,trials\n";
      for (const auto& r : res.rows) {
        csv += fmt(r.angle, "%.4f") + "," + fmt(r.mean_accuracy) + "," + fmt(r.min_accuracy) + "," +
               std::to_string(r.trials) + "\n";
      }
      out << csv << "algebraic_max_deviation " << fmt(res.algebraic_max_deviation, "%.3e") << '\n';
      if (!inv_report.empty()) {
        write_text_file(inv_report, with_echo(echo, csv + "# algebraic_max_deviation " +
                                                        fmt(res.algebraic_max_deviation, "%.3e") + "\n"));
      }
      return 0;
    }

    if (*bench_cmd) {
      const std::string echo = echo_options(bench_cmd);
      bench.cfg = bench_flags.resolve();
      bench.key = key;
      const auto res = run_bench(bench);
      std::string csv = "attack,spec,bit_accuracy,bispectrum_cosine,explained\n";
      for (const auto& r : res.attacks) {
        csv += r.name + ",\"" + r.spec + "\"," + fmt(r.bit_accuracy) + "," + fmt(r.bispectrum_cosine, "%.8f") +
               "," + fmt(r.explained) + "\n";
      }
      std::string trade = "strength,psnr,ssim,accuracy,noise_accuracy\n";
      for (const auto& t : res.tradeoff) {
        trade += fmt(t.strength, "%.4f") + "," + fmt(t.psnr, "%.4f") + "," + fmt(t.ssim) + "," + fmt(t.accuracy) +
                 "," + fmt(t.noise_accuracy) + "\n";
      }
      MetricReport rep;
      rep.config_echo = echo;
      rep.add("psnr_mean", res.psnr_mean);
      rep.add("psnr_min", res.psnr_min);
      rep.add("ssim_mean", res.ssim_mean);
      rep.add("ssim_min", res.ssim_min);
      out << rep.summary() << csv << trade;
      if (!bench_report.empty()) write_text_file(bench_report, with_echo(echo, csv));
      if (!bench_tradeoff.empty()) write_text_file(bench_tradeoff, with_echo(echo, trade));
      if (!bench_metrics.empty()) write_text_file(bench_metrics, rep.to_csv());
      return 0;
    }

    if (*train_cmd) {
      const std::string echo = echo_options(train_cmd);
      CodecConfig cfg = train_flags.resolve();
      cfg.mode = EmbedMode::kInformed;
      const auto train_set = make_dataset(cfg, cfg.family, key, train_n, data_seed, channels);
      const auto test_set = make_dataset(cfg, cfg.family, key, test_n, derive_seed(data_seed, 0x74657374), channels);
      const auto run_result = train(train_set, tcfg);
      DecoderCheckpoint ck;
      ck.cfg = cfg;
      ck.family = cfg.family;
      ck.channels = channels;
      ck.decoder = run_result.decoder;
      ck.config_echo = echo;
      write_checkpoint(ckpt_out, ck);
      std::string csv = "epoch,loss,train_acc\n";
      for (std::size_t e = 0; e < run_result.loss_curve.size(); ++e) {
        csv += std::to_string(e) + "," + fmt(run_result.loss_curve[e], "%.8f") + "," +
               fmt(run_result.accuracy_curve[e]) + "\n";
      }
      const double test_acc = dataset_accuracy(run_result.decoder, test_set);
      out << "best_epoch " << run_result.best_epoch << "\nbest_loss " << fmt(run_result.best_loss, "%.8f")
          << "\ntrain_accuracy " << fmt(dataset_accuracy(run_result.decoder, train_set))
          << "\nheldout_accuracy " << fmt(test_acc) << '\n';
      if (!train_report.empty()) {
        write_text_file(train_report, with_echo(echo, csv + "# heldout_accuracy " + fmt(test_acc) + "\n"));
      }
      return 0;
    }

    if (*ablate_cmd) {
      const std::string echo = echo_options(ablate_cmd);
      abl.codec = ablate_flags.resolve();
      abl.key = key;
      const auto rows = ablate_power_spectrum(abl, abl_bits);
      std::string csv = "bits,bispectrum_accuracy,power_accuracy\n";
      for (const auto& r : rows) {
        csv += std::to_string(r.bits) + "," + fmt(r.bispectrum_accuracy) + "," + fmt(r.power_accuracy) + "\n";
      }
      out << csv;
      if (!abl_report.empty()) write_text_file(abl_report, with_echo(echo, csv));
      return 0;
    }

    if (*synth_cmd) {
      write_ppm(synth_out, synthetic_cover(height, channels, synth_seed));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace sphmark::cli
