#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "sphmark/attacks.hpp"
#include "sphmark/codec.hpp"
#include "sphmark/coupling.hpp"
#include "sphmark/error.hpp"
#include "sphmark/harmonics.hpp"
#include "sphmark/io.hpp"
#include "sphmark/metrics.hpp"
#include "sphmark/so3.hpp"

namespace py = pybind11;
using namespace sphmark;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, 2H) or (H, 2H, C) float array to an ERP image.
ErpImage to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw ValidationError("image must have shape (H, 2H) or (H, 2H, C)");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  ErpImage x(h, w, c);
  std::copy(a.data(), a.data() + x.size(), x.data().begin());
  return x;
}

Array to_array(const ErpImage& x) {
  Array a({x.height(), x.width(), x.channels()});
  std::copy(x.data().begin(), x.data().end(), a.mutable_data());
  return a;
}

Payload to_payload(const py::object& obj, int bits) {
  if (py::isinstance<py::str>(obj)) return parse_payload(obj.cast<std::string>(), bits);
  auto v = obj.cast<std::vector<int>>();
  Payload w(v.begin(), v.end());
  return parse_payload(payload_bits(w), bits);
}

}  // namespace

PYBIND11_MODULE(_sphmark, m) {
  m.doc() = "Rotation-invariant spherical image watermarking";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  static py::exception<IoError> io(m, "IoError", base.ptr());
  static py::exception<NumericalError> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(validation.ptr(), e.what());
    } catch (const IoError& e) {
      PyErr_SetString(io.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def("version", &version);

  py::enum_<EmbedMode>(m, "EmbedMode").value("ADDITIVE", EmbedMode::kAdditive).value("INFORMED", EmbedMode::kInformed);
  py::enum_<FeatureFamily>(m, "FeatureFamily")
      .value("BISPECTRUM", FeatureFamily::kBispectrum)
      .value("POWER", FeatureFamily::kPower);

  py::class_<CodecConfig>(m, "CodecConfig")
      .def(py::init<>())
      .def_readwrite("l_max", &CodecConfig::l_max)
      .def_readwrite("embed_degrees", &CodecConfig::embed_degrees)
      .def_readwrite("bits", &CodecConfig::bits)
      .def_readwrite("strength", &CodecConfig::strength)
      .def_readwrite("alpha_override", &CodecConfig::alpha_override)
      .def_readwrite("groups", &CodecConfig::groups)
      .def_readwrite("use_geometric_mask", &CodecConfig::use_geometric_mask)
      .def_readwrite("use_texture_mask", &CodecConfig::use_texture_mask)
      .def_readwrite("mask_floor", &CodecConfig::mask_floor)
      .def_readwrite("mode", &CodecConfig::mode)
      .def_readwrite("family", &CodecConfig::family)
      .def_readwrite("margin", &CodecConfig::margin)
      .def("validate", &CodecConfig::validate, py::arg("channels"))
      .def("to_json", [](const CodecConfig& c) { return codec_config_to_json(c); })
      .def_static("from_json", &codec_config_from_json);

  py::class_<SignatureSet>(m, "SignatureSet")
      .def_readonly("alpha", &SignatureSet::alpha)
      .def_readonly("channels", &SignatureSet::channels)
      .def_readonly("height", &SignatureSet::height)
      .def_readonly("config", &SignatureSet::cfg)
      .def("save", [](const SignatureSet& s, const std::string& base) { write_signature(base, s); })
      .def_static("load", &read_signature);

  m.def("synthetic_cover", [](int height, int channels, std::uint64_t seed) {
    return to_array(synthetic_cover(height, channels, seed));
  }, py::arg("height") = 64, py::arg("channels") = 3, py::arg("seed") = 0);

  m.def("payload_hex", [](const std::vector<int>& bits) { return payload_hex(Payload(bits.begin(), bits.end())); });
  m.def("random_payload", [](int bits, std::uint64_t seed) {
    const Payload w = random_payload(bits, seed);
    return std::vector<int>(w.begin(), w.end());
  });

  m.def(
      "embed",
      [](const Array& image, const py::object& payload, std::uint64_t key, const CodecConfig& cfg) {
        const EmbedResult r = embed(to_image(image), to_payload(payload, cfg.bits), key, cfg);
        return py::make_tuple(to_array(r.image), r.side, r.clip_loss);
      },
      py::arg("image"), py::arg("payload"), py::arg("key") = 42, py::arg("config") = CodecConfig{},
      "Returns (watermarked image, side info, clip loss).");

  m.def(
      "extract",
      [](const Array& image, const SignatureSet& side, std::uint64_t key, const std::string& rule) {
        if (rule != "joint" && rule != "matched") throw ValidationError("rule must be 'joint' or 'matched'");
        const auto e = extract_nonblind(to_image(image), side, key, rule == "joint" ? Decision::kJoint : Decision::kMatched);
        py::dict d;
        d["bits"] = std::vector<int>(e.bits.begin(), e.bits.end());
        d["payload_hex"] = payload_hex(e.bits);
        d["statistic"] = e.statistic;
        d["confidence"] = e.confidence;
        d["explained"] = e.explained;
        d["low_confidence"] = e.low_confidence;
        return d;
      },
      py::arg("image"), py::arg("side"), py::arg("key") = 42, py::arg("rule") = "joint");

  m.def("attack", [](const Array& image, const std::string& spec) {
    return to_array(apply_distortion(to_image(image), parse_distortion(spec)));
  }, py::arg("image"), py::arg("spec"));

  m.def("rotate", [](const Array& image, std::uint64_t seed) {
    return to_array(rotate_image(to_image(image), random_rotation(seed)));
  }, py::arg("image"), py::arg("seed"), "Rotate by a Haar-random rotation drawn from seed.");

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); });

  m.def("bispectrum", [](const Array& image, int l_max) {
    return bispectrum_vector(forward_sht(to_image(image), l_max), all_triplets(l_max)).real();
  }, py::arg("image"), py::arg("l_max") = 16, "Real parts of all admissible triplet components.");

  m.def("bispectrum_cosine", [](const Array& a, const Array& b, int l_max) {
    const auto t = all_triplets(l_max);
    return bispectrum_cosine(bispectrum_vector(forward_sht(to_image(a), l_max), t),
                             bispectrum_vector(forward_sht(to_image(b), l_max), t));
  }, py::arg("a"), py::arg("b"), py::arg("l_max") = 16);

  m.def("read_ppm", [](const std::string& path) { return to_array(read_ppm(path)); });
  m.def("write_ppm", [](const std::string& path, const Array& image) { write_ppm(path, to_image(image)); });
}
