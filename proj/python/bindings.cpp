#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "qkd/adversary.hpp"
#include "qkd/bb84.hpp"
#include "qkd/error.hpp"
#include "qkd/paper_vector.hpp"
#include "qkd/polarization.hpp"
#include "qkd/report.hpp"
#include "qkd/session.hpp"
#include "qkd/trace_codec.hpp"
#include "qkd/wire.hpp"

namespace py = pybind11;
using namespace qkd;

namespace {

std::string simulate(std::size_t n_bits, std::size_t sample_len, double threshold, std::uint64_t seed_alice,
                     std::uint64_t seed_bob, std::uint64_t seed_optics, double noise, double drift,
                     std::optional<double> eve_tap, std::uint64_t seed_eve) {
  SessionConfig s;
  s.n_bits = n_bits;
  s.sample_len = sample_len;
  s.abort_mismatch_threshold = threshold;
  s.seed_alice = seed_alice;
  s.seed_bob = seed_bob;
  PipelineConfig p;
  p.seed = seed_optics;
  p.noise_sigma_volts = noise;
  p.drift_offset_deg = drift;
  std::optional<EveConfig> eve;
  if (eve_tap) eve = EveConfig{*eve_tap, seed_eve};
  const auto d = decoder_for(p);
  SessionOutcome out;
  {
    py::gil_scoped_release release;
    out = run_session(s, p, eve, d);
  }
  return report::run_report(out, s, p, eve, d).dump();
}

std::string replay_paper() {
  SessionConfig s;
  s.sample_len = 0;
  PipelineConfig p;
  p.noise_sigma_volts = 0.0;
  const auto out = run_prepared_session(paper_vector::prepared_session(), s, p, std::nullopt, decoder_for(p));
  return report::run_report(out, s, p, std::nullopt, decoder_for(p)).dump();
}

std::string decode_csv(const std::string& text, double slot_ns, double pulse_ns, std::optional<std::size_t> expect) {
  DecoderConfig d;
  d.slot_period_ns = slot_ns;
  d.pulse_width_ns = pulse_ns;
  d.expected_slots = expect;
  return to_string(decode_trace(parse_trace_csv(text), d));
}

py::tuple measure(double state_deg, const std::string& basis, std::uint64_t seed, std::size_t trials) {
  RandomSource rng(seed);
  const EncodingTable table;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    ones += measure_photon(PolarizationAngle(state_deg), parse_basis(basis), table, rng).bit == Bit::One;
  }
  return py::make_tuple(trials - ones, ones);
}

py::bytes otp(const py::bytes& message, const std::string& key) {
  const std::string m = message;
  const std::vector<std::uint8_t> in(m.begin(), m.end());
  const auto out = otp_xor(in, parse_bits(key));
  return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
}

py::bytes frame(const wire::Message& msg) {
  const auto bytes = wire::encode_message(msg);
  return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

py::object decode_frame(const py::bytes& data) {
  const std::string s = data;
  const auto r = wire::decode_message(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  if (const auto* need = std::get_if<wire::NeedMoreData>(&r)) return py::make_tuple("NeedMoreData", need->missing);
  const auto& d = std::get<wire::Decoded>(r);
  return py::make_tuple(std::string(wire::to_string(wire::type_of(d.message))), d.consumed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "BB84 photonic key distribution simulator";
  py::exception<Error>(m, "QkdError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object cls = py::module_::import("qkdsim._core").attr("QkdError");
      py::object err = cls(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(cls.ptr(), err.ptr());
    }
  });

  m.def("simulate", &simulate, py::arg("n_bits") = 1024, py::arg("sample_len") = 100, py::arg("threshold") = 0.0,
        py::arg("seed_alice") = 1, py::arg("seed_bob") = 2, py::arg("seed_optics") = 3, py::arg("noise") = 0.02,
        py::arg("drift") = 0.0, py::arg("eve_tap") = py::none(), py::arg("seed_eve") = 4,
        "Run one session; returns the run report as JSON text.");
  m.def("replay_paper", &replay_paper, "Run the published 24-slot vector; returns the run report as JSON text.");
  m.def("decode_trace_csv", &decode_csv, py::arg("text"), py::arg("slot_ns") = 100.0, py::arg("pulse_ns") = 20.0,
        py::arg("expect") = py::none());

  m.def("encode_state", [](int bit, const std::string& basis) {
    return encode_state(bit_from(bit != 0), parse_basis(basis)).degrees();
  });
  m.def("decode_state", [](double deg, const std::string& basis) {
    return static_cast<int>(decode_state(PolarizationAngle(deg), parse_basis(basis)));
  });
  m.def("transmission_fraction", [](double state, double analyzer) {
    return transmission_fraction(PolarizationAngle(state), PolarizationAngle(analyzer));
  });
  m.def("measure_counts", &measure, py::arg("state_deg"), py::arg("basis"), py::arg("seed"), py::arg("trials"),
        "Counts of (0, 1) outcomes over repeated single-photon measurements.");

  m.def("sift", [](const std::string& a, const std::string& b) { return sift(parse_bases(a), parse_bases(b)); });
  m.def("extract_key", [](const std::string& bits, const std::vector<std::uint32_t>& idx) {
    return to_string(extract_key(parse_bits(bits), idx));
  });
  m.def("sample_compare", [](const std::string& a, const std::string& b, std::size_t k, double threshold) {
    const auto r = sample_compare(parse_bits(a), parse_bits(b), k, threshold);
    return py::make_tuple(r.mismatch_rate, std::string(to_string(r.verdict)), to_string(r.alice_remaining));
  });
  m.def("guess_probability", &guess_probability);
  m.def("otp", &otp, py::arg("message"), py::arg("key_bits"));
  m.def("expected_qber", &expected_qber);
  m.def("detection_probability", &detection_probability);

  m.def("encode_hello", [](std::uint32_t version, std::uint32_t n) { return frame(wire::Hello{version, n}); });
  m.def("encode_match_indices", [](const std::vector<std::uint32_t>& idx) { return frame(wire::MatchIndices{idx}); });
  m.def("decode_frame", &decode_frame, "Returns (type name, bytes consumed) or ('NeedMoreData', missing).");
}
