#include <CLI11.hpp>

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "qkd/endpoint.hpp"
#include "qkd/error.hpp"
#include "qkd/http_api.hpp"
#include "qkd/paper_vector.hpp"
#include "qkd/report.hpp"
#include "qkd/session.hpp"

using namespace qkd;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kError = 1, kAborted = 2, kReplayFailed = 3 };

struct SessionFlags {
  std::size_t bits = 1024;
  std::size_t sample = 100;
  double threshold = 0.0;
  std::uint64_t seed_alice = 1;
  std::uint64_t seed_bob = 2;
  std::uint64_t seed_optics = 3;
  std::uint64_t seed_eve = 4;
  std::optional<double> eve_tap;
  double noise = 0.02;
  double drift = 0.0;
  double pulse_ns = 20.0;
  bool swap = false;

  SessionConfig session() const {
    SessionConfig c;
    c.n_bits = bits;
    c.sample_len = sample;
    c.abort_mismatch_threshold = threshold;
    c.seed_alice = seed_alice;
    c.seed_bob = seed_bob;
    c.validate();
    return c;
  }
  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.noise_sigma_volts = noise;
    p.drift_offset_deg = drift;
    p.pulse_width_ns = pulse_ns;
    p.swap_channels = swap;
    p.seed = seed_optics;
    p.validate();
    return p;
  }
  std::optional<EveConfig> eve() const {
    if (!eve_tap) return std::nullopt;
    EveConfig e;
    e.tap_fraction = *eve_tap;
    e.seed_eve = seed_eve;
    e.validate();
    return e;
  }
};

void add_common(CLI::App* cmd, SessionFlags& f) {
  cmd->add_option("--bits", f.bits, "Number of transmitted slots")->capture_default_str();
  cmd->add_option("--sample", f.sample, "Sifted bits compared publicly")->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Highest tolerated sample mismatch rate")->capture_default_str();
  cmd->add_option("--noise", f.noise, "Detector noise sigma in volts")->capture_default_str();
  cmd->add_option("--drift", f.drift, "Fiber polarization drift in degrees")->capture_default_str();
  cmd->add_option("--pulse-ns", f.pulse_ns, "Laser pulse width in ns (6-39)")->capture_default_str();
  cmd->add_flag("--swap-channels", f.swap, "Detector cables swapped");
}

void add_eve(CLI::App* cmd, SessionFlags& f) {
  cmd->add_option("--eve-tap", f.eve_tap, "Place an intercept-resend eavesdropper tapping this fraction")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed-eve", f.seed_eve, "Eavesdropper seed")->capture_default_str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::InvalidArgument, "cannot open '" + path + "' for writing");
  out << content;
  if (!out.flush()) throw Error(Errc::InvalidArgument, "cannot write '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_report(const json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_file(out_path, report.dump(2) + "\n");
  }
}

int exit_for(Verdict v) { return v == Verdict::KeyEstablished ? kOk : kAborted; }

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const SessionFlags& f, const std::string& out, const std::string& trace_out) {
  const auto session = f.session();
  const auto pipeline = f.pipeline();
  const auto eve = f.eve();
  const auto decoder = decoder_for(pipeline);
  const SessionOutcome result = run_session(session, pipeline, eve, decoder);
  if (!trace_out.empty()) write_file(trace_out, write_trace_csv(result.trace));
  emit_report(report::run_report(result, session, pipeline, eve, decoder), out);
  if (!out.empty()) {
    std::printf("%s: sifted %zu, sample mismatches %zu/%zu, final key %zu bits\n",
                std::string(to_string(result.verdict)).c_str(), result.transcript.alice_sifted.size(),
                result.transcript.sample_mismatches, result.transcript.sample_len, result.final_key.size());
  }
  return exit_for(result.verdict);
}

// ---- decode -----------------------------------------------------------------

struct DecodeFlags {
  std::string input;
  double slot_ns = 100.0;
  double pulse_ns = 20.0;
  double threshold = 0.6;
  std::optional<std::size_t> expect;
  bool swap = false;
};

int cmd_decode(const DecodeFlags& f) {
  DecoderConfig d;
  d.slot_period_ns = f.slot_ns;
  d.pulse_width_ns = f.pulse_ns;
  d.certain_threshold = f.threshold;
  d.expected_slots = f.expect;
  d.swap_channels = f.swap;
  const std::string text = f.input == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {}) : read_file(f.input);
  const auto trits = decode_trace(parse_trace_csv(text), d);
  if (!trits.empty()) std::cout << to_string(trits) << "\n";
  return kOk;
}

// ---- alice / bob ------------------------------------------------------------

struct NetFlags {
  std::string address;
  bool sim_extension = false;
  std::uint32_t protocol_version = wire::kProtocolVersion;
  double timeout_s = 30.0;
  std::string out;
};

std::chrono::milliseconds millis(double seconds) {
  return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
}

channel::MessageStream::Observer recorder(json& frames, const char* me, const char* peer) {
  return [&frames, me, peer](channel::Direction d, const wire::Message& msg, std::span<const std::uint8_t> bytes) {
    frames.push_back({{"from", d == channel::Direction::Sent ? me : peer},
                      {"type", std::string(wire::to_string(wire::type_of(msg)))},
                      {"bytes", report::to_hex(bytes)}});
  };
}

void require_extension(const NetFlags& n) {
  if (!n.sim_extension) {
    throw Error(Errc::InvalidArgument,
                "two-process runs have no optical link between the processes; pass --sim-extension to let Alice's "
                "side simulate it (not secure: Bob's bases and detector capture cross the public channel)");
  }
}

int cmd_alice(const SessionFlags& f, const NetFlags& n) {
  require_extension(n);
  const auto session = f.session();
  const auto pipeline = f.pipeline();
  const auto eve = f.eve();
  RandomSource rng(session.seed_alice);
  AliceRecord record;
  std::tie(record.bits, record.bases) = generate_random(session.n_bits, rng);

  channel::TcpListener listener(n.address);
  std::fprintf(stderr, "alice: listening on port %u\n", static_cast<unsigned>(listener.port()));
  auto link = listener.accept(millis(n.timeout_s), millis(n.timeout_s));
  channel::AliceParty alice(record, session.sample_len, n.protocol_version, make_simulator(record, pipeline, eve));
  json frames = json::array();
  const auto outcome = channel::alice_endpoint(alice, *link, recorder(frames, "alice", "bob"));
  json report = {{"role", "alice"},
                 {"config",
                  {{"session", report::to_json(session)},
                   {"pipeline", report::to_json(pipeline)},
                   {"eve", eve ? report::to_json(*eve) : json(nullptr)}}},
                 {"outcome", report::to_json(outcome)},
                 {"sifted_key", to_string(alice.sifted_key())},
                 {"channel", std::move(frames)}};
  emit_report(report, n.out);
  return exit_for(outcome.verdict);
}

int cmd_bob(const SessionFlags& f, const NetFlags& n) {
  require_extension(n);
  const auto session = f.session();
  const auto pipeline = f.pipeline();
  const auto decoder = decoder_for(pipeline);
  RandomSource rng(session.seed_bob);
  const auto bases = random_bases(session.n_bits, rng);

  auto link = channel::tcp_connect(n.address, millis(n.timeout_s), millis(n.timeout_s));
  channel::BobParty bob(bases, make_trace_decoder(decoder, session.n_bits, rng), session.abort_mismatch_threshold,
                        n.protocol_version);
  json frames = json::array();
  const auto outcome = channel::bob_endpoint(bob, *link, recorder(frames, "bob", "alice"));
  json report = {{"role", "bob"},
                 {"config", {{"session", report::to_json(session)}, {"decoder", report::to_json(decoder)}}},
                 {"outcome", report::to_json(outcome)},
                 {"sifted_key", to_string(bob.sifted_key())},
                 {"trits", bob.measurement() ? json(to_string(bob.measurement()->trits)) : json(nullptr)},
                 {"channel", std::move(frames)}};
  emit_report(report, n.out);
  return exit_for(outcome.verdict);
}

// ---- replay-paper -----------------------------------------------------------

void print_tables(const Transcript& t) {
  std::printf("sending\n  %-5s %-3s %-5s %-5s\n", "slot", "bit", "basis", "state");
  for (const SlotRow& r : t.rows) {
    std::printf("  %-5zu %-3c %-5s %-5s\n", r.index, to_char(r.alice_bit), std::string(to_string(r.alice_basis)).c_str(),
                state_name(r.state).c_str());
  }
  std::printf("receiving\n  %-5s %-5s %-7s %-7s %-4s %-4s\n", "slot", "basis", "ch1 V", "ch2 V", "read", "bit");
  for (const SlotRow& r : t.rows) {
    std::printf("  %-5zu %-5s %-7.3f %-7.3f %-4c %-4c\n", r.index, std::string(to_string(r.bob_basis)).c_str(),
                r.mean_ch1_v, r.mean_ch2_v, to_char(r.trit), to_char(r.bob_bit));
  }
  std::printf("comparing\n  %-5s %-6s %-6s %-5s %-4s\n", "slot", "alice", "bob", "kept", "key");
  for (const SlotRow& r : t.rows) {
    std::printf("  %-5zu %-6s %-6s %-5s %-4c\n", r.index, std::string(to_string(r.alice_basis)).c_str(),
                std::string(to_string(r.bob_basis)).c_str(), r.kept ? "yes" : "no",
                r.key_bit ? to_char(*r.key_bit) : '-');
  }
}

int cmd_replay(bool show_measured, std::optional<double> eve_tap, std::uint64_t seed_eve) {
  namespace pv = paper_vector;
  const std::vector<std::uint32_t> indices(pv::kMatchingIndices.begin(), pv::kMatchingIndices.end());
  int failures = 0;
  const auto check = [&](bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "ok  " : "FAIL", what.c_str());
    if (!ok) ++failures;
  };

  const std::string direct = to_string(extract_key(parse_bits(pv::kKey), indices));
  check(direct == pv::kDesiredOutput, "sift of " + std::string(pv::kKey) + " -> " + direct);

  SessionConfig config;
  config.sample_len = 0;
  PipelineConfig pipeline;
  pipeline.noise_sigma_volts = 0.0;
  const auto prepared = pv::prepared_session();
  const SessionOutcome out = run_prepared_session(prepared, config, pipeline, std::nullopt, decoder_for(pipeline));
  print_tables(out.transcript);
  check(out.transcript.matching_indices == indices, "matching indices reproduced");
  check(out.transcript.alice_final == out.transcript.bob_final, "Alice and Bob hold the same key");
  std::printf("key %s\n", to_string(out.final_key).c_str());
  check(to_string(out.final_key) == pv::kDesiredOutput, "final key equals " + std::string(pv::kDesiredOutput));

  if (show_measured) {
    const std::string measured = to_string(out.transcript.bob_measured());
    const std::string projected = to_string(extract_key(out.transcript.bob_measured(), indices));
    std::printf("measured %s\nprojected %s\n", measured.c_str(), projected.c_str());
    check(projected == pv::kDesiredOutput, "measured string projects onto the key");
  }

  if (eve_tap) {
    EveConfig eve;
    eve.tap_fraction = *eve_tap;
    eve.seed_eve = seed_eve;
    eve.validate();
    const SessionOutcome tapped = run_prepared_session(pv::prepared_session(false), config, pipeline, eve,
                                                       decoder_for(pipeline));
    std::size_t diff = 0;
    for (std::size_t i = 0; i < tapped.transcript.alice_sifted.size(); ++i) {
      diff += tapped.transcript.alice_sifted[i] != tapped.transcript.bob_sifted[i];
    }
    std::printf("eve tap %.3f: sifted mismatches %zu/%zu (%.3f observed, %.3f expected)\n", *eve_tap, diff,
                tapped.transcript.alice_sifted.size(), tapped.sifted_qber(), expected_qber(*eve_tap));
  }
  return failures == 0 ? kOk : kReplayFailed;
}

// ---- serve ------------------------------------------------------------------

int cmd_serve(const std::string& host, int port, const std::string& static_dir) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::SessionManager sessions;
  service::ApiServer api(sessions, static_dir.empty() ? std::nullopt : std::optional<std::string>(static_dir));
  const int bound = api.bind(host, port);
  std::printf("serving http://%s:%d/api/v1/\n", host.c_str(), bound);
  std::fflush(stdout);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    api.stop();
  });
  api.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BB84 photonic key distribution simulator"};
  app.require_subcommand(1);

  SessionFlags session;
  std::string out, trace_out;
  auto* simulate = app.add_subcommand("simulate", "Run a whole session in process and write its report");
  add_common(simulate, session);
  add_eve(simulate, session);
  simulate->add_option("--seed-alice", session.seed_alice, "Alice's seed")->capture_default_str();
  simulate->add_option("--seed-bob", session.seed_bob, "Bob's seed")->capture_default_str();
  simulate->add_option("--seed-optics", session.seed_optics, "Detector noise seed")->capture_default_str();
  simulate->add_option("--out", out, "Report path (default: standard output)");
  simulate->add_option("--trace-out", trace_out, "Write the detector capture as CSV");

  DecodeFlags decode;
  auto* dec = app.add_subcommand("decode", "Decode a two-channel detector capture into 0/1/? per slot");
  dec->add_option("--input", decode.input, "Capture CSV, or - for standard input")->required();
  dec->add_option("--slot-ns", decode.slot_ns, "Slot period in ns")->capture_default_str();
  dec->add_option("--pulse-ns", decode.pulse_ns, "Pulse width in ns")->capture_default_str();
  dec->add_option("--threshold", decode.threshold, "Contrast needed for a certain reading")->capture_default_str();
  dec->add_option("--expect", decode.expect, "Required number of slots");
  dec->add_flag("--swap-channels", decode.swap, "Detector cables swapped");

  NetFlags net;
  auto* alice = app.add_subcommand("alice", "Networked transmitter; listens for Bob");
  alice->add_option("--listen", net.address, "host:port to listen on")->required();
  add_common(alice, session);
  add_eve(alice, session);
  alice->add_option("--seed-alice", session.seed_alice, "Alice's seed")->capture_default_str();
  alice->add_option("--seed-optics", session.seed_optics, "Detector noise seed")->capture_default_str();

  auto* bob = app.add_subcommand("bob", "Networked receiver; connects to Alice");
  bob->add_option("--connect", net.address, "host:port of Alice")->required();
  add_common(bob, session);
  bob->add_option("--seed-bob", session.seed_bob, "Bob's seed")->capture_default_str();

  for (auto* cmd : {alice, bob}) {
    cmd->add_flag("--sim-extension", net.sim_extension, "Simulate the optical link over the public channel (not secure)");
    cmd->add_option("--timeout", net.timeout_s, "Seconds to wait for the peer")->capture_default_str();
    cmd->add_option("--out", net.out, "Report path (default: standard output)");
    cmd->add_option("--protocol-version", net.protocol_version)->group("");
  }

  bool show_measured = false;
  std::optional<double> replay_eve;
  std::uint64_t replay_seed_eve = 4;
  auto* replay = app.add_subcommand("replay-paper", "Replay the published 24-slot test vector");
  replay->add_flag("--show-measured", show_measured, "Print Bob's raw reading and its projection");
  replay->add_option("--eve-tap", replay_eve, "Also replay with an eavesdropper at this tap fraction")
      ->check(CLI::Range(0.0, 1.0));
  replay->add_option("--seed-eve", replay_seed_eve, "Eavesdropper seed")->capture_default_str();

  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the demo session API and UI assets");
  serve->add_option("--host", host, "Address to bind")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--static", static_dir, "Directory of UI assets")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kError;
  }

  try {
    if (*simulate) return cmd_simulate(session, out, trace_out);
    if (*dec) return cmd_decode(decode);
    if (*alice) return cmd_alice(session, net);
    if (*bob) return cmd_bob(session, net);
    if (*replay) return cmd_replay(show_measured, replay_eve, replay_seed_eve);
    if (*serve) return cmd_serve(host, port, static_dir);
  } catch (const Error& e) {
    std::string where;
    if (e.where()) {
      const bool line = e.code() == Errc::RowParseError || e.code() == Errc::MalformedHeader ||
                        e.code() == Errc::NonMonotonicTime || e.code() == Errc::NonUniformSpacing;
      where = std::string(line ? " (line " : " (slot ") + std::to_string(*e.where()) + ")";
    }
    std::fprintf(stderr, "error: %s%s\n", e.what(), where.c_str());
    return kError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
