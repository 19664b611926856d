#include "qkd/service.hpp"

#include <algorithm>

#include "qkd/error.hpp"
#include "qkd/report.hpp"

namespace qkd::service {

namespace {

constexpr std::size_t kMaxDemoBits = 65536;
constexpr std::size_t kMaxEvents = 100000;

const json& object_or_empty(const json& body) {
  static const json empty = json::object();
  if (body.is_null()) return empty;
  if (!body.is_object()) throw Error(Errc::InvalidArgument, "request body must be a JSON object");
  return body;
}

void reject_unknown(const json& body, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : body.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(Errc::InvalidArgument, "unknown field '" + key + "'");
    }
  }
}

}  // namespace

std::optional<std::uint64_t> as_unsigned(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  return std::nullopt;
}

namespace {

double number(const json& body, const char* key, double fallback) {
  if (!body.contains(key)) return fallback;
  const json& v = body.at(key);
  if (!v.is_number()) throw Error(Errc::InvalidArgument, std::string(key) + " must be a number");
  return v.get<double>();
}

std::uint64_t unsigned_number(const json& body, const char* key, std::uint64_t fallback) {
  if (!body.contains(key)) return fallback;
  const auto v = as_unsigned(body.at(key));
  if (!v) throw Error(Errc::InvalidArgument, std::string(key) + " must be a non-negative integer");
  return *v;
}

bool is_auto(const json& v) { return v.is_string() && v.get<std::string>() == "auto"; }

std::optional<Bit> bit_choice(const json& v) {
  if (v.is_null() || is_auto(v)) return std::nullopt;
  if (const auto n = as_unsigned(v); n && *n <= 1) return bit_from(*n == 1);
  if (v.is_string() && (v == "0" || v == "1")) return bit_from(v == "1");
  throw Error(Errc::InvalidArgument, "bit must be 0, 1 or \"auto\"");
}

std::optional<Basis> basis_choice(const json& v) {
  if (v.is_null() || is_auto(v)) return std::nullopt;
  if (!v.is_string()) throw Error(Errc::InvalidArgument, "basis must be \"HV\", \"DAD\" or \"auto\"");
  return parse_basis(v.get<std::string>());
}

ServiceError conflict(const std::string& what) { return ServiceError(409, "Conflict", what); }

}  // namespace

Role parse_role(std::string_view text) {
  if (text == "alice") return Role::Alice;
  if (text == "bob") return Role::Bob;
  if (text == "instructor" || text.empty()) return Role::Instructor;
  throw Error(Errc::InvalidArgument, "role must be alice, bob or instructor");
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Alice: return "alice";
    case Role::Bob: return "bob";
    case Role::Instructor: return "instructor";
  }
  return "instructor";
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Encoding: return "encoding";
    case Phase::Receiving: return "receiving";
    case Phase::Comparing: return "comparing";
    case Phase::Complete: return "complete";
  }
  return "encoding";
}

DemoConfig DemoConfig::from_json(const json& raw) {
  const json& body = object_or_empty(raw);
  reject_unknown(body, {"n_bits", "sample_len", "threshold", "seed_alice", "seed_bob", "seed_optics", "seed_eve",
                        "noise", "drift", "eve_tap"});
  DemoConfig c;
  c.session.n_bits = unsigned_number(body, "n_bits", 16);
  if (c.session.n_bits > kMaxDemoBits) {
    throw Error(Errc::InvalidConfig, "n_bits above " + std::to_string(kMaxDemoBits) + " is not supported interactively");
  }
  c.session.sample_len = unsigned_number(body, "sample_len", c.session.n_bits / 8);
  c.session.abort_mismatch_threshold = number(body, "threshold", 0.0);
  c.session.seed_alice = unsigned_number(body, "seed_alice", 1);
  c.session.seed_bob = unsigned_number(body, "seed_bob", 2);
  c.pipeline.seed = unsigned_number(body, "seed_optics", 3);
  c.pipeline.noise_sigma_volts = number(body, "noise", c.pipeline.noise_sigma_volts);
  c.pipeline.drift_offset_deg = number(body, "drift", 0.0);
  c.eve.seed_eve = unsigned_number(body, "seed_eve", 4);
  if (body.contains("eve_tap")) {
    c.eve.tap_fraction = number(body, "eve_tap", 1.0);
    c.eve_enabled = true;
  }
  c.session.validate();
  c.pipeline.validate();
  c.eve.validate();
  return c;
}

DemoSession::DemoSession(std::string id, DemoConfig config)
    : id_(std::move(id)),
      config_(std::move(config)),
      alice_rng_(config_.session.seed_alice),
      bob_rng_(config_.session.seed_bob),
      optics_rng_(config_.pipeline.seed) {
  if (config_.eve_enabled) {
    eve_.emplace(config_.eve);
    eve_enabled_ = true;
  }
  outcome_.verdict = Verdict::Aborted;
  emit_locked("created", {{"n_bits", config_.session.n_bits}, {"sample_len", config_.session.sample_len}});
}

Phase DemoSession::phase_locked() const {
  if (compared_) return Phase::Complete;
  if (outcome_.transcript.rows.size() == config_.session.n_bits) return Phase::Comparing;
  return pending_.alice_chosen ? Phase::Receiving : Phase::Encoding;
}

void DemoSession::emit_locked(std::string type, json data, std::optional<std::size_t> round, bool instructor_only) {
  events_.push_back({next_seq_++, std::move(type), round, std::move(data), instructor_only});
  if (events_.size() > kMaxEvents) events_.erase(events_.begin(), events_.begin() + kMaxEvents / 10);
  cv_.notify_all();
}

json DemoSession::choose(const json& raw) {
  const json& body = object_or_empty(raw);
  reject_unknown(body, {"role", "bit", "basis"});
  if (!body.contains("role") || !body["role"].is_string()) throw Error(Errc::InvalidArgument, "role is required");
  const Role role = parse_role(body["role"].get<std::string>());
  std::lock_guard lock(mu_);
  if (phase_locked() == Phase::Comparing || compared_) throw conflict("all rounds have been sent");
  const std::size_t round = outcome_.transcript.rows.size();
  switch (role) {
    case Role::Alice:
      pending_.alice_bit = bit_choice(body.value("bit", json("auto")));
      pending_.alice_basis = basis_choice(body.value("basis", json("auto")));
      pending_.alice_chosen = true;
      break;
    case Role::Bob:
      if (body.contains("bit")) throw Error(Errc::InvalidArgument, "bob chooses a basis only");
      pending_.bob_basis = basis_choice(body.value("basis", json("auto")));
      pending_.bob_chosen = true;
      break;
    case Role::Instructor:
      throw Error(Errc::InvalidArgument, "the instructor does not choose bits or bases");
  }
  emit_locked("choice", {{"role", to_string(role)}, {"round", round}});
  return view_locked(role);
}

json DemoSession::set_eve(const json& raw) {
  const json& body = object_or_empty(raw);
  reject_unknown(body, {"enabled", "tap_fraction", "mode", "photon_count"});
  std::lock_guard lock(mu_);
  if (compared_) throw conflict("session already compared");
  EveConfig next = config_.eve;
  next.tap_fraction = number(body, "tap_fraction", next.tap_fraction);
  if (body.contains("mode")) {
    const json& m = body["mode"];
    if (m == "beam") {
      next.mode = EveMode::Beam;
    } else if (m == "photon") {
      next.mode = EveMode::Photon;
    } else {
      throw Error(Errc::InvalidArgument, "mode must be beam or photon");
    }
  }
  next.photon_count = static_cast<int>(unsigned_number(body, "photon_count", static_cast<std::uint64_t>(next.photon_count)));
  next.validate();
  bool enabled = eve_enabled_;
  if (body.contains("enabled")) {
    if (!body["enabled"].is_boolean()) throw Error(Errc::InvalidArgument, "enabled must be a boolean");
    enabled = body["enabled"].get<bool>();
  }
  if (eve_ && (next.mode != config_.eve.mode || next.photon_count != config_.eve.photon_count)) {
    throw conflict("Eve's mode is fixed once she has been placed");
  }
  config_.eve = next;
  if (enabled && !eve_) eve_.emplace(config_.eve);
  if (eve_) eve_->set_tap_fraction(next.tap_fraction);
  eve_enabled_ = enabled;
  config_.eve_enabled = config_.eve_enabled || enabled;
  emit_locked("eve",
              {{"enabled", eve_enabled_}, {"tap_fraction", next.tap_fraction}, {"from_round", outcome_.transcript.rows.size()}},
              std::nullopt, true);
  return view_locked(Role::Instructor);
}

json DemoSession::set_optics(const json& raw) {
  const json& body = object_or_empty(raw);
  reject_unknown(body, {"noise", "drift"});
  std::lock_guard lock(mu_);
  if (compared_) throw conflict("session already compared");
  PipelineConfig next = config_.pipeline;
  next.noise_sigma_volts = number(body, "noise", next.noise_sigma_volts);
  next.drift_offset_deg = number(body, "drift", next.drift_offset_deg);
  next.validate();
  config_.pipeline = next;
  emit_locked("optics", {{"noise", next.noise_sigma_volts}, {"drift", next.drift_offset_deg}}, std::nullopt, true);
  return view_locked(Role::Instructor);
}

void DemoSession::run_round_locked() {
  auto& rows = outcome_.transcript.rows;
  const std::size_t i = rows.size();
  const Bit bit = pending_.alice_bit ? *pending_.alice_bit : bit_from(alice_rng_.coin());
  const Basis a_basis = pending_.alice_basis ? *pending_.alice_basis : (alice_rng_.coin() ? Basis::DAD : Basis::HV);
  const Basis b_basis = pending_.bob_basis ? *pending_.bob_basis : (bob_rng_.coin() ? Basis::DAD : Basis::HV);
  pending_ = {};

  Eavesdropper* eve = eve_enabled_ && eve_ ? &*eve_ : nullptr;
  const ChannelPair intensity = propagate_slot(i, bit, a_basis, b_basis, eve, config_.pipeline, optics_rng_);
  const Trace slot_trace = detector_trace(std::span(&intensity, 1), config_.pipeline, optics_rng_);
  DecoderConfig decoder = decoder_for(config_.pipeline);
  decoder.expected_slots = 1;
  const auto stats = segment(to_trace_file(slot_trace), decoder);
  const Trit trit = classify(stats.front(), decoder);

  SlotRow row;
  row.index = i;
  row.alice_bit = bit;
  row.alice_basis = a_basis;
  row.state = encode_state(bit, a_basis);
  row.bob_basis = b_basis;
  row.intensity = intensity;
  row.mean_ch1_v = stats.front().mean_ch1_v;
  row.mean_ch2_v = stats.front().mean_ch2_v;
  row.trit = trit;
  row.bob_bit = trit == Trit::Uncertain ? bit_from(bob_rng_.coin()) : (trit == Trit::One ? Bit::One : Bit::Zero);
  if (eve) row.eve = eve->transcript().back();
  rows.push_back(row);

  auto& trace = outcome_.trace;
  trace.sample_period_ns = slot_trace.sample_period_ns;
  trace.ch1_volts.insert(trace.ch1_volts.end(), slot_trace.ch1_volts.begin(), slot_trace.ch1_volts.end());
  trace.ch2_volts.insert(trace.ch2_volts.end(), slot_trace.ch2_volts.begin(), slot_trace.ch2_volts.end());
  emit_locked("round", json::object(), i);
}

json DemoSession::step(std::size_t count) {
  if (count == 0) throw Error(Errc::InvalidArgument, "count must be >= 1");
  std::lock_guard lock(mu_);
  if (compared_) throw conflict("session already compared");
  const std::size_t left = config_.session.n_bits - outcome_.transcript.rows.size();
  if (left == 0) throw conflict("all rounds have been sent");
  for (std::size_t k = 0; k < std::min(count, left); ++k) run_round_locked();
  if (outcome_.transcript.rows.size() == config_.session.n_bits) emit_locked("phase", {{"phase", "comparing"}});
  return view_locked(Role::Instructor);
}

json DemoSession::compare() {
  std::lock_guard lock(mu_);
  if (compared_) throw conflict("session already compared");
  if (outcome_.transcript.rows.size() != config_.session.n_bits) throw conflict("rounds remain to be sent");

  AliceRecord alice;
  std::vector<Basis> bob_bases;
  channel::BobMeasurement measured;
  for (const SlotRow& r : outcome_.transcript.rows) {
    alice.bits.push_back(r.alice_bit);
    alice.bases.push_back(r.alice_basis);
    bob_bases.push_back(r.bob_basis);
    measured.trits.push_back(r.trit);
    measured.bits.push_back(r.bob_bit);
  }
  try {
    apply_exchange(outcome_, exchange_in_process(alice, bob_bases, measured, config_.session));
  } catch (const Error& e) {
    // Too few matching bases for the sample: nothing to keep.
    outcome_.verdict = Verdict::Aborted;
    outcome_.final_key.clear();
    outcome_.abort_reason = static_cast<std::uint32_t>(wire::AbortReason::ProtocolViolation);
    outcome_.transcript.matching_indices = sift(alice.bases, bob_bases);
    for (std::uint32_t idx : outcome_.transcript.matching_indices) outcome_.transcript.rows[idx].kept = true;
    compare_error_ = std::string(qkd::to_string(e.code()));
  }
  compared_ = true;
  emit_locked("verdict", json::object());
  cv_.notify_all();
  return verdict_locked(Role::Instructor);
}

json DemoSession::abort_session() {
  std::lock_guard lock(mu_);
  if (compared_) throw conflict("session already finished");
  const wire::Abort abort{static_cast<std::uint32_t>(wire::AbortReason::OperatorAbort)};
  outcome_.transcript.channel.push_back({"alice", wire::MsgType::Abort, wire::encode_message(abort)});
  outcome_.verdict = Verdict::Aborted;
  outcome_.abort_reason = abort.reason_code;
  outcome_.final_key.clear();
  compared_ = true;
  emit_locked("verdict", json::object());
  return verdict_locked(Role::Instructor);
}

const BitString& DemoSession::key_for(Role role) const {
  return role == Role::Bob ? outcome_.transcript.bob_final : outcome_.transcript.alice_final;
}

json DemoSession::otp(Role role, const json& raw) {
  const json& body = object_or_empty(raw);
  reject_unknown(body, {"message", "message_hex"});
  std::vector<std::uint8_t> message;
  if (body.contains("message_hex")) {
    const json& h = body["message_hex"];
    if (!h.is_string() || h.get<std::string>().size() % 2 != 0) {
      throw Error(Errc::InvalidArgument, "message_hex must be an even-length hex string");
    }
    const std::string hex = h.get<std::string>();
    for (std::size_t i = 0; i < hex.size(); i += 2) {
      std::size_t used = 0;
      int value = 0;
      try {
        value = std::stoi(hex.substr(i, 2), &used, 16);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != 2) throw Error(Errc::InvalidArgument, "message_hex must be an even-length hex string");
      message.push_back(static_cast<std::uint8_t>(value));
    }
  } else if (body.contains("message") && body["message"].is_string()) {
    const std::string text = body["message"].get<std::string>();
    message.assign(text.begin(), text.end());
  } else {
    throw Error(Errc::InvalidArgument, "message or message_hex is required");
  }
  std::lock_guard lock(mu_);
  if (!compared_ || outcome_.verdict != Verdict::KeyEstablished) throw conflict("no established key");
  const auto out = otp_xor(message, key_for(role));
  return {{"role", to_string(role)},
          {"cipher_hex", report::to_hex(out)},
          {"key_bits_used", message.size() * 8},
          {"key_bits_available", key_for(role).size()}};
}

json DemoSession::row_locked(std::size_t index, Role role) const {
  const SlotRow& r = outcome_.transcript.rows.at(index);
  json row = report::slot_row(r);
  if (role == Role::Instructor) return row;
  if (!compared_) {
    row.erase("eve");
    row.erase("kept");
    row.erase("sample");
    row.erase("key_bit");
  }
  if (role == Role::Alice) {
    for (const char* k : {"ch1_intensity", "ch2_intensity", "ch1_v", "ch2_v", "trit", "bob_bit"}) row.erase(k);
    if (!compared_) row.erase("bob_basis");
  } else {
    row.erase("state");
    // Alice reveals only her sample bits, and only while comparing.
    if (!compared_ || !r.in_sample) row.erase("alice_bit");
    if (!compared_) row.erase("alice_basis");
  }
  return row;
}

json DemoSession::verdict_locked(Role role) const {
  if (!compared_) return nullptr;
  const auto& t = outcome_.transcript;
  json v = {{"verdict", std::string(qkd::to_string(outcome_.verdict))},
            {"abort_reason", outcome_.abort_reason},
            {"sample_mismatch_rate", outcome_.sample_mismatch_rate},
            {"sample_len", t.sample_len},
            {"matching_indices", t.matching_indices},
            {"error", compare_error_ ? json(*compare_error_) : json(nullptr)}};
  if (role != Role::Bob) v["alice_key"] = to_string(t.alice_final);
  if (role != Role::Alice) v["bob_key"] = to_string(t.bob_final);
  if (role == Role::Instructor) v["sifted_qber"] = outcome_.sifted_qber();
  return v;
}

json DemoSession::view_locked(Role role) const {
  json rows = json::array();
  for (std::size_t i = 0; i < outcome_.transcript.rows.size(); ++i) rows.push_back(row_locked(i, role));
  json v = {{"id", id_},
            {"role", to_string(role)},
            {"phase", to_string(phase_locked())},
            {"round", outcome_.transcript.rows.size()},
            {"n_bits", config_.session.n_bits},
            {"sample_len", config_.session.sample_len},
            {"threshold", config_.session.abort_mismatch_threshold},
            {"pending", {{"alice", pending_.alice_chosen}, {"bob", pending_.bob_chosen}}},
            {"rows", std::move(rows)},
            {"verdict", verdict_locked(role)}};
  if (role == Role::Instructor || compared_) {
    v["eve"] = {{"enabled", eve_enabled_},
                {"tap_fraction", config_.eve.tap_fraction},
                {"mode", config_.eve.mode == EveMode::Beam ? "beam" : "photon"}};
  }
  if (role == Role::Instructor) {
    v["optics"] = {{"noise", config_.pipeline.noise_sigma_volts}, {"drift", config_.pipeline.drift_offset_deg}};
  }
  return v;
}

json DemoSession::view(Role role) const {
  std::lock_guard lock(mu_);
  return view_locked(role);
}

json DemoSession::slots(Role role, std::size_t from, bool with_samples) const {
  std::lock_guard lock(mu_);
  if (role == Role::Alice && !compared_) throw ServiceError(403, "Forbidden", "detector readings belong to Bob");
  const std::size_t per_slot = static_cast<std::size_t>(config_.pipeline.samples_per_slot);
  json out = json::array();
  for (std::size_t i = from; i < outcome_.transcript.rows.size(); ++i) {
    const SlotRow& r = outcome_.transcript.rows[i];
    json s = {{"index", i}, {"ch1_v", r.mean_ch1_v}, {"ch2_v", r.mean_ch2_v}, {"trit", std::string(1, to_char(r.trit))}};
    if (with_samples) {
      const auto& t = outcome_.trace;
      const auto first = static_cast<std::ptrdiff_t>(i * per_slot);
      const auto last = static_cast<std::ptrdiff_t>((i + 1) * per_slot);
      s["ch1_samples"] = std::vector<double>(t.ch1_volts.begin() + first, t.ch1_volts.begin() + last);
      s["ch2_samples"] = std::vector<double>(t.ch2_volts.begin() + first, t.ch2_volts.begin() + last);
    }
    out.push_back(std::move(s));
  }
  return {{"sample_period_ns", config_.pipeline.sample_period_ns()}, {"slots", std::move(out)}};
}

json DemoSession::transcript(Role role) const {
  std::lock_guard lock(mu_);
  json rows = json::array();
  for (std::size_t i = 0; i < outcome_.transcript.rows.size(); ++i) rows.push_back(row_locked(i, role));
  return {{"rows", std::move(rows)}};
}

json DemoSession::verdict(Role role) const {
  std::lock_guard lock(mu_);
  return verdict_locked(role);
}

json DemoSession::report() const {
  std::lock_guard lock(mu_);
  if (!compared_) throw conflict("the report is available after compare");
  return report::run_report(outcome_, config_.session, config_.pipeline,
                            config_.eve_enabled ? std::optional<EveConfig>(config_.eve) : std::nullopt,
                            decoder_for(config_.pipeline));
}

json DemoSession::render_event_locked(const Event& ev, Role role) const {
  json data = ev.data;
  if (ev.type == "round" && ev.round) data = row_locked(*ev.round, role);
  if (ev.type == "verdict") data = verdict_locked(role);
  return {{"seq", ev.seq}, {"type", ev.type}, {"data", std::move(data)}};
}

std::vector<json> DemoSession::events_since(std::uint64_t after, Role role, std::chrono::milliseconds wait,
                                            bool& closed) {
  std::unique_lock lock(mu_);
  const auto ready = [&] { return closed_ || (!events_.empty() && events_.back().seq > after); };
  if (!ready()) cv_.wait_for(lock, wait, ready);
  std::vector<json> out;
  for (const Event& ev : events_) {
    if (ev.seq <= after) continue;
    if (ev.instructor_only && role != Role::Instructor) continue;
    out.push_back(render_event_locked(ev, role));
  }
  closed = closed_;
  return out;
}

void DemoSession::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

std::shared_ptr<DemoSession> SessionManager::create(const json& body) {
  DemoConfig config = DemoConfig::from_json(body);
  std::lock_guard lock(mu_);
  if (sessions_.size() >= max_sessions_) throw ServiceError(503, "TooManySessions", "session limit reached");
  const std::string id = "s" + std::to_string(++counter_);
  auto session = std::make_shared<DemoSession>(id, std::move(config));
  sessions_.emplace(id, session);
  return session;
}

std::shared_ptr<DemoSession> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "NotFound", "no session '" + id + "'");
  return it->second;
}

void SessionManager::remove(const std::string& id) {
  std::shared_ptr<DemoSession> session;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "NotFound", "no session '" + id + "'");
    session = it->second;
    sessions_.erase(it);
  }
  session->close();
}

json SessionManager::list() const {
  std::lock_guard lock(mu_);
  json ids = json::array();
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return {{"sessions", std::move(ids)}};
}

void SessionManager::close_all() {
  std::lock_guard lock(mu_);
  for (auto& [id, s] : sessions_) s->close();
}

}  // namespace qkd::service
