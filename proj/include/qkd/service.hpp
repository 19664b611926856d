#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qkd/adversary.hpp"
#include "qkd/session.hpp"

// Round-by-round sessions behind the demo UI. Every mutation of one session
// is serialized by that session's mutex; sessions share nothing.
namespace qkd::service {

using nlohmann::json;

// Failures that are about the request rather than the physics: unknown
// session, wrong phase. Carries the HTTP status the API answers with.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& what)
      : std::runtime_error(what), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

// Non-negative JSON integer, whichever way the parser stored it.
std::optional<std::uint64_t> as_unsigned(const json& v);

enum class Role { Alice, Bob, Instructor };
Role parse_role(std::string_view text);
std::string_view to_string(Role role) noexcept;

enum class Phase { Encoding, Receiving, Comparing, Complete };
std::string_view to_string(Phase phase) noexcept;

struct DemoConfig {
  SessionConfig session;
  PipelineConfig pipeline;
  EveConfig eve;  // used once Eve is switched on
  bool eve_enabled = false;

  // Fields: n_bits, sample_len (default n_bits/8), threshold, seed_alice,
  // seed_bob, seed_optics, seed_eve, noise, drift, eve_tap. Unknown fields
  // are rejected.
  static DemoConfig from_json(const json& body);
};

struct Event {
  std::uint64_t seq = 0;
  std::string type;
  std::optional<std::size_t> round;
  json data;
  bool instructor_only = false;
};

class DemoSession {
 public:
  DemoSession(std::string id, DemoConfig config);

  const std::string& id() const noexcept { return id_; }

  // {"role":"alice","bit":0|1|"auto","basis":"HV"|"DAD"|"auto"} or
  // {"role":"bob","basis":...}; applies to the next round.
  json choose(const json& body);
  // {"enabled":bool,"tap_fraction":f,"mode":"beam"|"photon","photon_count":k}
  json set_eve(const json& body);
  // {"noise":sigma,"drift":deg}; affects later rounds only.
  json set_optics(const json& body);
  json step(std::size_t count);
  json compare();
  json abort_session();
  json otp(Role role, const json& body);

  json view(Role role) const;
  json slots(Role role, std::size_t from, bool with_samples) const;
  json transcript(Role role) const;
  json verdict(Role role) const;
  json report() const;

  // Events with seq > after, rendered for `role`. Blocks up to `wait` when
  // none are pending. `closed` is set once the session is gone.
  std::vector<json> events_since(std::uint64_t after, Role role, std::chrono::milliseconds wait, bool& closed);
  void close();

 private:
  struct Pending {
    std::optional<Bit> alice_bit;
    std::optional<Basis> alice_basis;
    bool alice_chosen = false;
    std::optional<Basis> bob_basis;
    bool bob_chosen = false;
  };

  Phase phase_locked() const;
  json row_locked(std::size_t index, Role role) const;
  json view_locked(Role role) const;
  json verdict_locked(Role role) const;
  void emit_locked(std::string type, json data, std::optional<std::size_t> round = std::nullopt,
                   bool instructor_only = false);
  json render_event_locked(const Event& ev, Role role) const;
  void run_round_locked();
  const BitString& key_for(Role role) const;

  std::string id_;
  DemoConfig config_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool closed_ = false;

  RandomSource alice_rng_;
  RandomSource bob_rng_;
  RandomSource optics_rng_;
  std::optional<Eavesdropper> eve_;
  bool eve_enabled_ = false;

  Pending pending_;
  SessionOutcome outcome_;  // rows grow per round; comparing fields after compare()
  bool compared_ = false;
  std::optional<std::string> compare_error_;
  std::vector<Event> events_;
  std::uint64_t next_seq_ = 1;
};

class SessionManager {
 public:
  explicit SessionManager(std::size_t max_sessions = 256) : max_sessions_(max_sessions) {}

  std::shared_ptr<DemoSession> create(const json& body);
  std::shared_ptr<DemoSession> get(const std::string& id) const;
  void remove(const std::string& id);
  json list() const;
  // Wakes every event stream so the server can shut down.
  void close_all();

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<DemoSession>> sessions_;
  std::uint64_t counter_ = 0;
  std::size_t max_sessions_;
};

}  // namespace qkd::service
