#include "qkd/http_api.hpp"

#include <httplib.h>

#include <charconv>

#include "qkd/error.hpp"

namespace qkd::service {

namespace {

constexpr auto kStreamWait = std::chrono::seconds(15);

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

int status_for(Errc code) {
  switch (code) {
    case Errc::UnsiftableSession: return 409;
    default: return 400;
  }
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "MalformedJson", e.what());
  }
}

std::uint64_t query_number(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ServiceError(400, "InvalidArgument", std::string(key) + " must be a non-negative integer");
  }
  return out;
}

Role role_of(const httplib::Request& req) { return parse_role(req.has_param("role") ? req.get_param_value("role") : ""); }

// Wraps a handler so every failure becomes a structured error payload.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "InvalidArgument", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

std::string sse_frame(const json& ev) {
  return "id: " + std::to_string(ev["seq"].get<std::uint64_t>()) + "\nevent: " + ev["type"].get<std::string>() +
         "\ndata: " + ev.dump() + "\n\n";
}

}  // namespace

ApiServer::ApiServer(SessionManager& sessions, std::optional<std::string> static_dir)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  // Event streams hold a worker each.
  s.new_task_queue = [] { return new httplib::ThreadPool(64); };

  const std::string sid = R"(/api/v1/sessions/([A-Za-z0-9_-]+))";

  s.Get("/api/v1/health", guarded([](const httplib::Request&, httplib::Response& res) {
          send_json(res, {{"status", "ok"}, {"api", "v1"}});
        }));

  s.Get("/api/v1/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, sessions_.list());
        }));

  s.Post("/api/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto session = sessions_.create(body_of(req));
           send_json(res, session->view(Role::Instructor), 201);
         }));

  s.Get(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, sessions_.get(req.matches[1])->view(role_of(req)));
        }));

  s.Delete(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
             sessions_.remove(req.matches[1]);
             send_json(res, {{"deleted", std::string(req.matches[1])}});
           }));

  s.Post(sid + "/choice", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->choose(body_of(req)));
         }));

  s.Post(sid + "/eve", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->set_eve(body_of(req)));
         }));

  s.Post(sid + "/optics", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->set_optics(body_of(req)));
         }));

  s.Post(sid + "/step", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = body_of(req);
           if (!body.is_object()) throw ServiceError(400, "InvalidArgument", "request body must be a JSON object");
           const auto count = as_unsigned(body.value("count", json(1)));
           if (!count) throw ServiceError(400, "InvalidArgument", "count must be a positive integer");
           send_json(res, sessions_.get(req.matches[1])->step(*count));
         }));

  s.Get(sid + "/slots", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const bool samples = req.has_param("samples") && req.get_param_value("samples") == "1";
          send_json(res, sessions_.get(req.matches[1])->slots(role_of(req), query_number(req, "from", 0), samples));
        }));

  s.Get(sid + "/transcript", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, sessions_.get(req.matches[1])->transcript(role_of(req)));
        }));

  s.Post(sid + "/compare", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->compare());
         }));

  s.Get(sid + "/verdict", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, {{"verdict", sessions_.get(req.matches[1])->verdict(role_of(req))}});
        }));

  s.Post(sid + "/abort", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->abort_session());
         }));

  s.Post(sid + "/otp", guarded([this](const httplib::Request& req, httplib::Response& res) {
           send_json(res, sessions_.get(req.matches[1])->otp(role_of(req), body_of(req)));
         }));

  s.Get(sid + "/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
          send_json(res, sessions_.get(req.matches[1])->report());
        }));

  // Server-sent events. Resumes after Last-Event-ID or ?since=; ?once=1
  // returns what is pending and ends the stream.
  s.Get(sid + "/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto session = sessions_.get(req.matches[1]);
          const Role role = role_of(req);
          std::uint64_t since = query_number(req, "since", 0);
          if (req.has_header("Last-Event-ID")) {
            const std::string h = req.get_header_value("Last-Event-ID");
            std::from_chars(h.data(), h.data() + h.size(), since);
          }
          const bool once = req.has_param("once") && req.get_param_value("once") == "1";
          res.set_header("Cache-Control", "no-cache");
          res.set_chunked_content_provider(
              "text/event-stream", [session, role, since, once](std::size_t, httplib::DataSink& sink) mutable {
                bool closed = false;
                const auto events =
                    session->events_since(since, role, once ? std::chrono::milliseconds(0) : kStreamWait, closed);
                std::string out;
                for (const auto& ev : events) {
                  out += sse_frame(ev);
                  since = ev["seq"].get<std::uint64_t>();
                }
                if (out.empty() && !once && !closed) out = ": keep-alive\n\n";
                if (!out.empty() && !sink.write(out.data(), out.size())) return false;
                if (once || closed) sink.done();
                return true;
              });
        }));

  if (static_dir && !s.set_mount_point("/", *static_dir)) {
    throw Error(Errc::InvalidArgument, "static directory '" + *static_dir + "' does not exist");
  }
  if (!static_dir) {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"api", "/api/v1/"}, {"static", nullptr}});
    });
  }

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError", "no route for " + req.method + " " + req.path);
    }
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send_error(res, 500, "Internal", "unhandled server error");
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::InvalidArgument, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error(Errc::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::run() { server_->listen_after_bind(); }

void ApiServer::stop() {
  sessions_.close_all();
  if (server_) server_->stop();
}

}  // namespace qkd::service
