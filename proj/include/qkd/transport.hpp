#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qkd/wire.hpp"

namespace qkd::channel {

// Reliable, ordered byte stream. receive() blocks and returns 0 once the peer
// has closed and all buffered bytes were consumed. close() is idempotent.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(std::span<const std::uint8_t> bytes) = 0;
  virtual std::size_t receive(std::span<std::uint8_t> buffer) = 0;
  virtual void close() noexcept = 0;
};

// Connected in-memory pair for tests and in-process sessions.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_loopback_pair();

class TcpTransport : public Transport {
 public:
  explicit TcpTransport(int fd, std::chrono::milliseconds receive_timeout);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void send(std::span<const std::uint8_t> bytes) override;
  std::size_t receive(std::span<std::uint8_t> buffer) override;
  void close() noexcept override;

 private:
  int fd_;
};

class TcpListener {
 public:
  // "host:port"; port 0 picks a free port.
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<TcpTransport> accept(std::chrono::milliseconds timeout,
                                       std::chrono::milliseconds receive_timeout = std::chrono::seconds(30));

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Retries until `timeout` elapses so a connector may start before its listener.
std::unique_ptr<TcpTransport> tcp_connect(const std::string& address, std::chrono::milliseconds timeout,
                                          std::chrono::milliseconds receive_timeout = std::chrono::seconds(30));

std::pair<std::string, std::uint16_t> split_address(const std::string& address);

enum class Direction { Sent, Received };

// Frames messages over a transport. The observer sees every frame with its
// exact bytes, which is how channel transcripts are recorded.
class MessageStream {
 public:
  using Observer = std::function<void(Direction, const wire::Message&, std::span<const std::uint8_t>)>;

  explicit MessageStream(Transport& transport, Observer observer = {});

  void send(const wire::Message& msg);
  // Throws TransportClosed when the stream ends, or the decode error of a bad frame.
  wire::Message receive();

 private:
  Transport& transport_;
  Observer observer_;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace qkd::channel
