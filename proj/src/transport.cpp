#include "qkd/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "qkd/error.hpp"

namespace qkd::channel {

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class LoopbackTransport : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out) : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackTransport() override { close(); }

  void send(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw Error(Errc::TransportClosed, "loopback closed");
    out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
    out_->cv.notify_all();
  }

  std::size_t receive(std::span<std::uint8_t> buffer) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
    const std::size_t n = std::min(buffer.size(), in_->bytes.size());
    std::copy_n(in_->bytes.begin(), n, buffer.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() noexcept override {
    for (auto* pipe : {in_.get(), out_.get()}) {
      std::lock_guard lock(pipe->mu);
      pipe->closed = true;
      pipe->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

[[noreturn]] void sys_fail(Errc code, const std::string& what) {
  throw Error(code, what + ": " + std::strerror(errno));
}

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw Error(Errc::InvalidArgument, "cannot resolve '" + host + "': " + ::gai_strerror(rc));
  return res;
}

void set_receive_timeout(int fd, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_loopback_pair() {
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  return {std::make_unique<LoopbackTransport>(b_to_a, a_to_b), std::make_unique<LoopbackTransport>(a_to_b, b_to_a)};
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "address must be host:port");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string port_text = address.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "invalid port in '" + address + "'");
  }
  if (port > 65535) throw Error(Errc::InvalidArgument, "invalid port in '" + address + "'");
  return {host, static_cast<std::uint16_t>(port)};
}

TcpTransport::TcpTransport(int fd, std::chrono::milliseconds receive_timeout) : fd_(fd) {
  set_receive_timeout(fd_, receive_timeout);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::send(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    if (fd_ < 0) throw Error(Errc::TransportClosed, "socket closed");
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_fail(Errc::TransportClosed, "send failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::size_t TcpTransport::receive(std::span<std::uint8_t> buffer) {
  while (true) {
    if (fd_ < 0) return 0;
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error(Errc::TransportClosed, "receive timed out");
    sys_fail(Errc::TransportClosed, "receive failed");
  }
}

void TcpTransport::close() noexcept {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener::TcpListener(const std::string& address) {
  const auto [host, port] = split_address(address);
  addrinfo* res = resolve(host, port, true);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 4) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) sys_fail(Errc::TransportClosed, "cannot listen on " + address);

  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  if (bound.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
  }
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept(std::chrono::milliseconds timeout,
                                                  std::chrono::milliseconds receive_timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (ready == 0) throw Error(Errc::TransportClosed, "no peer connected before the timeout");
  if (ready < 0) sys_fail(Errc::TransportClosed, "poll failed");
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) sys_fail(Errc::TransportClosed, "accept failed");
  return std::make_unique<TcpTransport>(fd, receive_timeout);
}

std::unique_ptr<TcpTransport> tcp_connect(const std::string& address, std::chrono::milliseconds timeout,
                                          std::chrono::milliseconds receive_timeout) {
  const auto [host, port] = split_address(address);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    addrinfo* res = resolve(host, port, false);
    int connected = -1;
    for (addrinfo* ai = res; ai != nullptr && connected < 0; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        connected = fd;
      } else {
        ::close(fd);
      }
    }
    ::freeaddrinfo(res);
    if (connected >= 0) return std::make_unique<TcpTransport>(connected, receive_timeout);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error(Errc::TransportClosed, "connection to " + address + " refused");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

MessageStream::MessageStream(Transport& transport, Observer observer)
    : transport_(transport), observer_(std::move(observer)) {}

void MessageStream::send(const wire::Message& msg) {
  const auto frame = wire::encode_message(msg);
  transport_.send(frame);
  if (observer_) observer_(Direction::Sent, msg, frame);
}

wire::Message MessageStream::receive() {
  while (true) {
    auto result = wire::decode_message(buffer_);
    if (auto* decoded = std::get_if<wire::Decoded>(&result)) {
      const std::span<const std::uint8_t> frame(buffer_.data(), decoded->consumed);
      if (observer_) observer_(Direction::Received, decoded->message, frame);
      wire::Message msg = std::move(decoded->message);
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded->consumed));
      return msg;
    }
    const std::size_t want = std::max<std::size_t>(std::get<wire::NeedMoreData>(result).missing, 4096);
    const std::size_t old = buffer_.size();
    buffer_.resize(old + want);
    const std::size_t got = transport_.receive(std::span(buffer_).subspan(old));
    buffer_.resize(old + got);
    if (got == 0) throw Error(Errc::TransportClosed, "peer closed the channel");
  }
}

}  // namespace qkd::channel
