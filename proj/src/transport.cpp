#include "whacsim/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "whacsim/wire.hpp"

namespace whacsim {

void BytePipe::write(std::span<const uint8_t> data) {
  std::lock_guard<std::mutex> lock(mu_);
  if (closed_) throw TransportError("write on closed pipe");
  buf_.insert(buf_.end(), data.begin(), data.end());
  cv_.notify_all();
}

size_t BytePipe::read_some(uint8_t* buf, size_t cap) {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return !buf_.empty() || closed_; });
  if (buf_.empty()) return 0;
  size_t n = std::min(cap, buf_.size());
  for (size_t i = 0; i < n; ++i) {
    buf[i] = buf_.front();
    buf_.pop_front();
  }
  return n;
}

void BytePipe::close() {
  std::lock_guard<std::mutex> lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_loopback_pair() {
  auto a_to_b = std::make_shared<BytePipe>();
  auto b_to_a = std::make_shared<BytePipe>();
  auto a = std::make_unique<LoopbackStream>(a_to_b, b_to_a);
  auto b = std::make_unique<LoopbackStream>(b_to_a, a_to_b);
  return {std::move(a), std::move(b)};
}

SocketStream::~SocketStream() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketStream::send(std::span<const uint8_t> data) {
  size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<size_t>(n);
  }
}

size_t SocketStream::recv_some(uint8_t* buf, size_t cap) {
  for (;;) {
    ssize_t n = ::recv(fd_, buf, cap, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv failed: ") + std::strerror(errno));
    }
    return static_cast<size_t>(n);
  }
}

void SocketStream::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

namespace {

struct ParsedAddress {
  bool is_unix = false;
  std::string host_or_path;
  uint16_t port = 0;
};

ParsedAddress parse_address(const std::string& address) {
  ParsedAddress out;
  if (address.rfind("unix:", 0) == 0) {
    out.is_unix = true;
    out.host_or_path = address.substr(5);
    if (out.host_or_path.empty()) throw TransportError("empty unix socket path");
    return out;
  }
  if (address.rfind("tcp:", 0) == 0) {
    std::string rest = address.substr(4);
    size_t colon = rest.rfind(':');
    if (colon == std::string::npos) throw TransportError("tcp address needs host:port: " + address);
    out.host_or_path = rest.substr(0, colon);
    out.port = static_cast<uint16_t>(std::stoi(rest.substr(colon + 1)));
    return out;
  }
  throw TransportError("address must start with tcp: or unix: — got " + address);
}

int make_tcp_socket() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

sockaddr_in tcp_sockaddr(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "localhost") {
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw TransportError("cannot parse IPv4 host: " + host);
  }
  return addr;
}

}  // namespace

std::unique_ptr<ByteStream> connect_stream(const std::string& address) {
  ParsedAddress pa = parse_address(address);
  if (pa.is_unix) {
    int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (pa.host_or_path.size() >= sizeof(addr.sun_path)) {
      ::close(fd);
      throw TransportError("unix socket path too long");
    }
    std::strncpy(addr.sun_path, pa.host_or_path.c_str(), sizeof(addr.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      int err = errno;
      ::close(fd);
      throw TransportError("connect to " + address + " failed: " + std::strerror(err));
    }
    return std::make_unique<SocketStream>(fd);
  }
  int fd = make_tcp_socket();
  sockaddr_in addr = tcp_sockaddr(pa.host_or_path, pa.port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int err = errno;
    ::close(fd);
    throw TransportError("connect to " + address + " failed: " + std::strerror(err));
  }
  return std::make_unique<SocketStream>(fd);
}

Listener::Listener(const std::string& address) {
  ParsedAddress pa = parse_address(address);
  if (pa.is_unix) {
    fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (pa.host_or_path.size() >= sizeof(addr.sun_path)) {
      throw TransportError("unix socket path too long");
    }
    ::unlink(pa.host_or_path.c_str());
    std::strncpy(addr.sun_path, pa.host_or_path.c_str(), sizeof(addr.sun_path) - 1);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw TransportError("bind " + address + " failed: " + std::strerror(errno));
    }
    unix_path_ = pa.host_or_path;
    address_ = address;
  } else {
    fd_ = make_tcp_socket();
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = tcp_sockaddr(pa.host_or_path, pa.port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw TransportError("bind " + address + " failed: " + std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    address_ = "tcp:" + (pa.host_or_path.empty() ? std::string("localhost") : pa.host_or_path) +
               ":" + std::to_string(ntohs(addr.sin_port));
  }
  if (::listen(fd_, 16) != 0) {
    throw TransportError("listen failed: " + std::string(std::strerror(errno)));
  }
}

Listener::~Listener() { close(); }

std::unique_ptr<ByteStream> Listener::accept() {
  for (;;) {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<SocketStream>(fd);
  }
}

void Listener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (!unix_path_.empty()) {
    ::unlink(unix_path_.c_str());
    unix_path_.clear();
  }
}

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_socket_pair() {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) {
    throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  return {std::make_unique<SocketStream>(sv[0]), std::make_unique<SocketStream>(sv[1])};
}

bool FrameChannel::recv_frame(std::vector<uint8_t>& frame) {
  uint8_t chunk[16384];
  for (;;) {
    if (buf_.size() >= wire::kHeaderSize) {
      uint32_t len = 0;
      for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(buf_[i]) << (8 * i);
      if (len > max_payload_) {
        throw TransportError("peer announced oversized frame");
      }
      size_t total = wire::kHeaderSize + len;
      if (buf_.size() >= total) {
        frame.assign(buf_.begin(), buf_.begin() + static_cast<long>(total));
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(total));
        return true;
      }
    }
    size_t n = stream_.recv_some(chunk, sizeof(chunk));
    if (n == 0) {
      if (!buf_.empty()) throw TransportError("connection closed mid-frame");
      return false;
    }
    buf_.insert(buf_.end(), chunk, chunk + n);
  }
}

}  // namespace whacsim
