#pragma once

// Reliable ordered byte streams the protocol runs over: an in-process
// loopback pair for fast tests/training and POSIX sockets (TCP loopback or
// unix-domain) for the cross-process path. Both carry identical bytes.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace whacsim {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void send(std::span<const uint8_t> data) = 0;
  // Blocking; returns 0 on orderly peer shutdown.
  virtual size_t recv_some(uint8_t* buf, size_t cap) = 0;
  virtual void shutdown() = 0;  // unblocks the peer's recv with EOF
};

// One direction of the in-process loopback.
class BytePipe {
 public:
  void write(std::span<const uint8_t> data);
  size_t read_some(uint8_t* buf, size_t cap);
  void close();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<uint8_t> buf_;
  bool closed_ = false;
};

class LoopbackStream : public ByteStream {
 public:
  LoopbackStream(std::shared_ptr<BytePipe> out, std::shared_ptr<BytePipe> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~LoopbackStream() override { shutdown(); }

  void send(std::span<const uint8_t> data) override { out_->write(data); }
  size_t recv_some(uint8_t* buf, size_t cap) override { return in_->read_some(buf, cap); }
  void shutdown() override {
    out_->close();
    in_->close();
  }

 private:
  std::shared_ptr<BytePipe> out_;
  std::shared_ptr<BytePipe> in_;
};

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_loopback_pair();

class SocketStream : public ByteStream {
 public:
  explicit SocketStream(int fd) : fd_(fd) {}
  ~SocketStream() override;

  SocketStream(const SocketStream&) = delete;
  SocketStream& operator=(const SocketStream&) = delete;

  void send(std::span<const uint8_t> data) override;
  size_t recv_some(uint8_t* buf, size_t cap) override;
  void shutdown() override;

 private:
  int fd_ = -1;
};

// Addresses: "tcp:HOST:PORT" or "unix:/path/to.sock".
std::unique_ptr<ByteStream> connect_stream(const std::string& address);

class Listener {
 public:
  explicit Listener(const std::string& address);
  ~Listener();

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::unique_ptr<ByteStream> accept();
  // Resolved address (with the concrete port for "tcp:host:0").
  const std::string& address() const { return address_; }
  void close();

 private:
  int fd_ = -1;
  std::string address_;
  std::string unix_path_;
};

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_socket_pair();

// Accumulates stream bytes and yields complete frames (header + payload).
class FrameChannel {
 public:
  explicit FrameChannel(ByteStream& stream, size_t max_payload = 16 * 1024 * 1024)
      : stream_(stream), max_payload_(max_payload) {}

  void send_frame(std::span<const uint8_t> frame) { stream_.send(frame); }

  // Blocks until one full frame is buffered; returns false on EOF at a frame
  // boundary. EOF mid-frame throws TransportError.
  bool recv_frame(std::vector<uint8_t>& frame);

 private:
  ByteStream& stream_;
  size_t max_payload_;
  std::vector<uint8_t> buf_;
};

}  // namespace whacsim
