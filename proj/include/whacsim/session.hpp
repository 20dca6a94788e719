#pragma once

// Lockstep session endpoints. One session object per connection, strict
// request/response, single-threaded use. The client (user-simulator side)
// drives HELLO / RESET / STATE_UPDATE; the server (application side) answers
// with HELLO_ACK / RESET_ACK / OBSERVATION. Out-of-order traffic and
// timestamp regressions are rejected with ProtocolError, never undefined
// behavior.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "whacsim/transport.hpp"
#include "whacsim/wire.hpp"

namespace whacsim {

enum class ProtocolErrorCode {
  kProtocolViolation,
  kConnectionLost,
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ProtocolErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ProtocolErrorCode code() const { return code_; }

 private:
  ProtocolErrorCode code_;
};

enum class LockstepState {
  kIdle,
  kAwaitingHelloAck,
  kReadyToStep,
  kAwaitingObservation,
  kResetting,
  kClosed,
};

const char* lockstep_state_name(LockstepState s);

// Appends raw frames to a trace file; the dump is a plain concatenation of
// wire frames in session order (message types imply direction).
class FrameDumpWriter {
 public:
  explicit FrameDumpWriter(const std::string& path);
  ~FrameDumpWriter();

  FrameDumpWriter(const FrameDumpWriter&) = delete;
  FrameDumpWriter& operator=(const FrameDumpWriter&) = delete;

  void write(std::span<const uint8_t> frame);
  void flush();

 private:
  std::FILE* file_ = nullptr;
};

class FrameDumpReader {
 public:
  explicit FrameDumpReader(const std::string& path);

  size_t size() const { return frames_.size(); }
  const std::vector<uint8_t>& frame_bytes(size_t i) const { return frames_[i]; }
  wire::Message decode(size_t i) const;

 private:
  std::vector<std::vector<uint8_t>> frames_;
};

struct SessionConfig {
  double dt = 0.05;
  uint16_t image_width = 120;
  uint16_t image_height = 80;
  uint8_t channel_mask = wire::kChannelAll;
  size_t max_payload = wire::kDefaultMaxPayload;
};

class Session {
 public:
  Session(std::unique_ptr<ByteStream> stream, SessionConfig config);

  // Handshake; negotiates dt, image size and channels.
  const wire::HelloAckMsg& hello();

  // Starts a new episode; returns the initial observation. Either side may
  // have ended the previous episode (is_finished or explicit reset).
  wire::ObservationMsg reset(
      const std::vector<std::pair<std::string, std::string>>& episode_config);

  // Sends one state update and blocks for the observation of the simulated
  // time window [t_current, t_next).
  wire::ObservationMsg step(const wire::StateUpdateMsg& update);

  // Split form of step() for callers that interleave other work; a reset()
  // issued between the two queues behind the pending observation.
  void step_send(const wire::StateUpdateMsg& update);
  wire::ObservationMsg step_recv();

  void close();

  LockstepState state() const { return state_; }
  const wire::HelloAckMsg& negotiated() const { return negotiated_; }
  bool episode_finished() const { return needs_reset_; }
  double expected_t() const { return expected_t_; }

  // Optional trace of every frame in both directions (exact wire bytes).
  void set_trace(FrameDumpWriter* trace) { trace_ = trace; }

  // Checkpoint restore: re-enters a mid-episode session after a fresh
  // handshake. Both endpoints must be restored consistently.
  void resume_episode(double expected_t, double last_time_feature, bool episode_active,
                      bool needs_reset);
  bool episode_active() const { return episode_active_; }
  double last_time_feature() const { return last_time_feature_; }

 private:
  void send_message(const wire::Message& msg);
  wire::Message recv_message();
  [[noreturn]] void violation(const std::string& what);

  std::unique_ptr<ByteStream> stream_;
  FrameChannel channel_;
  SessionConfig config_;
  wire::HelloAckMsg negotiated_{};
  LockstepState state_ = LockstepState::kIdle;
  bool episode_active_ = false;
  bool needs_reset_ = false;
  double expected_t_ = 0.0;
  double pending_t_next_ = 0.0;
  double last_time_feature_ = 1.0;
  FrameDumpWriter* trace_ = nullptr;
};

}  // namespace whacsim
