#include "whacsim/session.hpp"

#include <cmath>

namespace whacsim {

const char* lockstep_state_name(LockstepState s) {
  switch (s) {
    case LockstepState::kIdle: return "Idle";
    case LockstepState::kAwaitingHelloAck: return "AwaitingHelloAck";
    case LockstepState::kReadyToStep: return "ReadyToStep";
    case LockstepState::kAwaitingObservation: return "AwaitingObservation";
    case LockstepState::kResetting: return "Resetting";
    case LockstepState::kClosed: return "Closed";
  }
  return "?";
}

FrameDumpWriter::FrameDumpWriter(const std::string& path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw TransportError("cannot open trace file for writing: " + path);
}

FrameDumpWriter::~FrameDumpWriter() {
  if (file_) std::fclose(file_);
}

void FrameDumpWriter::write(std::span<const uint8_t> frame) {
  if (std::fwrite(frame.data(), 1, frame.size(), file_) != frame.size()) {
    throw TransportError("short write to trace file");
  }
}

void FrameDumpWriter::flush() { std::fflush(file_); }

FrameDumpReader::FrameDumpReader(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw TransportError("cannot open trace file: " + path);
  std::vector<uint8_t> bytes;
  uint8_t chunk[65536];
  size_t n;
  while ((n = std::fread(chunk, 1, sizeof(chunk), f)) > 0) {
    bytes.insert(bytes.end(), chunk, chunk + n);
  }
  std::fclose(f);
  size_t off = 0;
  while (off < bytes.size()) {
    auto res = wire::decode_frame(bytes.data() + off, bytes.size() - off);
    if (res.status != wire::DecodeStatus::kOk) {
      throw TransportError("trace file corrupt at offset " + std::to_string(off) + ": " +
                           (res.error.empty() ? "incomplete frame" : res.error));
    }
    frames_.emplace_back(bytes.begin() + static_cast<long>(off),
                         bytes.begin() + static_cast<long>(off + res.consumed));
    off += res.consumed;
  }
}

wire::Message FrameDumpReader::decode(size_t i) const {
  auto res = wire::decode_frame(frames_[i].data(), frames_[i].size());
  if (res.status != wire::DecodeStatus::kOk) {
    throw TransportError("trace frame " + std::to_string(i) + " corrupt: " + res.error);
  }
  return res.msg;
}

Session::Session(std::unique_ptr<ByteStream> stream, SessionConfig config)
    : stream_(std::move(stream)), channel_(*stream_, config.max_payload), config_(config) {}

void Session::violation(const std::string& what) {
  state_ = LockstepState::kClosed;
  throw ProtocolError(ProtocolErrorCode::kProtocolViolation, what);
}

void Session::send_message(const wire::Message& msg) {
  std::vector<uint8_t> frame = wire::encode_frame(msg);
  if (trace_) trace_->write(frame);
  channel_.send_frame(frame);
}

wire::Message Session::recv_message() {
  std::vector<uint8_t> frame;
  bool got = false;
  try {
    got = channel_.recv_frame(frame);
  } catch (const TransportError& e) {
    state_ = LockstepState::kClosed;
    throw ProtocolError(ProtocolErrorCode::kConnectionLost, e.what());
  }
  if (!got) {
    state_ = LockstepState::kClosed;
    throw ProtocolError(ProtocolErrorCode::kConnectionLost, "peer closed the connection");
  }
  if (trace_) trace_->write(frame);
  auto res = wire::decode_frame(frame.data(), frame.size(), config_.max_payload);
  if (res.status != wire::DecodeStatus::kOk) {
    violation("malformed frame from peer: " + res.error);
  }
  return res.msg;
}

const wire::HelloAckMsg& Session::hello() {
  if (state_ != LockstepState::kIdle) {
    violation(std::string("hello in state ") + lockstep_state_name(state_));
  }
  wire::HelloMsg msg{wire::kProtocolVersion, config_.dt, config_.image_width,
                     config_.image_height, config_.channel_mask};
  send_message(msg);
  state_ = LockstepState::kAwaitingHelloAck;
  wire::Message reply = recv_message();
  auto* ack = std::get_if<wire::HelloAckMsg>(&reply);
  if (!ack) {
    violation(std::string("expected HELLO_ACK, got ") +
              wire::msg_type_name(wire::message_type(reply)));
  }
  negotiated_ = *ack;
  state_ = LockstepState::kReadyToStep;
  episode_active_ = false;
  return negotiated_;
}

wire::ObservationMsg Session::reset(
    const std::vector<std::pair<std::string, std::string>>& episode_config) {
  if (state_ == LockstepState::kAwaitingObservation) {
    // A reset requested mid-exchange queues behind the pending observation.
    (void)step_recv();
  }
  if (state_ != LockstepState::kReadyToStep) {
    violation(std::string("reset in state ") + lockstep_state_name(state_));
  }
  send_message(wire::ResetMsg{episode_config});
  state_ = LockstepState::kResetting;
  wire::Message reply = recv_message();
  auto* ack = std::get_if<wire::ResetAckMsg>(&reply);
  if (!ack) {
    violation(std::string("expected RESET_ACK, got ") +
              wire::msg_type_name(wire::message_type(reply)));
  }
  state_ = LockstepState::kReadyToStep;
  episode_active_ = true;
  needs_reset_ = false;
  expected_t_ = 0.0;
  last_time_feature_ = ack->initial.time_feature;
  return ack->initial;
}

void Session::step_send(const wire::StateUpdateMsg& update) {
  if (state_ != LockstepState::kReadyToStep) {
    violation(std::string("step in state ") + lockstep_state_name(state_));
  }
  if (!episode_active_) violation("step before first reset");
  if (needs_reset_) violation("step after is_finished without reset");
  if (update.t_current != expected_t_) {
    violation("timestamp regression: t_current does not continue previous t_next");
  }
  if (!(update.t_next > update.t_current)) {
    violation("t_next must be greater than t_current");
  }
  if (!update.hmd.valid(1e-6)) violation("invalid hmd pose");
  for (const Pose& p : update.controllers) {
    if (!p.valid(1e-6)) violation("invalid controller pose");
  }
  send_message(update);
  pending_t_next_ = update.t_next;
  state_ = LockstepState::kAwaitingObservation;
}

wire::ObservationMsg Session::step_recv() {
  if (state_ != LockstepState::kAwaitingObservation) {
    violation("no step exchange in flight");
  }
  wire::Message reply = recv_message();
  auto* obs = std::get_if<wire::ObservationMsg>(&reply);
  if (!obs) {
    violation(std::string("expected OBSERVATION, got ") +
              wire::msg_type_name(wire::message_type(reply)));
  }
  if (obs->time_feature > last_time_feature_ + 1e-12) {
    violation("time_feature increased within an episode");
  }
  last_time_feature_ = obs->time_feature;
  expected_t_ = pending_t_next_;
  if (obs->is_finished) needs_reset_ = true;
  state_ = LockstepState::kReadyToStep;
  return *obs;
}

wire::ObservationMsg Session::step(const wire::StateUpdateMsg& update) {
  step_send(update);
  return step_recv();
}

void Session::resume_episode(double expected_t, double last_time_feature, bool episode_active,
                             bool needs_reset) {
  if (state_ != LockstepState::kReadyToStep) {
    violation("resume_episode requires a completed handshake");
  }
  expected_t_ = expected_t;
  last_time_feature_ = last_time_feature;
  episode_active_ = episode_active;
  needs_reset_ = needs_reset;
}

void Session::close() {
  if (state_ == LockstepState::kClosed) return;
  try {
    send_message(wire::CloseMsg{});
  } catch (...) {
    // Peer may already be gone; closing is best-effort.
  }
  stream_->shutdown();
  state_ = LockstepState::kClosed;
}

}  // namespace whacsim
