#include "whacsim/server.hpp"

#include <cstring>

namespace whacsim {

namespace {

[[noreturn]] void violation(const std::string& what) {
  throw ProtocolError(ProtocolErrorCode::kProtocolViolation, what);
}

}  // namespace

ServerAutomaton::Outcome ServerAutomaton::handle_frame(std::span<const uint8_t> frame) {
  auto res = wire::decode_frame(frame.data(), frame.size(), max_payload_);
  if (res.status != wire::DecodeStatus::kOk) {
    violation("malformed frame: " + (res.error.empty() ? "truncated" : res.error));
  }

  Outcome out;
  wire::MsgType type = wire::message_type(res.msg);
  switch (type) {
    case wire::MsgType::kHello: {
      if (hello_done_) violation("duplicate HELLO");
      auto ack = handler_->on_hello(std::get<wire::HelloMsg>(res.msg));
      out.reply = wire::encode_frame(ack);
      hello_done_ = true;
      break;
    }
    case wire::MsgType::kReset: {
      if (!hello_done_) violation("RESET before HELLO");
      auto initial = handler_->on_reset(std::get<wire::ResetMsg>(res.msg).episode_config);
      out.reply = wire::encode_frame(wire::ResetAckMsg{std::move(initial)});
      episode_active_ = true;
      episode_finished_ = false;
      expected_t_ = 0.0;
      break;
    }
    case wire::MsgType::kStateUpdate: {
      if (!hello_done_) violation("STATE_UPDATE before HELLO");
      if (!episode_active_) violation("STATE_UPDATE before RESET");
      if (episode_finished_) violation("STATE_UPDATE after is_finished without RESET");
      const auto& update = std::get<wire::StateUpdateMsg>(res.msg);
      if (update.t_current != expected_t_) {
        violation("timestamp regression: t_current does not continue previous t_next");
      }
      if (!(update.t_next > update.t_current)) {
        violation("t_next must be greater than t_current");
      }
      auto obs = handler_->on_step(update);
      if (obs.is_finished) episode_finished_ = true;
      expected_t_ = update.t_next;
      out.reply = wire::encode_frame(std::move(obs));
      break;
    }
    case wire::MsgType::kClose:
      out.closed = true;
      break;
    default:
      violation(std::string("unexpected message type ") + wire::msg_type_name(type));
  }
  return out;
}

void serve_session(ByteStream& stream, AppHandler& handler, size_t max_payload) {
  FrameChannel channel(stream, max_payload);
  ServerAutomaton automaton(handler, max_payload);
  std::vector<uint8_t> frame;
  for (;;) {
    bool got = false;
    try {
      got = channel.recv_frame(frame);
    } catch (const TransportError& e) {
      throw ProtocolError(ProtocolErrorCode::kConnectionLost, e.what());
    }
    if (!got) return;  // orderly EOF at a frame boundary

    auto outcome = automaton.handle_frame(frame);
    if (outcome.closed) return;
    if (!outcome.reply.empty()) stream.send(outcome.reply);
  }
}

void SyncAppStream::send(std::span<const uint8_t> data) {
  if (closed_) throw TransportError("send on closed in-process stream");
  inbox_.insert(inbox_.end(), data.begin(), data.end());
  // Dispatch every complete frame that has accumulated.
  size_t off = 0;
  while (inbox_.size() - off >= wire::kHeaderSize) {
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(inbox_[off + i]) << (8 * i);
    if (len > max_payload_) {
      throw ProtocolError(ProtocolErrorCode::kProtocolViolation, "oversized frame");
    }
    size_t total = wire::kHeaderSize + len;
    if (inbox_.size() - off < total) break;
    auto outcome = automaton_.handle_frame(std::span(inbox_).subspan(off, total));
    off += total;
    if (outcome.closed) {
      closed_ = true;
      break;
    }
    outbox_.insert(outbox_.end(), outcome.reply.begin(), outcome.reply.end());
  }
  inbox_.erase(inbox_.begin(), inbox_.begin() + static_cast<long>(off));
}

size_t SyncAppStream::recv_some(uint8_t* buf, size_t cap) {
  size_t avail = outbox_.size() - out_pos_;
  if (avail == 0) return 0;  // lockstep peers never read before writing
  size_t n = std::min(cap, avail);
  std::memcpy(buf, outbox_.data() + out_pos_, n);
  out_pos_ += n;
  if (out_pos_ == outbox_.size()) {
    outbox_.clear();
    out_pos_ = 0;
  }
  return n;
}

}  // namespace whacsim
