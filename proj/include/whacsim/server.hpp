#pragma once

// Application-side serving loop. Enforces the session automaton (HELLO
// first, RESET before stepping, gap-free timestamps, reset after
// is_finished) so handlers only see well-ordered traffic.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "whacsim/session.hpp"
#include "whacsim/transport.hpp"
#include "whacsim/wire.hpp"

namespace whacsim {

class AppHandler {
 public:
  virtual ~AppHandler() = default;
  virtual wire::HelloAckMsg on_hello(const wire::HelloMsg& hello) = 0;
  virtual wire::ObservationMsg on_reset(
      const std::vector<std::pair<std::string, std::string>>& episode_config) = 0;
  virtual wire::ObservationMsg on_step(const wire::StateUpdateMsg& update) = 0;
};

// Frame-level server state machine, shared by the socket serving loop and
// the in-process synchronous transport.
class ServerAutomaton {
 public:
  explicit ServerAutomaton(AppHandler& handler, size_t max_payload = wire::kDefaultMaxPayload)
      : handler_(&handler), max_payload_(max_payload) {}

  struct Outcome {
    std::vector<uint8_t> reply;  // empty for CLOSE
    bool closed = false;
  };

  // Handles one complete frame; throws ProtocolError on malformed or
  // out-of-order traffic.
  Outcome handle_frame(std::span<const uint8_t> frame);

  // Checkpoint restore counterpart of Session::resume_episode.
  void resume_episode(bool episode_active, bool episode_finished, double expected_t) {
    episode_active_ = episode_active;
    episode_finished_ = episode_finished;
    expected_t_ = expected_t;
  }
  bool episode_active() const { return episode_active_; }
  bool episode_finished() const { return episode_finished_; }
  double expected_t() const { return expected_t_; }

 private:
  AppHandler* handler_;
  size_t max_payload_;
  bool hello_done_ = false;
  bool episode_active_ = false;
  bool episode_finished_ = false;
  double expected_t_ = 0.0;
};

// Serves one connection until CLOSE or orderly EOF. Malformed or out-of-order
// traffic raises ProtocolError; transport failures raise ProtocolError with
// kConnectionLost.
void serve_session(ByteStream& stream, AppHandler& handler,
                   size_t max_payload = wire::kDefaultMaxPayload);

// Synchronous in-process endpoint: a ByteStream whose peer is the app
// itself. Frames written with send() are handled immediately and the reply
// becomes readable. Runs the identical wire encoding and automaton as the
// socket path, without threads.
class SyncAppStream : public ByteStream {
 public:
  explicit SyncAppStream(AppHandler& handler, size_t max_payload = wire::kDefaultMaxPayload)
      : automaton_(handler, max_payload), max_payload_(max_payload) {}

  void send(std::span<const uint8_t> data) override;
  size_t recv_some(uint8_t* buf, size_t cap) override;
  void shutdown() override { closed_ = true; }

  ServerAutomaton& automaton() { return automaton_; }

 private:
  ServerAutomaton automaton_;
  size_t max_payload_;
  std::vector<uint8_t> inbox_;
  std::vector<uint8_t> outbox_;
  size_t out_pos_ = 0;
  bool closed_ = false;
};

}  // namespace whacsim
