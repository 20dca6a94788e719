#include <doctest.h>

#include <cstdio>
#include <thread>

#include "whacsim/server.hpp"
#include "whacsim/session.hpp"
#include "whacsim/transport.hpp"

using namespace whacsim;

namespace {

// Minimal deterministic app: 2x2 image, one pixel tracks the step count.
class CountingApp : public AppHandler {
 public:
  int hellos = 0;
  int resets = 0;
  int steps = 0;
  int finish_after = 1000000;

  wire::HelloAckMsg on_hello(const wire::HelloMsg& hello) override {
    ++hellos;
    return {hello.version, hello.dt, hello.width, hello.height, hello.channel_mask};
  }

  wire::ObservationMsg on_reset(
      const std::vector<std::pair<std::string, std::string>>&) override {
    ++resets;
    steps_in_episode_ = 0;
    return make_obs(1.0, false);
  }

  wire::ObservationMsg on_step(const wire::StateUpdateMsg& update) override {
    ++steps;
    ++steps_in_episode_;
    double tf = 1.0 - 0.01 * steps_in_episode_;
    wire::ObservationMsg obs = make_obs(std::max(tf, 0.0), steps_in_episode_ >= finish_after);
    obs.reward = update.t_next;
    return obs;
  }

 private:
  int steps_in_episode_ = 0;

  wire::ObservationMsg make_obs(double tf, bool finished) {
    wire::ObservationMsg obs;
    obs.image.width = 2;
    obs.image.height = 2;
    obs.image.rgb.assign(12, 0);
    obs.image.rgb[0] = static_cast<uint8_t>(steps_in_episode_ % 256);
    obs.image.depth.assign(4, 1.0f);
    obs.time_feature = tf;
    obs.is_finished = finished;
    return obs;
  }
};

wire::StateUpdateMsg update_at(int k, double dt) {
  wire::StateUpdateMsg u;
  u.t_current = k * dt;
  u.t_next = (k + 1) * dt;
  u.hmd = Pose{};
  u.controllers = {Pose{}};
  return u;
}

}  // namespace

TEST_CASE("session over the synchronous in-process stream") {
  CountingApp app;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{0.05, 2, 2});
  auto ack = session.hello();
  CHECK(ack.dt == 0.05);
  CHECK(app.hellos == 1);

  auto initial = session.reset({{"seed", "1"}});
  CHECK(initial.time_feature == 1.0);
  CHECK(app.resets == 1);

  for (int k = 0; k < 10; ++k) {
    auto obs = session.step(update_at(k, 0.05));
    CHECK(obs.reward == doctest::Approx((k + 1) * 0.05));
  }
  CHECK(app.steps == 10);
  session.close();
  CHECK(session.state() == LockstepState::kClosed);
}

TEST_CASE("step before reset is rejected") {
  CountingApp app;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  CHECK_THROWS_AS(session.step(update_at(0, 0.05)), ProtocolError);
}

TEST_CASE("timestamp regression is a protocol violation") {
  CountingApp app;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({});
  session.step(update_at(0, 0.05));
  // Second step must continue at t_current == 0.05.
  wire::StateUpdateMsg bad = update_at(0, 0.05);
  bad.t_current = 0.04;
  bad.t_next = 0.09;
  CHECK_THROWS_AS(session.step(bad), ProtocolError);
}

TEST_CASE("t_next must exceed t_current") {
  CountingApp app;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({});
  wire::StateUpdateMsg bad = update_at(0, 0.05);
  bad.t_next = 0.0;
  CHECK_THROWS_AS(session.step(bad), ProtocolError);
}

TEST_CASE("is_finished requires a reset before stepping on") {
  CountingApp app;
  app.finish_after = 3;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({});
  session.step(update_at(0, 0.05));
  session.step(update_at(1, 0.05));
  auto obs = session.step(update_at(2, 0.05));
  CHECK(obs.is_finished);
  CHECK(session.episode_finished());
  CHECK_THROWS_AS(session.step(update_at(3, 0.05)), ProtocolError);
}

TEST_CASE("reset after finish starts a new episode at t=0") {
  CountingApp app;
  app.finish_after = 2;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({});
  session.step(update_at(0, 0.05));
  session.step(update_at(1, 0.05));
  auto initial = session.reset({});
  CHECK(initial.time_feature == 1.0);
  auto obs = session.step(update_at(0, 0.05));
  CHECK_FALSE(obs.is_finished);
}

TEST_CASE("server automaton rejects out-of-order traffic") {
  auto frame_of = [](const wire::Message& m) { return wire::encode_frame(m); };

  SUBCASE("state update before hello") {
    CountingApp app;
    ServerAutomaton automaton(app);
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(update_at(0, 0.05))), ProtocolError);
  }
  SUBCASE("reset before hello") {
    CountingApp app;
    ServerAutomaton automaton(app);
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(wire::ResetMsg{})), ProtocolError);
  }
  SUBCASE("duplicate hello") {
    CountingApp app;
    ServerAutomaton automaton(app);
    automaton.handle_frame(frame_of(wire::HelloMsg{}));
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(wire::HelloMsg{})), ProtocolError);
  }
  SUBCASE("state update before reset") {
    CountingApp app;
    ServerAutomaton automaton(app);
    automaton.handle_frame(frame_of(wire::HelloMsg{}));
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(update_at(0, 0.05))), ProtocolError);
  }
  SUBCASE("client-only message types from the peer") {
    CountingApp app;
    ServerAutomaton automaton(app);
    automaton.handle_frame(frame_of(wire::HelloMsg{}));
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(wire::HelloAckMsg{})), ProtocolError);
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(wire::ObservationMsg{})), ProtocolError);
  }
  SUBCASE("timestamp gap") {
    CountingApp app;
    ServerAutomaton automaton(app);
    automaton.handle_frame(frame_of(wire::HelloMsg{}));
    automaton.handle_frame(frame_of(wire::ResetMsg{}));
    automaton.handle_frame(frame_of(update_at(0, 0.05)));
    CHECK_THROWS_AS(automaton.handle_frame(frame_of(update_at(2, 0.05))), ProtocolError);
  }
}

TEST_CASE("session works over a real socket pair") {
  auto [client_stream, server_stream] = make_socket_pair();
  CountingApp app;
  ByteStream* server_raw = server_stream.get();
  std::thread server([&app, server_raw] {
    try {
      serve_session(*server_raw, app);
    } catch (const ProtocolError&) {
    }
  });

  Session session(std::move(client_stream), SessionConfig{0.05, 2, 2});
  session.hello();
  session.reset({{"seed", "7"}});
  int observations = 0;
  for (int k = 0; k < 25; ++k) {
    auto obs = session.step(update_at(k, 0.05));
    ++observations;
    CHECK(obs.image.width == 2);
  }
  CHECK(observations == 25);
  session.close();
  server.join();
  CHECK(app.steps == 25);
}

TEST_CASE("lockstep trace alternates state updates and observations") {
  std::string path = "/tmp/wsim_trace_test.dump";
  {
    CountingApp app;
    Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
    FrameDumpWriter trace(path);
    session.set_trace(&trace);
    session.hello();
    session.reset({});
    for (int k = 0; k < 12; ++k) session.step(update_at(k, 0.05));
    session.close();
  }
  FrameDumpReader dump(path);
  int updates = 0, observations = 0;
  int last = -1;  // -1 none, 0 update, 1 observation
  for (size_t i = 0; i < dump.size(); ++i) {
    wire::Message msg = dump.decode(i);
    if (std::holds_alternative<wire::StateUpdateMsg>(msg)) {
      CHECK(last != 0);  // strict alternation
      last = 0;
      ++updates;
    } else if (std::holds_alternative<wire::ObservationMsg>(msg)) {
      CHECK(last == 0);
      last = 1;
      ++observations;
    }
  }
  CHECK(updates == 12);
  CHECK(observations == 12);
  std::remove(path.c_str());
}

TEST_CASE("a reset issued mid-exchange queues behind the pending observation") {
  CountingApp app;
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({});
  session.step_send(update_at(0, 0.05));
  CHECK(session.state() == LockstepState::kAwaitingObservation);
  // The pending observation is drained first, then the reset proceeds.
  auto initial = session.reset({});
  CHECK(initial.time_feature == 1.0);
  CHECK(app.resets == 2);
  CHECK(app.steps == 1);
  // The new episode starts cleanly at t = 0.
  auto obs = session.step(update_at(0, 0.05));
  CHECK_FALSE(obs.is_finished);
}
