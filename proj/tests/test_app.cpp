#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "whacsim/app.hpp"
#include "whacsim/session.hpp"

using namespace whacsim;

namespace {

GameConfig app_config() {
  GameConfig cfg;
  cfg.seed = 5;
  return cfg;
}

wire::StateUpdateMsg stationary_update(int k, double dt, const Vec3& controller_pos,
                                       double fatigue = 0.0) {
  wire::StateUpdateMsg u;
  u.t_current = k * dt;
  u.t_next = (k + 1) * dt;
  u.hmd = Pose{};
  Pose c;
  c.position = controller_pos;
  u.controllers = {c};
  u.channels = {{"fatigue", fatigue}};
  return u;
}

double entry(const wire::ObservationMsg& obs, const std::string& key) {
  for (const auto& [k, v] : obs.log_entries) {
    if (k == key) return v;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("a full 60 s round with a stationary hammer") {
  WhacApp app(app_config());
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{0.05, 120, 80});
  session.hello();
  auto initial = session.reset({{"seed", "42"}});
  CHECK(initial.time_feature == 1.0);
  CHECK(entry(initial, "hits") == 0.0);

  Vec3 far_away{0.0, -2.0, 0.0};
  int observations = 0;
  wire::ObservationMsg last;
  for (int k = 0; k < 1200; ++k) {
    last = session.step(stationary_update(k, 0.05, far_away));
    ++observations;
    if (k < 1199) REQUIRE_FALSE(last.is_finished);
  }
  CHECK(observations == 1200);  // exactly one observation per step
  CHECK(last.is_finished);
  CHECK(last.time_feature == 0.0);
  CHECK(entry(last, "hits") == 0.0);
  CHECK(entry(last, "slow_contacts") == 0.0);

  // All resolved targets are misses; unresolved ones are still active.
  double spawned = 0, missed = 0;
  for (int c = 0; c < 9; ++c) {
    spawned += entry(last, "cell" + std::to_string(c) + "_spawns");
    missed += entry(last, "cell" + std::to_string(c) + "_misses");
  }
  CHECK(entry(last, "misses") == missed);
  CHECK(spawned >= missed);
  CHECK(spawned - missed <= 3.0);  // at most the medium cap can remain active
  CHECK(missed > 30);              // roughly one expiry per lifespan-and-gap

  // Round completion logged one episode record.
  REQUIRE(app.completed_episodes().size() == 1);
  const EpisodeRecord& rec = app.completed_episodes().front();
  CHECK(rec.hits == 0);
  CHECK(rec.misses == static_cast<int>(missed));
  CHECK(rec.difficulty == "medium");
}

TEST_CASE("identical seeds give byte-identical observation streams") {
  auto run_round = [](const std::string& trace_path) {
    WhacApp app(app_config());
    Session session(std::make_unique<SyncAppStream>(app), SessionConfig{0.05, 120, 80});
    FrameDumpWriter trace(trace_path);
    session.set_trace(&trace);
    session.hello();
    session.reset({{"seed", "9"}, {"difficulty", "hard"}});
    // A hammer that sweeps across the board so hits occur.
    for (int k = 0; k < 400; ++k) {
      double phase = 0.03 * k;
      Vec3 pos{0.15 + 0.12 * std::sin(phase), -0.10 + 0.12 * std::cos(phase * 0.7),
               0.25 + 0.1 * std::sin(phase * 1.3)};
      session.step(stationary_update(k, 0.05, pos));
    }
    session.close();
  };
  run_round("/tmp/wsim_app_a.dump");
  run_round("/tmp/wsim_app_b.dump");

  std::ifstream a("/tmp/wsim_app_a.dump", std::ios::binary);
  std::ifstream b("/tmp/wsim_app_b.dump", std::ios::binary);
  std::string bytes_a((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string bytes_b((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(bytes_a.size() > 0);
  CHECK(bytes_a == bytes_b);
  std::remove("/tmp/wsim_app_a.dump");
  std::remove("/tmp/wsim_app_b.dump");
}

TEST_CASE("same seed reproduces the spawn schedule across resets") {
  WhacApp app(app_config());
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();

  auto collect_schedule = [&]() {
    std::vector<double> spawns;
    session.reset({{"seed", "1234"}});
    for (int k = 0; k < 200; ++k) {
      auto obs = session.step(stationary_update(k, 0.05, Vec3{0, -2, 0}));
      double total = 0;
      for (int c = 0; c < 9; ++c) total += entry(obs, "cell" + std::to_string(c) + "_spawns");
      spawns.push_back(total);
    }
    return spawns;
  };
  auto a = collect_schedule();
  auto b = collect_schedule();
  CHECK(a == b);
}

TEST_CASE("consecutive resets with the same seed give identical initial observations") {
  WhacApp app(app_config());
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  auto first = session.reset({{"seed", "3"}});
  auto second = session.reset({{"seed", "3"}});
  CHECK(wire::encode_frame(first) == wire::encode_frame(second));
}

TEST_CASE("fatigue channel drives the effort term") {
  WhacApp app(app_config());
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({{"seed", "8"}});
  auto obs = session.step(stationary_update(0, 0.05, Vec3{0, -2, 0}, 0.5));
  CHECK(entry(obs, "reward_effort") == -0.5);
}

TEST_CASE("episode config switches difficulty, placement and constraint") {
  WhacApp app(app_config());
  Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
  session.hello();
  session.reset({{"difficulty", "hard"}, {"placement", "high"}, {"constrained", "0"}});
  CHECK(app.game().config().difficulty == Difficulty::kHard);
  CHECK(app.game().config().placement == Placement::kHigh);
  CHECK_FALSE(app.game().config().constrained);
  CHECK_THROWS(session.reset({{"difficulty", "nightmare"}}));
}

TEST_CASE("episode json lines carry the documented schema") {
  std::string path = "/tmp/wsim_episodes_test.jsonl";
  std::remove(path.c_str());
  {
    GameConfig cfg = app_config();
    cfg.round_duration = 2.0;
    WhacApp app(cfg, path);
    Session session(std::make_unique<SyncAppStream>(app), SessionConfig{});
    session.hello();
    session.reset({{"seed", "21"}});
    for (int k = 0; k < 40; ++k) session.step(stationary_update(k, 0.05, Vec3{0, -2, 0}));
    session.reset({{"seed", "22"}});
    for (int k = 0; k < 40; ++k) session.step(stationary_update(k, 0.05, Vec3{0, -2, 0}));
    session.close();
  }
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("\"episode\":") != std::string::npos);
    CHECK(line.find("\"hits\":") != std::string::npos);
    CHECK(line.find("\"misses\":") != std::string::npos);
    CHECK(line.find("\"slow_contacts\":") != std::string::npos);
    CHECK(line.find("\"per_cell\":[") != std::string::npos);
    CHECK(line.find("\"score\":") != std::string::npos);
  }
  CHECK(lines == 2);
  std::remove(path.c_str());
}
