#include <doctest.h>

#include <cmath>
#include <set>

#include "whacsim/game.hpp"
#include "whacsim/stats.hpp"

using namespace whacsim;

namespace {

GameConfig base_config() {
  GameConfig cfg;
  cfg.seed = 11;
  return cfg;
}

// Controller pose whose hammer tip lands exactly at `tip` under the default
// tip offset (0, -0.10, 0) with identity orientation.
Pose controller_for_tip(const GameConfig& cfg, const Vec3& tip) {
  Pose p;
  p.position = tip - cfg.hammer_tip_offset.position;
  return p;
}

}  // namespace

TEST_CASE("difficulty caps the number of simultaneous targets") {
  CHECK(max_simultaneous_targets(Difficulty::kEasy) == 1);
  CHECK(max_simultaneous_targets(Difficulty::kMedium) == 3);
  CHECK(max_simultaneous_targets(Difficulty::kHard) == 5);
}

TEST_CASE("placement presets match the stated offsets and tilts") {
  PlacementFrame low = PlacementFrame::preset(Placement::kLow);
  CHECK(low.offset.x == 0.15);
  CHECK(low.offset.y == -0.30);
  CHECK(low.offset.z == 0.35);
  CHECK(low.tilt_deg == 45.0);
  PlacementFrame mid = PlacementFrame::preset(Placement::kMid);
  CHECK(mid.offset.y == -0.10);
  CHECK(mid.offset.z == 0.40);
  CHECK(mid.tilt_deg == 0.0);
  PlacementFrame high = PlacementFrame::preset(Placement::kHigh);
  CHECK(high.offset.y == 0.20);
  CHECK(high.offset.z == 0.30);
  CHECK(high.tilt_deg == -45.0);
}

TEST_CASE("hit axis points through the plane") {
  GameConfig cfg = base_config();
  cfg.placement = Placement::kMid;
  Game mid(cfg);
  Vec3 axis = mid.hit_axis();
  CHECK(axis.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(axis.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(axis.z == doctest::Approx(1.0).epsilon(1e-12));

  cfg.placement = Placement::kLow;
  Game low(cfg);
  Vec3 axis_low = low.hit_axis();
  // Tilted 45 degrees: hitting direction is down-and-forward onto the board.
  CHECK(axis_low.y == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-12));
  CHECK(axis_low.z == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  cfg.placement = Placement::kHigh;
  Game high(cfg);
  Vec3 axis_high = high.hit_axis();
  CHECK(axis_high.y == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(axis_high.z == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("zero active targets spawn instantaneously") {
  GameConfig cfg = base_config();
  Game game(cfg);
  CHECK(game.targets().empty());
  game.spawn_update(0.05);
  CHECK(game.targets().size() == 1);
}

TEST_CASE("easy difficulty never exceeds one active target") {
  GameConfig cfg = base_config();
  cfg.difficulty = Difficulty::kEasy;
  Game game(cfg);
  for (int i = 0; i < 10000; ++i) {
    game.spawn_update(0.05);
    CHECK(game.targets().size() <= 1);
  }
}

TEST_CASE("spawn intervals are uniform and the medium cap holds") {
  GameConfig cfg = base_config();
  cfg.difficulty = Difficulty::kMedium;
  Game game(cfg);
  for (int i = 0; i < 2000000; ++i) {  // 10^5 simulated seconds
    game.spawn_update(0.05);
    REQUIRE(game.targets().size() <= 3);
  }
  const std::vector<double>& intervals = game.drawn_spawn_intervals();
  REQUIRE(intervals.size() > 1000);
  // One-sample KS against U[0, 0.5].
  std::vector<double> sorted(intervals);
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  size_t n = sorted.size();
  for (size_t i = 0; i < n; ++i) {
    double f = std::clamp(sorted[i] / 0.5, 0.0, 1.0);
    d = std::max(d, std::max((i + 1.0) / n - f, f - static_cast<double>(i) / n));
  }
  double p = ks_survival(std::sqrt(static_cast<double>(n)) * d);
  CHECK(p > 0.01);
}

TEST_CASE("expired targets count as misses and are resolved exactly once") {
  GameConfig cfg = base_config();
  cfg.difficulty = Difficulty::kEasy;
  Game game(cfg);
  game.spawn_update(0.05);
  REQUIRE(game.targets().size() == 1);
  // Age it past the lifespan without touching it.
  for (int i = 0; i < 25 && game.misses() == 0; ++i) game.spawn_update(0.05);
  CHECK(game.misses() == 1);
  CHECK(game.hits() == 0);
  // The resolved target respawned elsewhere (zero-active instant spawn).
  CHECK(game.targets().size() == 1);
  int spawned = 0, resolved = 0;
  for (int c = 0; c < 9; ++c) {
    spawned += game.cell_counters().spawns[c];
    resolved += game.cell_counters().hits[c] + game.cell_counters().misses[c];
  }
  CHECK(spawned == resolved + static_cast<int>(game.targets().size()));
}

TEST_CASE("velocity constraint gates hits in every placement") {
  for (Placement placement : {Placement::kLow, Placement::kMid, Placement::kHigh}) {
    GameConfig cfg = base_config();
    cfg.placement = placement;
    cfg.constrained = true;

    {  // fast strike along the hit axis scores
      Game game(cfg);
      REQUIRE(game.force_spawn(1, 1));
      StepEvents ev = game.check_hit(game.cell_position(1, 1), 1.0 * game.hit_axis());
      CHECK(ev.hits == 1);
      CHECK(ev.slow_contacts == 0);
      CHECK(game.score() == 1);
      CHECK(game.targets().empty());
    }
    {  // sub-threshold contact stays active and can still be hit
      Game game(cfg);
      REQUIRE(game.force_spawn(1, 1));
      Vec3 target = game.cell_position(1, 1);
      StepEvents ev = game.check_hit(target, 0.5 * game.hit_axis());
      CHECK(ev.hits == 0);
      CHECK(ev.slow_contacts == 1);
      StepEvents ev2 = game.check_hit(target, 0.9 * game.hit_axis());
      CHECK(ev2.hits == 1);
    }
    {  // the threshold itself counts as a hit
      Game game(cfg);
      REQUIRE(game.force_spawn(1, 1));
      StepEvents ev = game.check_hit(game.cell_position(1, 1), 0.8 * game.hit_axis());
      CHECK(ev.hits == 1);
    }
    {  // fast motion orthogonal to the axis is only a contact
      Game game(cfg);
      REQUIRE(game.force_spawn(1, 1));
      Vec3 axis = game.hit_axis();
      Vec3 lateral = axis.cross(Vec3{0, 1, 0}).norm() > 0.5 ? axis.cross(Vec3{0, 1, 0})
                                                            : axis.cross(Vec3{1, 0, 0});
      StepEvents ev = game.check_hit(game.cell_position(1, 1), 3.0 * lateral.normalized());
      CHECK(ev.hits == 0);
      CHECK(ev.slow_contacts == 1);
    }
  }
}

TEST_CASE("unconstrained mode never produces slow contacts") {
  GameConfig cfg = base_config();
  cfg.constrained = false;
  Game game(cfg);
  REQUIRE(game.force_spawn(0, 2));
  Vec3 target = game.cell_position(0, 2);
  StepEvents ev = game.check_hit(target, 0.5 * game.hit_axis());
  CHECK(ev.hits == 1);
  CHECK(ev.slow_contacts == 0);
}

TEST_CASE("no contact just outside the combined radius") {
  GameConfig cfg = base_config();
  Game game(cfg);
  REQUIRE(game.force_spawn(1, 1));
  Vec3 target = game.cell_position(1, 1);
  double contact = cfg.target_radius + cfg.hammer_head_radius;
  Vec3 tip = target + (contact + 1e-6) * Vec3{1, 0, 0};
  StepEvents ev = game.check_hit(tip, 2.0 * game.hit_axis());
  CHECK(ev.hits == 0);
  CHECK(ev.slow_contacts == 0);
}

TEST_CASE("reward: single hit with an empty board afterwards is worth 10") {
  GameConfig cfg = base_config();
  Game game(cfg);
  StepEvents ev;
  ev.hits = 1;
  RewardBreakdown r = game.compute_reward(ev, Vec3{0, 0, 0}, 2.0, 0.0);
  CHECK(r.total == 10.0);
  CHECK(r.score_delta == 1.0);
}

TEST_CASE("reward: one active target at 0.3 m costs exactly 0.3") {
  GameConfig cfg = base_config();
  Game game(cfg);
  REQUIRE(game.force_spawn(1, 1));
  Vec3 target = game.cell_position(1, 1);
  Vec3 tip = target + Vec3{0.0, 0.0, -0.3};
  RewardBreakdown r = game.compute_reward(StepEvents{}, tip, 0.0, 0.0);
  CHECK(r.total == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(r.distance_term == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("reward: slow contact at 0.5 m/s contributes -1.25") {
  // Independent evaluation of the weighted sum: w_c * v_h * C_c.
  GameConfig cfg = base_config();
  Game game(cfg);
  StepEvents ev;
  ev.slow_contacts = 1;
  RewardBreakdown r = game.compute_reward(ev, Vec3{9, 9, 9}, 0.5, 0.0);
  double expected = 10.0 * 0.0 + 2.5 * 0.5 * (-1.0) + 1.0 * 0.0 + 0.1 * 0.0;
  CHECK(r.total == expected);
}

TEST_CASE("reward breakdown recomposes bitwise from its components") {
  GameConfig cfg = base_config();
  Game game(cfg);
  Rng rng(23);
  RewardWeights w;
  for (int i = 0; i < 10000; ++i) {
    game.spawn_update(0.05);
    Vec3 tip{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 vel{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    StepEvents ev = game.check_hit(tip, vel);
    double effort = rng.uniform(0, 1);
    double speed = vel.norm();
    RewardBreakdown r = game.compute_reward(ev, tip, speed, effort);
    double recomposed = w.score * r.score_delta + w.contact * r.hammer_speed * r.contact_term +
                        w.distance * r.distance_term + w.effort * r.effort_term;
    CHECK(recomposed == r.total);
  }
}

TEST_CASE("curriculum distribution follows the stated mixture") {
  std::array<int, 9> spawns{};
  std::array<int, 9> misses{};
  SUBCASE("all fail rates zero is uniform") {
    auto probs = CurriculumState::distribution(spawns, misses);
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / 9).epsilon(1e-12));
  }
  SUBCASE("single failing cell gets half the mass plus its uniform share") {
    spawns[4] = 3;
    misses[4] = 3;  // fail rate 1 at cell 4, 0 elsewhere
    auto probs = CurriculumState::distribution(spawns, misses);
    CHECK(probs[4] == doctest::Approx(0.5 / 9 + 0.5).epsilon(1e-12));
    for (int c = 0; c < 9; ++c) {
      if (c != 4) CHECK(probs[c] == doctest::Approx(0.5 / 9).epsilon(1e-12));
    }
  }
  SUBCASE("distribution sums to one with the floor respected") {
    spawns = {5, 1, 2, 9, 4, 1, 7, 3, 2};
    misses = {2, 1, 0, 5, 2, 0, 3, 3, 1};
    auto probs = CurriculumState::distribution(spawns, misses);
    double sum = 0;
    for (double p : probs) {
      CHECK(p >= 0.5 / 9 - 1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("curriculum sampling matches its distribution over many draws") {
  CurriculumState cs;
  cs.spawns = {4, 2, 2, 2, 2, 2, 2, 2, 4};
  cs.misses = {4, 0, 0, 1, 0, 0, 0, 0, 2};
  cs.finish_episode();
  std::array<double, 9> probs = cs.probs;
  Rng rng(101);
  std::array<int, 9> counts{};
  const int draws = 1000000;
  for (int i = 0; i < draws; ++i) counts[cs.sample(rng)] += 1;
  for (int c = 0; c < 9; ++c) {
    double freq = static_cast<double>(counts[c]) / draws;
    double sigma = std::sqrt(probs[c] * (1 - probs[c]) / draws);
    CHECK(std::abs(freq - probs[c]) <= 3 * sigma);
  }
}

TEST_CASE("curriculum sampling respects occupancy") {
  CurriculumState cs;
  Rng rng(5);
  std::array<bool, 9> occupied{};
  for (int c = 0; c < 8; ++c) occupied[c] = true;
  for (int i = 0; i < 100; ++i) CHECK(cs.sample_unoccupied(rng, occupied) == 8);
  occupied[8] = true;
  CHECK(cs.sample_unoccupied(rng, occupied) == -1);
}

TEST_CASE("adaptive spawning prefers previously failed cells") {
  GameConfig cfg = base_config();
  cfg.curriculum = CurriculumMode::kAdaptive;
  cfg.difficulty = Difficulty::kEasy;
  Game game(cfg);
  // Fabricate an episode where only cell 0 fails: age its targets out while
  // immediately hitting everything the spawner puts elsewhere.
  GameConfig next = cfg;
  for (int i = 0; i < 50; ++i) {
    game.force_spawn(0, 0);
    for (int k = 0; k < 21; ++k) {
      game.spawn_update(0.05);
      std::vector<Target> snapshot = game.targets();
      for (const Target& t : snapshot) {
        if (t.cell() != 0) game.check_hit(t.position, 10.0 * game.hit_axis());
      }
    }
  }
  next.seed = 77;
  game.reset(next);
  int in_cell0 = 0, total = 0;
  for (int i = 0; i < 4000; ++i) {
    game.spawn_update(0.05);
    if (!game.targets().empty()) {
      ++total;
      const Target& t = game.targets().back();
      if (t.cell() == 0) ++in_cell0;
    }
    // Clear the board so each spawn is fresh.
    Vec3 pos = game.targets().empty() ? Vec3{} : game.targets().back().position;
    game.check_hit(pos, 10.0 * game.hit_axis());
  }
  // Cell 0 should be drawn far more often than the uniform 1/9.
  CHECK(static_cast<double>(in_cell0) / total > 0.25);
}

TEST_CASE("full step pipeline: clock, finish flag, time feature") {
  GameConfig cfg = base_config();
  cfg.round_duration = 1.0;
  Game game(cfg);
  Pose controller = controller_for_tip(cfg, Vec3{0, -1, 0});
  double dt = 0.05;
  Game::StepResult last;
  for (int k = 0; k < 20; ++k) {
    last = game.step((k + 1) * dt, controller, 0.0);
    if (k < 19) CHECK_FALSE(last.finished);
  }
  CHECK(last.finished);
  CHECK(last.time_feature == 0.0);
  CHECK(game.clock() == doctest::Approx(1.0));
}
