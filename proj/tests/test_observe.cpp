#include <doctest.h>

#include <limits>

#include "whacsim/arm.hpp"
#include "whacsim/rng.hpp"

using namespace whacsim;

namespace {

wire::RgbdImage flat_image(uint16_t w, uint16_t h, uint8_t r, uint8_t g, uint8_t b, float d) {
  wire::RgbdImage img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  img.depth.assign(static_cast<size_t>(w) * h, d);
  return img;
}

}  // namespace

TEST_CASE("black image at rest gives a zero headset block") {
  ArmModel m;  // green + depth channels by default
  ArmState s{};
  wire::RgbdImage img = flat_image(120, 80, 0, 0, 0, 0.0f);
  std::vector<double> obs = observe(m, s, {0, 0, 0}, FatigueState::make(6), img, 1.0);
  REQUIRE(obs.size() == observation_size(m, 120, 80));
  // Layout: q(3) qdot(3) qddot(3) act(6) tip(3) | pooled | time.
  size_t prop = 18;
  size_t cells = (120 / 8) * (80 / 8);
  for (size_t i = prop; i < prop + 2 * cells; ++i) CHECK(obs[i] == 0.0);
  CHECK(obs.back() == 1.0);
  // Proprioception reflects the rest state: q and qdot zero, tip at FK rest.
  for (size_t i = 0; i < 6; ++i) CHECK(obs[i] == 0.0);
  Vec3 tip = forward_kinematics(m, {0, 0, 0}).hammer_tip.position;
  CHECK(obs[15] == tip.x);
  CHECK(obs[16] == tip.y);
  CHECK(obs[17] == tip.z);
}

TEST_CASE("uniform mid-green image pools to 128/255 in every green cell") {
  ArmModel m;
  m.obs_channels = wire::kChannelG;
  wire::RgbdImage img = flat_image(120, 80, 7, 128, 9, 1.0f);
  std::vector<double> pooled = pooled_headset(m, img);
  REQUIRE(pooled.size() == (120 / 8) * (80 / 8));
  for (double v : pooled) CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("pooled cells equal the direct block mean of a random image") {
  ArmModel m;
  m.obs_channels = wire::kChannelR | wire::kChannelG | wire::kChannelB | wire::kChannelDepth;
  Rng rng(77);
  wire::RgbdImage img;
  img.width = 120;
  img.height = 80;
  img.rgb.resize(120 * 80 * 3);
  img.depth.resize(120 * 80);
  for (auto& b : img.rgb) b = static_cast<uint8_t>(rng.uniform_int(256));
  for (auto& d : img.depth) d = static_cast<float>(rng.uniform(0.0, 3.0));

  std::vector<double> pooled = pooled_headset(m, img);
  int cx = 120 / 8, cy = 80 / 8;
  REQUIRE(pooled.size() == static_cast<size_t>(4 * cx * cy));

  // Direct block-mean oracle for a few sampled cells in each channel.
  for (int ch = 0; ch < 4; ++ch) {
    for (int cell : {0, 7, cx * cy - 1}) {
      int cyi = cell / cx, cxi = cell % cx;
      double sum = 0;
      for (int py = 0; py < 8; ++py) {
        for (int px = 0; px < 8; ++px) {
          size_t idx = (static_cast<size_t>(cyi) * 8 + py) * 120 + cxi * 8 + px;
          if (ch < 3) {
            sum += img.rgb[idx * 3 + ch] / 255.0;
          } else {
            sum += std::min(img.depth[idx] / m.depth_far, 1.0);
          }
        }
      }
      CHECK(pooled[ch * cx * cy + cell] == doctest::Approx(sum / 64.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("infinite depth clamps to the far plane") {
  ArmModel m;
  m.obs_channels = wire::kChannelDepth;
  wire::RgbdImage img = flat_image(16, 8, 0, 0, 0, std::numeric_limits<float>::infinity());
  std::vector<double> pooled = pooled_headset(m, img);
  for (double v : pooled) CHECK(v == 1.0);
}

TEST_CASE("dimension mismatch raises an observation error") {
  ArmModel m;
  wire::RgbdImage img = flat_image(10, 10, 0, 0, 0, 1.0f);  // not divisible by pool 8
  CHECK_THROWS_AS(pooled_headset(m, img), ObservationError);
  wire::RgbdImage bad = flat_image(16, 16, 0, 0, 0, 1.0f);
  bad.rgb.pop_back();
  CHECK_THROWS_AS(pooled_headset(m, bad), ObservationError);
}

TEST_CASE("observe is a pure function of its inputs") {
  ArmModel m;
  ArmState s{};
  s.q = {0.5, 0.2, 1.0};
  wire::RgbdImage img = flat_image(120, 80, 10, 20, 30, 0.7f);
  auto a = observe(m, s, {0.1, 0, 0}, FatigueState::make(6), img, 0.5);
  auto b = observe(m, s, {0.1, 0, 0}, FatigueState::make(6), img, 0.5);
  CHECK(a == b);
}

TEST_CASE("stacked delayed observation lags by the configured steps") {
  ArmModel m;
  m.stack_delayed = true;
  m.obs_channels = wire::kChannelG;
  Arm arm(m);
  arm.configure_stacking(2);
  size_t cells = (120 / 8) * (80 / 8);

  auto obs0 = arm.observe(flat_image(120, 80, 0, 100, 0, 1.0f), 1.0);
  auto obs1 = arm.observe(flat_image(120, 80, 0, 200, 0, 1.0f), 0.9);
  auto obs2 = arm.observe(flat_image(120, 80, 0, 50, 0, 1.0f), 0.8);
  REQUIRE(obs2.size() == 18 + 2 * cells + 1);
  // Current block sees 50/255; delayed block still shows the frame from two
  // steps earlier (100/255).
  CHECK(obs2[18] == doctest::Approx(50.0 / 255.0));
  CHECK(obs2[18 + cells] == doctest::Approx(100.0 / 255.0));
  CHECK(obs0.size() == obs1.size());
}
