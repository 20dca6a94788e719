#pragma once

// Three-compartment muscle fatigue model with rest-recovery multiplier.
// Motor units, expressed as percentages summing to 100, move between
// resting (m_r), active (m_a) and fatigued (m_f) compartments driven by a
// target load TL in %MVC:
//
//   C  = LD*(TL - m_a)   if m_a < TL and m_r >= TL - m_a
//   C  = LD*m_r          if m_a < TL and m_r <  TL - m_a
//   C  = LR*(TL - m_a)   if m_a >= TL
//   dm_r/dt = -C + R_eff*m_f
//   dm_a/dt =  C - F*m_a
//   dm_f/dt =  F*m_a - R_eff*m_f
//
// with R_eff = r*R while resting (TL < m_a or TL == 0) and R otherwise.
// Integrated with explicit RK4 over the given dt; conservation
// m_r + m_a + m_f == 100 is maintained by construction.

#include <span>
#include <vector>

namespace whacsim {

struct FatigueParams {
  double fatigue_rate = 0.0146;      // F, 1/s
  double recovery_rate = 0.0022;     // R, 1/s
  double activation_drive = 10.0;    // LD, 1/s
  double deactivation_drive = 10.0;  // LR, 1/s
  double rest_multiplier = 7.5;      // r
};

struct FatigueCompartments {
  double rested = 100.0;
  double active = 0.0;
  double fatigued = 0.0;
};

struct FatigueState {
  std::vector<FatigueCompartments> units;

  static FatigueState make(size_t n_units) {
    FatigueState s;
    s.units.assign(n_units, FatigueCompartments{});
    return s;
  }

  // Mean over units of m_f / 100, the effort signal fed into rewards.
  double mean_fatigued_fraction() const;
};

FatigueCompartments fatigue_step_unit(const FatigueParams& params, const FatigueCompartments& c,
                                      double target_load_pct, double dt);

// target_load_pct: one entry per unit, each in [0, 100].
FatigueState fatigue_step(const FatigueParams& params, const FatigueState& state,
                          std::span<const double> target_load_pct, double dt);

}  // namespace whacsim
