#include "whacsim/fatigue.hpp"

#include <algorithm>
#include <stdexcept>

namespace whacsim {

namespace {

struct Deriv {
  double da = 0.0;
  double df = 0.0;
};

// Derivatives of (m_a, m_f); m_r is implied by conservation.
Deriv derivatives(const FatigueParams& p, double m_a, double m_f, double tl) {
  double m_r = 100.0 - m_a - m_f;
  double drive;
  if (m_a < tl) {
    drive = (m_r >= tl - m_a) ? p.activation_drive * (tl - m_a) : p.activation_drive * m_r;
  } else {
    drive = p.deactivation_drive * (tl - m_a);
  }
  bool resting = (tl < m_a) || (tl == 0.0);
  double r_eff = resting ? p.rest_multiplier * p.recovery_rate : p.recovery_rate;
  return {drive - p.fatigue_rate * m_a, p.fatigue_rate * m_a - r_eff * m_f};
}

}  // namespace

double FatigueState::mean_fatigued_fraction() const {
  if (units.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& u : units) sum += u.fatigued;
  return sum / (100.0 * static_cast<double>(units.size()));
}

FatigueCompartments fatigue_step_unit(const FatigueParams& p, const FatigueCompartments& c,
                                      double tl, double dt) {
  double a = c.active;
  double f = c.fatigued;

  Deriv k1 = derivatives(p, a, f, tl);
  Deriv k2 = derivatives(p, a + 0.5 * dt * k1.da, f + 0.5 * dt * k1.df, tl);
  Deriv k3 = derivatives(p, a + 0.5 * dt * k2.da, f + 0.5 * dt * k2.df, tl);
  Deriv k4 = derivatives(p, a + dt * k3.da, f + dt * k3.df, tl);

  double na = a + dt / 6.0 * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
  double nf = f + dt / 6.0 * (k1.df + 2.0 * k2.df + 2.0 * k3.df + k4.df);

  na = std::clamp(na, 0.0, 100.0);
  nf = std::clamp(nf, 0.0, 100.0 - na);
  return {100.0 - na - nf, na, nf};
}

FatigueState fatigue_step(const FatigueParams& p, const FatigueState& state,
                          std::span<const double> target_load_pct, double dt) {
  if (target_load_pct.size() != state.units.size()) {
    throw std::invalid_argument("target load count does not match fatigue unit count");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("fatigue_step requires dt > 0");
  FatigueState out = state;
  for (size_t i = 0; i < out.units.size(); ++i) {
    double tl = std::clamp(target_load_pct[i], 0.0, 100.0);
    out.units[i] = fatigue_step_unit(p, state.units[i], tl, dt);
  }
  return out;
}

}  // namespace whacsim
