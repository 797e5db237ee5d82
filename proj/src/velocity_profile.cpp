#include "emags/velocity_profile.hpp"

#include <algorithm>
#include <cmath>

namespace emags {

namespace {
// Heading of a near-zero velocity is numerically meaningless; the gate
// widens with the uncertainty-to-speed ratio (delta method), capped at pi.
constexpr double kMinSpeedForTheta = 0.1;
}  // namespace

double VelocityProfile::std_theta_gate() const {
  const double floor =
      std::min(kPi, sigma_floor() / std::max(cell_mean_speed, kMinSpeedForTheta));
  return std::max(cell_std_theta, floor);
}

double VelocityProfile::std_speed_gate() const {
  return std::max(cell_std_speed, sigma_floor());
}

std::optional<VelocityProfile> compute_profile(const std::vector<Cell>& cells) {
  std::vector<const Cell*> valid;
  valid.reserve(cells.size());
  for (const Cell& c : cells) {
    if (c.valid_velocity()) valid.push_back(&c);
  }
  if (valid.empty()) return std::nullopt;

  VelocityProfile p;
  p.n_cells = static_cast<int>(valid.size());

  double wsum_e = 0.0, wsum_n = 0.0, wv_e = 0.0, wv_n = 0.0;
  double sig_e = 0.0, sig_n = 0.0;
  for (const Cell* c : valid) {
    const double we = 1.0 / double(c->var_ve);
    const double wn = 1.0 / double(c->var_vn);
    wsum_e += we;
    wsum_n += wn;
    wv_e += we * double(c->v_e);
    wv_n += wn * double(c->v_n);
    sig_e += std::sqrt(double(c->var_ve));
    sig_n += std::sqrt(double(c->var_vn));
  }
  p.mean_ve = wv_e / wsum_e;
  p.mean_vn = wv_n / wsum_n;
  p.var_mean_ve = 1.0 / wsum_e;
  p.var_mean_vn = 1.0 / wsum_n;
  p.orientation = std::atan2(p.mean_vn, p.mean_ve);
  p.speed = std::sqrt(p.mean_ve * p.mean_ve + p.mean_vn * p.mean_vn);
  p.expected_sigma_ve = sig_e / p.n_cells;
  p.expected_sigma_vn = sig_n / p.n_cells;

  double se = 0.0, sn = 0.0, ss = 0.0;
  std::vector<double> thetas;
  thetas.reserve(valid.size());
  for (const Cell* c : valid) {
    se += double(c->v_e);
    sn += double(c->v_n);
    ss += c->speed();
    thetas.push_back(c->heading());
  }
  const double n = double(p.n_cells);
  p.cell_mean_ve = se / n;
  p.cell_mean_vn = sn / n;
  p.cell_mean_speed = ss / n;
  p.cell_mean_theta = circ_mean(thetas);
  p.cell_std_theta = circ_std(thetas, p.cell_mean_theta);

  double de = 0.0, dn = 0.0, ds = 0.0;
  for (const Cell* c : valid) {
    de += (double(c->v_e) - p.cell_mean_ve) * (double(c->v_e) - p.cell_mean_ve);
    dn += (double(c->v_n) - p.cell_mean_vn) * (double(c->v_n) - p.cell_mean_vn);
    ds += (c->speed() - p.cell_mean_speed) * (c->speed() - p.cell_mean_speed);
  }
  p.cell_std_ve = std::sqrt(de / n);
  p.cell_std_vn = std::sqrt(dn / n);
  p.cell_std_speed = std::sqrt(ds / n);
  return p;
}

bool cell_matches(const VelocityProfile& profile, const Cell& cell, double band) {
  if (!cell.valid_velocity()) return false;
  const double dtheta = circ_dist(cell.heading(), profile.cell_mean_theta);
  if (dtheta > band * profile.std_theta_gate()) return false;
  const double dspeed = std::abs(cell.speed() - profile.cell_mean_speed);
  return dspeed <= band * profile.std_speed_gate();
}

}  // namespace emags
