#pragma once

#include <optional>
#include <vector>

#include "emags/grid.hpp"

namespace emags {

/// Object-level velocity statistics over the cells of one connected
/// component. Object-wide means are inverse-variance weighted; cellwise
/// moments are unweighted. Orientation statistics are circular.
struct VelocityProfile {
  // object wide
  double mean_ve = 0.0;
  double mean_vn = 0.0;
  double var_mean_ve = 0.0;  // variance of the weighted mean
  double var_mean_vn = 0.0;
  double orientation = 0.0;  // atan2(mean_vn, mean_ve)
  double speed = 0.0;
  double expected_sigma_ve = 0.0;  // mean per-cell std
  double expected_sigma_vn = 0.0;

  // cellwise moments (population form)
  double cell_mean_ve = 0.0;
  double cell_std_ve = 0.0;
  double cell_mean_vn = 0.0;
  double cell_std_vn = 0.0;
  double cell_mean_theta = 0.0;  // circular mean
  double cell_std_theta = 0.0;   // std of wrapped residuals
  double cell_mean_speed = 0.0;
  double cell_std_speed = 0.0;

  int n_cells = 0;

  /// Pooled per-cell velocity std, used as the minimum gating band.
  double sigma_floor() const {
    return 0.5 * (expected_sigma_ve + expected_sigma_vn);
  }
  double std_theta_gate() const;
  double std_speed_gate() const;
};

/// Computes the profile from all valid-velocity cells; cells without a
/// valid covariance are discarded. Empty when no cell qualifies.
std::optional<VelocityProfile> compute_profile(const std::vector<Cell>& cells);

/// True iff the cell's heading lies within band*std of the cellwise
/// orientation mean (circular distance) and its speed within band*std of
/// the cellwise speed mean. Cells without valid velocity never match.
bool cell_matches(const VelocityProfile& profile, const Cell& cell,
                  double band = 2.0);

}  // namespace emags
