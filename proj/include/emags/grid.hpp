#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

#include "emags/geometry.hpp"

namespace emags {

/// One grid cell's channel set: Dempster-Shafer occupancy masses plus a
/// velocity estimate with per-axis variances and cross covariance.
/// Velocity is valid iff both variances are finite and positive; the
/// container encodes invalid velocity as NaN variances.
struct Cell {
  float m_occ = 0.0f;
  float m_free = 0.0f;
  float v_e = 0.0f;
  float v_n = 0.0f;
  float var_ve = std::numeric_limits<float>::quiet_NaN();
  float var_vn = std::numeric_limits<float>::quiet_NaN();
  float cov_ve_vn = 0.0f;

  bool valid_velocity() const {
    return std::isfinite(var_ve) && var_ve > 0.0f && std::isfinite(var_vn) &&
           var_vn > 0.0f;
  }
  double speed() const { return std::hypot(double(v_e), double(v_n)); }
  double heading() const { return std::atan2(double(v_n), double(v_e)); }
};

/// A cell known to be unknown: neutral evidence, no velocity.
Cell unknown_cell();

/// P_O = 0.5*m_occ + 0.5*(1 - m_free).
double occupancy_probability(const Cell& cell);

struct CellIndex {
  int col = 0;
  int row = 0;
  int t = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// One time slice of the stack. Channels are stored as dense planes
/// indexed (row, col) = (north, east); cell (0,0) covers the square
/// [origin, origin + cell_size) in world coordinates.
struct GridSlice {
  int width = 0;
  int height = 0;
  double cell_size = 0.15;
  double origin_e = 0.0;
  double origin_n = 0.0;
  double timestamp = 0.0;

  Eigen::ArrayXXf m_occ, m_free, v_e, v_n, var_ve, var_vn, cov_ve_vn;

  GridSlice() = default;
  GridSlice(int w, int h, double cs);

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  Cell at(int col, int row) const;
  void set(int col, int row, const Cell& c);

  double po(int col, int row) const {
    return 0.5 * double(m_occ(row, col)) + 0.5 * (1.0 - double(m_free(row, col)));
  }
  /// P_O with out-of-bounds treated as unknown (0.5).
  double po_or_unknown(int col, int row) const {
    return in_bounds(col, row) ? po(col, row) : 0.5;
  }

  Vec2 origin() const { return {origin_e, origin_n}; }
  Vec2 cell_center(int col, int row) const {
    return {origin_e + (col + 0.5) * cell_size,
            origin_n + (row + 0.5) * cell_size};
  }
  /// Ego position convention: the grid window is ego-centered.
  Vec2 ego_position() const {
    return {origin_e + 0.5 * width * cell_size,
            origin_n + 0.5 * height * cell_size};
  }

  Eigen::ArrayXXf occupancy_plane() const {
    return 0.5f * m_occ + 0.5f * (1.0f - m_free);
  }
};

/// Converts a world point to a cell index of `slice`; empty when the
/// point falls outside the grid window.
std::optional<CellIndex> world_to_index(const GridSlice& slice, double e,
                                        double n);

/// World coordinates of a cell's center.
Vec2 index_to_world_center(const GridSlice& slice, int col, int row);

/// Ego-motion-aligned grid stack. Slices share cell_size and sit on a
/// common world lattice; origins differ per slice with the ego motion.
/// Immutable after construction by convention.
struct Emags {
  std::vector<GridSlice> slices;
  double dt = 0.1;

  int slice_count() const { return static_cast<int>(slices.size()); }
  bool empty() const { return slices.empty(); }
};

struct EgoPose {
  double e = 0.0;
  double n = 0.0;
};

/// A DOGMa snapshot before alignment: grid origin is expressed relative
/// to the ego position at the snapshot's timestamp.
struct Snapshot {
  GridSlice grid;  // origin_e/origin_n hold the local offset from the ego
  EgoPose ego;
};

/// Aligns snapshots into one fixed world frame. Each slice origin
/// becomes ego + local offset, snapped to whole cells so that static
/// world content lands on identical lattice cells in every slice.
/// Throws std::invalid_argument on non-monotone timestamps or mixed
/// cell sizes.
Emags align_snapshots(std::vector<Snapshot> snapshots);

}  // namespace emags
