#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "emags/config.hpp"
#include "emags/grid.hpp"

namespace emags {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-slice flags marking spatial occupancy inflections. Bounds the
/// connected component search.
struct BorderMask {
  BoolGrid mask;  // (row, col), slice-local

  bool at(int col, int row) const { return mask(row, col); }
  int count() const { return static_cast<int>(mask.count()); }
};

/// A cluster-center cell with a temporal traversal signature; spawns
/// extraction attempts. score = supporting cluster size in cells.
struct InitPoint {
  CellIndex index;
  double score = 0.0;
};

/// Smoothed P_O(E,N,t) over the union lattice of all slice windows.
/// Cells not covered by a slice carry the unknown value 0.5.
struct PoVolume {
  int width = 0;   // union lattice extent, east
  int height = 0;  // union lattice extent, north
  Vec2 origin{0.0, 0.0};
  double cell_size = 0.15;
  int slice_width = 0;
  int slice_height = 0;
  std::vector<Eigen::ArrayXXf> planes;     // one (height x width) per slice
  std::vector<GridCellRef> window_offset;  // slice (0,0) in union lattice

  float at(int t, int ucol, int urow) const { return planes[t](urow, ucol); }
  /// Smoothed P_O addressed in slice-local coordinates.
  float at_slice(int t, int col, int row) const {
    return planes[t](row + window_offset[t].row, col + window_offset[t].col);
  }
};

struct TimeInterval {
  int t_rise = 0;
  int t_fall = 0;  // inclusive
  bool contains(int t) const { return t >= t_rise && t <= t_fall; }
};

/// Per union-lattice cell, the maximal intervals during which the cell
/// is traversed by a moving object.
struct TraversalMap {
  int width = 0;
  int height = 0;
  Vec2 origin{0.0, 0.0};
  double cell_size = 0.15;
  std::vector<std::vector<TimeInterval>> intervals;  // row-major

  const std::vector<TimeInterval>& cell(int ucol, int urow) const {
    return intervals[static_cast<size_t>(urow) * width + ucol];
  }
};

/// 3D Gaussian smoothing of the P_O field. Sigmas in cells and slices;
/// zero sigma falls back to the raw field along that dimension.
PoVolume smooth_3d(const Emags& emags, double sigma_spatial,
                   double sigma_temporal, int jobs = 1);

/// Marks cells whose spatial gradient magnitude clears an Otsu-selected
/// threshold and whose second derivative changes sign along the gradient
/// direction (inflections). One mask per slice, slice-local coordinates.
std::vector<BorderMask> detect_borders(const PoVolume& volume, int jobs = 1);

/// Rise-then-fall detection on each cell's temporal occupancy profile.
/// Profiles with peak-to-peak amplitude below `min_amplitude` yield no
/// intervals; the threshold is the profile's min/max midpoint.
TraversalMap detect_traversals(const PoVolume& volume, double min_amplitude);

/// Groups traversal-active cells of each slice into 8-connected clusters
/// bounded by the border mask and emits each cluster's occupancy-weighted
/// centroid cell. Clusters below min_cluster_cells are dropped.
std::vector<std::vector<InitPoint>> cluster_init_points(
    const TraversalMap& traversals, const std::vector<BorderMask>& borders,
    const PoVolume& volume, int min_cluster_cells);

struct Preprocessed {
  PoVolume volume;
  std::vector<BorderMask> borders;
  std::vector<std::vector<InitPoint>> init_points;  // per slice

  int total_init_points() const {
    size_t n = 0;
    for (const auto& pts : init_points) n += pts.size();
    return static_cast<int>(n);
  }
};

Preprocessed preprocess_all(const Emags& emags, const PipelineConfig& cfg);

/// Debug dump: one PGM per slice with the border mask and init points
/// drawn over the occupancy background.
void dump_preprocess_pgm(const Preprocessed& pre, const Emags& emags,
                         const std::string& dir);

}  // namespace emags
