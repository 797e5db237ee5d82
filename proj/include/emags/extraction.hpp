#pragma once

#include <optional>
#include <span>
#include <vector>

#include "emags/config.hpp"
#include "emags/geometry.hpp"
#include "emags/grid.hpp"
#include "emags/preprocess.hpp"
#include "emags/velocity_profile.hpp"

namespace emags {

/// A connected component of cells within one slice (the object-cell
/// hypothesis). Cells are kept sorted row-major; centroid is the
/// occupancy-weighted center in world meters.
struct Blob {
  int t = 0;
  std::vector<CellIndex> cells;
  Vec2 centroid{0.0, 0.0};

  int size() const { return static_cast<int>(cells.size()); }
  bool empty() const { return cells.empty(); }
  bool contains(const CellIndex& idx) const;
};

Blob make_blob(int t, std::vector<CellIndex> cells, const GridSlice& slice);

struct PoStats {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
};
PoStats blob_po_stats(const Blob& blob, const GridSlice& slice);

/// One labeled pose. `width`/`length` are the current best object
/// dimensions; `observed_*` the reduced blob rectangle extents actually
/// seen at this step. The reference point anchors the object rectangle
/// at corner `ref_corner` (OrientedRect corner numbering).
struct ObjectPose {
  int t = 0;
  double timestamp = 0.0;
  Vec2 ref_point{0.0, 0.0};
  int ref_corner = 0;
  Vec2 center{0.0, 0.0};
  double orientation = 0.0;
  double width = 0.0;
  double length = 0.0;
  double observed_width = 0.0;
  double observed_length = 0.0;
  double speed = 0.0;  // profile speed at this step
  bool coasted = false;

  OrientedRect rect() const {
    return {center, orientation, length, width};
  }
};

/// Places an object rectangle of the given dimensions so that its
/// `ref_corner` coincides with `ref_point`.
Vec2 rect_center_from_corner(const Vec2& ref_point, int ref_corner, double phi,
                             double length, double width);

/// Component search starting points, ranked by ascending loss.
struct SearchSeeds {
  int t = 0;
  std::vector<CellIndex> seeds;
  bool empty() const { return seeds.empty(); }
};

/// Constant-velocity prediction of both the full object rectangle and
/// the previously visible blob, dilated by the velocity uncertainty.
struct PredictedRegions {
  int t = 0;                    // target slice
  OrientedRect object_region;   // translated + dilated object rectangle
  std::vector<CellIndex> blob_cells;  // translated + dilated silhouette
  Vec2 blob_center{0.0, 0.0};   // predicted blob centroid, world
  double cell_size = 0.15;

  double silhouette_area_m2() const {
    return static_cast<double>(blob_cells.size()) * cell_size * cell_size;
  }
};

PredictedRegions predict_silhouette(const ObjectPose& pose,
                                    const VelocityProfile& profile,
                                    const Blob& prev_blob,
                                    const GridSlice& prev_slice, double dt,
                                    int direction, const GridSlice& target,
                                    const PipelineConfig& cfg);

/// Loss-ranked starting points within the predicted silhouette, capped
/// at one per seed_area_m2 of silhouette area with a minimum spacing of
/// sqrt(seed_area_m2) between seeds. An empty result signals a lost or
/// occluded step.
SearchSeeds select_search_seeds(const PredictedRegions& regions,
                                const VelocityProfile& prev_profile,
                                const GridSlice& slice,
                                const PipelineConfig& cfg);

/// Occupancy threshold for the component search: seed-mean P_O minus a
/// band_sigma band, floored at occupancy_floor. The band std comes from
/// the previous blob when known and is never narrower than 5% of the
/// seed mean, so the lower cut stays at or below 0.9 * mean.
double component_occupancy_threshold(double seed_mean_po,
                                     std::optional<double> prev_po_std,
                                     const PipelineConfig& cfg);

/// Flood fill from the seeds. First-visited in-bounds neighbors at or
/// above the occupancy threshold join the component; of those, only
/// cells off the border mask that match the velocity profile (when one
/// is given) continue the expansion, so the result is inner matching
/// points plus at most one layer of boundary points. Seeds always
/// belong and always expand.
Blob connected_component_search(const SearchSeeds& seeds,
                                const BorderMask& border,
                                const VelocityProfile* profile,
                                const GridSlice& slice, double occ_threshold,
                                double band);

/// Blob shrinking: the top n_prev cells by combined occupancy and
/// orientation-agreement rank are presumed inliers; cells outside a
/// band_sigma band of the inlier statistics (occupancy, heading, speed)
/// are dropped. Bands are clamped below by the profile's expected
/// per-cell spread, and the occupancy cut never rises above
/// 0.9 * max P_O over the blob. Never returns an empty blob.
Blob remove_outliers(const Blob& first_blob, int n_prev,
                     const VelocityProfile& profile, const GridSlice& slice,
                     const PipelineConfig& cfg);

struct BlobPolygon {
  OrientedRect rect;   // minimum bounding rectangle at the given heading
  Vec2 ref_point{0.0, 0.0};
  int ref_corner = 0;
};

/// Rectangle around the blob at heading `phi`, padded by half a cell per
/// side. The reference point is the corner with lexicographically least
/// (line-of-sight occlusion toward the ego, distance to the ego).
BlobPolygon fit_blob_polygon(const Blob& blob, double phi, const Vec2& ego,
                             const GridSlice& slice);

struct Extent {
  double width = 0.0;
  double length = 0.0;
};

/// Robust object dimensions from the per-step observed extents: the
/// dim_percentile (default 90th) of each component, so a 10% share of
/// oversized outlier observations cannot inflate the estimate.
Extent update_dimensions(std::span<const Extent> history, double percentile);

enum class InitStatus { ok, rejected_prerequisite, rejected_degenerate };

struct InitResult {
  InitStatus status = InitStatus::rejected_degenerate;
  Blob blob;
  VelocityProfile profile;
  ObjectPose pose;
};

/// Coarse-to-fine object initialization from an init point: component
/// search gated by occupancy and border only, profile from it, a second
/// search with velocity gating, and the final profile. The init cell
/// must carry a valid velocity with per-axis variance below
/// init_max_variance.
InitResult init_object(const GridSlice& slice, const BorderMask& border,
                       const InitPoint& p, const PipelineConfig& cfg);

}  // namespace emags
