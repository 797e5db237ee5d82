#pragma once

#include <string>
#include <vector>

#include "emags/config.hpp"
#include "emags/extraction.hpp"

namespace emags {

enum class TrackStatus { active, completed, discarded };

/// A fully traced object: contiguous per-slice poses plus the refined
/// global dimensions.
struct ObjectTrack {
  int id = 0;
  std::vector<ObjectPose> poses;  // ascending t, contiguous
  double final_width = 0.0;
  double final_length = 0.0;
  TrackStatus status = TrackStatus::active;
  std::string note;

  int first_t() const { return poses.empty() ? 0 : poses.front().t; }
  int last_t() const { return poses.empty() ? -1 : poses.back().t; }
  const ObjectPose* pose_at(int t) const;
};

/// Building footprint in the shared world frame (meters, pre-projected).
struct BuildingPolygon {
  std::vector<Vec2> vertices;  // closed ring, >= 3 vertices
  std::string name;
};

/// Parses Polygon features from a GeoJSON file. Coordinates are taken
/// as-is (meters in the grid frame).
std::vector<BuildingPolygon> load_buildings_geojson(const std::string& path);

struct ValidationResult {
  bool keep = true;
  std::string reason;  // set when discarded
};

/// Trajectory-level plausibility: size, aspect ratio, permanent building
/// traversal, static trajectories, and center smoothness.
ValidationResult validate_track(const ObjectTrack& track,
                                const std::vector<BuildingPolygon>& buildings,
                                const PipelineConfig& cfg);

/// Linearly interpolates the orientation across standing intervals
/// (per-pose speed below standing_speed_post); standing stretches at a
/// trace end hold the nearest moving orientation.
ObjectTrack correct_standing_orientation(ObjectTrack track,
                                         const PipelineConfig& cfg);

/// Centered moving average on centers, circular moving average on
/// orientations; dimensions and timestamps untouched. Endpoints use
/// shrunken windows. window <= 1 is the identity.
ObjectTrack smooth_trajectory(ObjectTrack track, int window);

}  // namespace emags
