#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emags/grid.hpp"

namespace emags {

struct Waypoint {
  double t = 0.0;  // slice index (fractional allowed)
  Vec2 pos{0.0, 0.0};
};

/// A rigid box following piecewise-linear waypoints; heading follows the
/// motion direction. Before the first and after the last waypoint the
/// actor stands still.
struct ActorSpec {
  double width = 0.6;   // cross extent, meters
  double length = 0.6;  // along-heading extent, meters
  std::vector<Waypoint> waypoints;
};

struct WallSpec {
  std::vector<Vec2> points;  // polyline
  double thickness = 0.3;
};

struct OccluderSpec {
  Vec2 from{0.0, 0.0};
  Vec2 to{0.0, 0.0};
};

struct NoiseSpec {
  double flicker_prob = 0.0;    // per cell and slice
  double velocity_std = 0.1;    // injected per-axis noise, m/s
  double variance_lo = 1e-4;    // reported variance clamp range
  double variance_hi = 1.0;
};

struct Scenario {
  int duration = 1;  // slices
  int grid_width = 128;
  int grid_height = 128;
  double cell_size = 0.15;
  double dt = 0.1;
  Vec2 ego_start{0.0, 0.0};
  Vec2 ego_velocity{0.0, 0.0};
  std::vector<ActorSpec> actors;
  std::vector<WallSpec> walls;
  std::vector<OccluderSpec> occluders;
  NoiseSpec noise;
  int convergence_delay = 0;   // slices of invalid velocity on fresh cells
  bool self_occlusion = false;
  double penetration_depth = 2.5;  // visible depth into a box along a ray
};

struct TruthBox {
  int t = 0;
  int actor = 0;
  Vec2 center{0.0, 0.0};
  double phi = 0.0;
  double width = 0.0;
  double length = 0.0;
  double visibility = 0.0;  // visible fraction of the in-bounds footprint
};

struct GroundTruth {
  std::vector<TruthBox> boxes;
};

/// Parses the scenario JSON document; throws std::runtime_error with a
/// descriptive message on schema violations.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario_json(const std::string& json_text);

/// Renders the scenario into an aligned stack plus exact ground truth.
/// Deterministic: identical (scenario, seed) produce bit-identical
/// output. Throws std::invalid_argument on invariant violations.
std::pair<Emags, GroundTruth> generate(const Scenario& scenario, uint64_t seed);

/// Actor pose interpolation, exposed for tests.
Vec2 actor_position(const ActorSpec& actor, double t_slice, double dt);
Vec2 actor_velocity(const ActorSpec& actor, double t_slice, double dt);

}  // namespace emags
