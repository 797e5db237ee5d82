#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emags/config.hpp"
#include "emags/extraction.hpp"
#include "emags/postprocess.hpp"
#include "emags/preprocess.hpp"

namespace emags {

/// Per-slice sets of remaining init points. Points are only ever
/// removed, never re-added, which guarantees termination.
struct InitPointStack {
  std::vector<std::vector<InitPoint>> remaining;  // per slice

  explicit InitPointStack(std::vector<std::vector<InitPoint>> points = {})
      : remaining(std::move(points)) {}

  int size() const;
  bool empty() const { return size() == 0; }
  /// Pop order: slice-major, then score-descending, then row-major.
  std::optional<InitPoint> pop();
};

/// Removes every remaining init point whose cell lies inside the
/// track's object rectangle (dilated by one cell) at the point's slice.
void remove_covered_init_points(const ObjectTrack& track, InitPointStack& stack,
                                const Emags& emags);

struct PlausibilityResult {
  bool pass = true;
  std::string reason;
};

/// Single-step sanity gates: blob area jump, orientation jump at speed,
/// and centroid deviation from the prediction. The area gate is skipped
/// on reacquisition after coasting, where a size discontinuity is
/// expected.
PlausibilityResult plausibility_check(const Blob& reduced, int prev_blob_size,
                                      const VelocityProfile& new_profile,
                                      const VelocityProfile& prev_profile,
                                      const Vec2& predicted_center,
                                      double dt_eff, double cell_size,
                                      bool after_coast,
                                      const PipelineConfig& cfg);

/// Last fully observed step of a trace; predictions while coasting
/// extend from here with a growing effective dt.
struct TraceState {
  ObjectPose pose;
  VelocityProfile profile;
  Blob blob;  // reduced blob
  double confident_phi = 0.0;
};

struct TraceDraft {
  std::vector<ObjectPose> poses;  // visit order; sorted by the caller
  std::vector<Extent> extents;    // observed extents, both phases
  Extent dims;                    // current best dimensions
};

/// Extends the trace from `start` in the given direction (+1 forward,
/// -1 backward) until the sequence ends or the object becomes
/// implausible; returns the stop reason. Appends poses (excluding the
/// start pose) to the draft.
std::string trace_direction(const TraceState& start, int direction,
                            const Emags& emags, const Preprocessed& pre,
                            const PipelineConfig& cfg, TraceDraft& draft);

struct RunSummary {
  int initial_init_points = 0;
  int initializations_attempted = 0;
  int init_rejected_prerequisite = 0;
  int init_rejected_degenerate = 0;
  int tracks_completed = 0;
  int tracks_discarded = 0;
  std::vector<std::string> log;  // one line per processed object
  std::vector<std::string> discard_reasons;
};

/// Drains the init-point stack: initializes, traces forward then
/// backward with the refined dimensions, post-processes, and removes
/// covered init points. Deterministic for a fixed input.
std::vector<ObjectTrack> run_all(const Emags& emags, const Preprocessed& pre,
                                 const std::vector<BuildingPolygon>& buildings,
                                 const PipelineConfig& cfg,
                                 RunSummary* summary = nullptr);

}  // namespace emags
