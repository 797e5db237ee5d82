#pragma once

#include <string>
#include <vector>

#include "emags/labels.hpp"

namespace emags {

struct ActorMetrics {
  int actor = 0;
  int visible_frames = 0;   // truth frames with visibility >= threshold
  int matched_frames = 0;
  double matched_fraction = 0.0;
  double mean_iou = 0.0;        // over matched frames
  double mean_width_error = 0.0;   // meters, over matched frames
  double mean_length_error = 0.0;
  int id_switches = 0;
};

struct EvalReport {
  std::vector<ActorMetrics> actors;
  int label_track_count = 0;
  int truth_actor_count = 0;
  double iou_threshold = 0.3;
  double visibility_threshold = 0.5;
};

/// Greedy per-frame assignment between label rectangles and truth boxes
/// by descending IoU; pairs below iou_threshold stay unmatched. Truth
/// frames below visibility_threshold are excluded from the denominator.
EvalReport evaluate(const std::vector<LabelRecord>& labels,
                    const GroundTruth& truth, double iou_threshold = 0.3,
                    double visibility_threshold = 0.5);

std::string report_to_json(const EvalReport& report);

}  // namespace emags
