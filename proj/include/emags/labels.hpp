#pragma once

#include <string>
#include <vector>

#include "emags/postprocess.hpp"
#include "emags/synth.hpp"

namespace emags {

/// One output row per (track, slice). Serialized as JSON lines.
struct LabelRecord {
  int track_id = 0;
  int t = 0;
  double timestamp = 0.0;
  double e = 0.0;
  double n = 0.0;
  double phi = 0.0;
  double width = 0.0;
  double length = 0.0;
  double obs_width = 0.0;
  double obs_length = 0.0;
  std::vector<std::string> flags;

  OrientedRect rect() const { return {{e, n}, phi, length, width}; }
};

std::vector<LabelRecord> tracks_to_records(const std::vector<ObjectTrack>& tracks);

void write_labels_jsonl(const std::vector<LabelRecord>& records,
                        const std::string& path);
std::vector<LabelRecord> read_labels_jsonl(const std::string& path);

void write_truth_jsonl(const GroundTruth& truth, const std::string& path);
GroundTruth read_truth_jsonl(const std::string& path);

}  // namespace emags
