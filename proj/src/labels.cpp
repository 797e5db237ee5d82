#include "emags/labels.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace emags {

using nlohmann::json;

std::vector<LabelRecord> tracks_to_records(const std::vector<ObjectTrack>& tracks) {
  std::vector<LabelRecord> out;
  for (const ObjectTrack& track : tracks) {
    for (const ObjectPose& p : track.poses) {
      LabelRecord r;
      r.track_id = track.id;
      r.t = p.t;
      r.timestamp = p.timestamp;
      r.e = p.center.x();
      r.n = p.center.y();
      r.phi = p.orientation;
      r.width = p.width;
      r.length = p.length;
      r.obs_width = p.observed_width;
      r.obs_length = p.observed_length;
      if (p.coasted) r.flags.push_back("coasted");
      out.push_back(std::move(r));
    }
  }
  return out;
}

void write_labels_jsonl(const std::vector<LabelRecord>& records,
                        const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const LabelRecord& r : records) {
    json j{{"track", r.track_id}, {"t", r.t},          {"ts", r.timestamp},
           {"e", r.e},            {"n", r.n},          {"phi", r.phi},
           {"width", r.width},    {"length", r.length}, {"obs_width", r.obs_width},
           {"obs_length", r.obs_length}};
    if (!r.flags.empty()) j["flags"] = r.flags;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<LabelRecord> read_labels_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open labels: " + path);
  std::vector<LabelRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("labels line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    LabelRecord r;
    r.track_id = j.at("track").get<int>();
    r.t = j.at("t").get<int>();
    r.timestamp = j.at("ts").get<double>();
    r.e = j.at("e").get<double>();
    r.n = j.at("n").get<double>();
    r.phi = j.at("phi").get<double>();
    r.width = j.at("width").get<double>();
    r.length = j.at("length").get<double>();
    r.obs_width = j.value("obs_width", 0.0);
    r.obs_length = j.value("obs_length", 0.0);
    if (j.contains("flags"))
      r.flags = j.at("flags").get<std::vector<std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

void write_truth_jsonl(const GroundTruth& truth, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (const TruthBox& b : truth.boxes) {
    json j{{"t", b.t},           {"actor", b.actor},   {"e", b.center.x()},
           {"n", b.center.y()},  {"phi", b.phi},       {"width", b.width},
           {"length", b.length}, {"visibility", b.visibility}};
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

GroundTruth read_truth_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open truth: " + path);
  GroundTruth out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("truth line " + std::to_string(lineno) + ": " +
                               e.what());
    }
    TruthBox b;
    b.t = j.at("t").get<int>();
    b.actor = j.at("actor").get<int>();
    b.center = {j.at("e").get<double>(), j.at("n").get<double>()};
    b.phi = j.at("phi").get<double>();
    b.width = j.at("width").get<double>();
    b.length = j.at("length").get<double>();
    b.visibility = j.at("visibility").get<double>();
    out.boxes.push_back(b);
  }
  return out;
}

}  // namespace emags
