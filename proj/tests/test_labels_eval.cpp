#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "emags/eval.hpp"
#include "emags/labels.hpp"

using namespace emags;

namespace {

GroundTruth simple_truth(int frames, Vec2 start, Vec2 step, double phi,
                         double width, double length, int actor = 0) {
  GroundTruth out;
  for (int t = 0; t < frames; ++t) {
    TruthBox b;
    b.t = t;
    b.actor = actor;
    b.center = start + double(t) * step;
    b.phi = phi;
    b.width = width;
    b.length = length;
    b.visibility = 1.0;
    out.boxes.push_back(b);
  }
  return out;
}

std::vector<LabelRecord> labels_from_truth(const GroundTruth& truth,
                                           Vec2 offset = {0.0, 0.0},
                                           int track_id = 1) {
  std::vector<LabelRecord> out;
  for (const TruthBox& b : truth.boxes) {
    LabelRecord r;
    r.track_id = track_id;
    r.t = b.t;
    r.timestamp = 0.1 * b.t;
    r.e = b.center.x() + offset.x();
    r.n = b.center.y() + offset.y();
    r.phi = b.phi;
    r.width = b.width;
    r.length = b.length;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("labels JSONL round trip") {
  GroundTruth truth = simple_truth(5, {1.0, 2.0}, {0.2, 0.0}, 0.3, 0.6, 1.2);
  auto labels = labels_from_truth(truth);
  labels[2].flags.push_back("coasted");

  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "labels.jsonl").string();
  write_labels_jsonl(labels, path);
  const auto back = read_labels_jsonl(path);
  REQUIRE(back.size() == labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    CHECK(back[i].track_id == labels[i].track_id);
    CHECK(back[i].t == labels[i].t);
    CHECK(back[i].e == labels[i].e);
    CHECK(back[i].phi == labels[i].phi);
    CHECK(back[i].flags == labels[i].flags);
  }
  std::remove(path.c_str());
}

TEST_CASE("truth JSONL round trip") {
  const GroundTruth truth = simple_truth(4, {0.0, 0.0}, {0.1, 0.1}, -1.0, 2.0, 4.5);
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "truth.jsonl").string();
  write_truth_jsonl(truth, path);
  const GroundTruth back = read_truth_jsonl(path);
  REQUIRE(back.boxes.size() == truth.boxes.size());
  CHECK(back.boxes[3].center.x() == doctest::Approx(0.3));
  CHECK(back.boxes[3].visibility == doctest::Approx(1.0));
  std::remove(path.c_str());
}

TEST_CASE("evaluate: perfect labels") {
  const GroundTruth truth = simple_truth(20, {0, 0}, {0.2, 0}, 0.0, 2.0, 4.5);
  const auto labels = labels_from_truth(truth);
  const EvalReport report = evaluate(labels, truth);
  REQUIRE(report.actors.size() == 1);
  CHECK(report.actors[0].matched_fraction == doctest::Approx(1.0));
  CHECK(report.actors[0].mean_iou == doctest::Approx(1.0));
  CHECK(report.actors[0].mean_width_error == doctest::Approx(0.0));
  CHECK(report.actors[0].mean_length_error == doctest::Approx(0.0));
  CHECK(report.actors[0].id_switches == 0);
}

TEST_CASE("evaluate: one-cell shift gives the closed-form IoU") {
  const GroundTruth truth = simple_truth(10, {0, 0}, {0.2, 0}, 0.0, 2.0, 4.5);
  // Shift along the length axis (east, phi = 0) by one 0.15 m cell.
  const auto labels = labels_from_truth(truth, {0.15, 0.0});
  const EvalReport report = evaluate(labels, truth);
  REQUIRE(report.actors.size() == 1);
  const double inter = (4.5 - 0.15) * 2.0;
  const double expected = inter / (2 * 4.5 * 2.0 - inter);
  CHECK(report.actors[0].mean_iou == doctest::Approx(expected).epsilon(1e-9));
  CHECK(report.actors[0].mean_iou == doctest::Approx(0.93).epsilon(0.01));
}

TEST_CASE("evaluate: empty labels match nothing") {
  const GroundTruth truth = simple_truth(10, {0, 0}, {0.2, 0}, 0.0, 0.6, 0.6);
  const EvalReport report = evaluate({}, truth);
  REQUIRE(report.actors.size() == 1);
  CHECK(report.actors[0].matched_fraction == doctest::Approx(0.0));
  CHECK(report.actors[0].visible_frames == 10);
}

TEST_CASE("evaluate: id switches are counted per actor") {
  const GroundTruth truth = simple_truth(10, {0, 0}, {0.2, 0}, 0.0, 2.0, 4.5);
  auto labels = labels_from_truth(truth);
  for (auto& r : labels)
    if (r.t >= 5) r.track_id = 2;
  const EvalReport report = evaluate(labels, truth);
  CHECK(report.actors[0].id_switches == 1);
  CHECK(report.label_track_count == 2);
}

TEST_CASE("evaluate: greedy assignment resolves contested frames") {
  // Two actors side by side; one label closer to actor 0.
  GroundTruth truth = simple_truth(5, {0, 0}, {0.2, 0}, 0.0, 2.0, 4.5, 0);
  const GroundTruth second = simple_truth(5, {0, 2.5}, {0.2, 0}, 0.0, 2.0, 4.5, 1);
  truth.boxes.insert(truth.boxes.end(), second.boxes.begin(), second.boxes.end());

  auto labels = labels_from_truth(simple_truth(5, {0, 0.4}, {0.2, 0}, 0.0, 2.0, 4.5));
  const EvalReport report = evaluate(labels, truth);
  REQUIRE(report.actors.size() == 2);
  CHECK(report.actors[0].matched_fraction == doctest::Approx(1.0));
  CHECK(report.actors[1].matched_fraction == doctest::Approx(0.0));
}

TEST_CASE("evaluate: low-visibility truth frames are excluded") {
  GroundTruth truth = simple_truth(10, {0, 0}, {0.2, 0}, 0.0, 2.0, 4.5);
  for (auto& b : truth.boxes)
    if (b.t % 2 == 0) b.visibility = 0.2;
  const auto labels = labels_from_truth(truth);
  const EvalReport report = evaluate(labels, truth);
  CHECK(report.actors[0].visible_frames == 5);
  CHECK(report.actors[0].matched_fraction == doctest::Approx(1.0));
}
