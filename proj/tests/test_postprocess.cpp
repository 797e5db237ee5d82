#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emags/postprocess.hpp"

using namespace emags;

namespace {

ObjectTrack make_track(const std::vector<Vec2>& centers, double width,
                       double length, double speed = 1.5, double phi = 0.0,
                       double dt = 0.1) {
  ObjectTrack track;
  track.final_width = width;
  track.final_length = length;
  for (size_t i = 0; i < centers.size(); ++i) {
    ObjectPose p;
    p.t = static_cast<int>(i);
    p.timestamp = dt * double(i);
    p.center = centers[i];
    p.orientation = phi;
    p.width = width;
    p.length = length;
    p.speed = speed;
    p.ref_point = p.rect().corner(0);
    track.poses.push_back(p);
  }
  track.status = TrackStatus::completed;
  return track;
}

std::vector<Vec2> straight_path(int n, Vec2 start, Vec2 step) {
  std::vector<Vec2> out;
  for (int i = 0; i < n; ++i) out.push_back(start + double(i) * step);
  return out;
}

BuildingPolygon square_building(Vec2 lo, double side) {
  BuildingPolygon b;
  b.vertices = {lo, lo + Vec2{side, 0}, lo + Vec2{side, side}, lo + Vec2{0, side}};
  return b;
}

}  // namespace

TEST_CASE("validate_track keeps a normal pedestrian") {
  // 0.6 x 0.6 m, 15 m of path at 1.5 m/s.
  const auto track = make_track(straight_path(101, {0, 0}, {0.15, 0}), 0.6, 0.6);
  PipelineConfig cfg;
  const auto res = validate_track(track, {}, cfg);
  CHECK(res.keep);
}

TEST_CASE("validate_track size and aspect limits") {
  PipelineConfig cfg;
  SUBCASE("too long") {
    const auto t = make_track(straight_path(40, {0, 0}, {0.3, 0}), 3.0, 22.0);
    CHECK_FALSE(validate_track(t, {}, cfg).keep);
    CHECK(validate_track(t, {}, cfg).reason == "size");
  }
  SUBCASE("too wide") {
    const auto t = make_track(straight_path(40, {0, 0}, {0.3, 0}), 4.5, 6.0);
    CHECK(validate_track(t, {}, cfg).reason == "size");
  }
  SUBCASE("too small") {
    const auto t = make_track(straight_path(40, {0, 0}, {0.3, 0}), 0.1, 0.1);
    CHECK(validate_track(t, {}, cfg).reason == "size");
  }
  SUBCASE("extreme aspect ratio") {
    const auto t = make_track(straight_path(40, {0, 0}, {0.3, 0}), 0.4, 3.6);
    CHECK(validate_track(t, {}, cfg).reason == "aspect");
  }
}

TEST_CASE("validate_track building rules") {
  PipelineConfig cfg;
  const auto buildings = std::vector<BuildingPolygon>{
      square_building({-1.0, -1.0}, 10.0)};

  SUBCASE("a track mostly inside a building is a mirror artifact") {
    // 40 poses, 32 inside the building.
    auto centers = straight_path(40, {0.0, 0.5}, {0.2, 0.0});
    const auto t = make_track(centers, 0.6, 1.0);
    const auto res = validate_track(t, buildings, cfg);
    CHECK_FALSE(res.keep);
    CHECK(res.reason == "building");
  }
  SUBCASE("clipping a building corner briefly is tolerated") {
    // A small kiosk; the path crosses it for 2-3 of 40 poses.
    const auto kiosk = std::vector<BuildingPolygon>{
        square_building({1.0, -0.25}, 0.5)};
    auto centers = straight_path(40, {-2.95, 0.0}, {0.2, 0.0});
    int inside = 0;
    for (const auto& c : centers)
      if (c.x() >= 1.0 && c.x() <= 1.5) ++inside;
    REQUIRE(inside <= 3);
    REQUIRE(inside >= 1);
    const auto t = make_track(centers, 0.6, 1.0);
    CHECK(validate_track(t, kiosk, cfg).keep);
  }
}

TEST_CASE("validate_track rejects static and erratic trajectories") {
  PipelineConfig cfg;
  SUBCASE("parked object") {
    const auto t = make_track(std::vector<Vec2>(50, Vec2{1.0, 1.0}), 0.6, 1.0, 0.0);
    const auto res = validate_track(t, {}, cfg);
    CHECK_FALSE(res.keep);
    CHECK(res.reason == "static");
  }
  SUBCASE("erratic jumps") {
    // Alternating +-0.9 m hops (6 cells): far beyond quantization noise.
    std::vector<Vec2> centers;
    for (int i = 0; i < 40; ++i)
      centers.push_back({0.2 * i, (i % 2) ? 0.9 : 0.0});
    const auto t = make_track(centers, 0.6, 1.0);
    const auto res = validate_track(t, {}, cfg);
    CHECK_FALSE(res.keep);
    CHECK(res.reason == "non-smooth");
  }
}

TEST_CASE("standing orientation correction") {
  PipelineConfig cfg;

  SUBCASE("no standing interval is the identity") {
    auto track = make_track(straight_path(10, {0, 0}, {0.2, 0}), 0.6, 1.0, 1.5, 0.3);
    const auto before = track.poses;
    track = correct_standing_orientation(std::move(track), cfg);
    for (size_t i = 0; i < before.size(); ++i)
      CHECK(track.poses[i].orientation == doctest::Approx(before[i].orientation));
  }

  SUBCASE("interior standing interval interpolates linearly") {
    auto track = make_track(straight_path(5, {0, 0}, {0.2, 0}), 0.6, 1.0);
    // poses 0 moving (phi 0), 1..3 standing, 4 moving (phi 0.2).
    track.poses[0].orientation = 0.0;
    track.poses[4].orientation = 0.2;
    for (int i = 1; i <= 3; ++i) {
      track.poses[i].speed = 0.1;
      track.poses[i].orientation = 2.0;  // garbage to be replaced
    }
    track = correct_standing_orientation(std::move(track), cfg);
    CHECK(track.poses[1].orientation == doctest::Approx(0.05));
    CHECK(track.poses[2].orientation == doctest::Approx(0.10));
    CHECK(track.poses[3].orientation == doctest::Approx(0.15));
    // Moving poses untouched.
    CHECK(track.poses[0].orientation == doctest::Approx(0.0));
    CHECK(track.poses[4].orientation == doctest::Approx(0.2));
  }

  SUBCASE("standing at the trace start holds the first moving heading") {
    auto track = make_track(straight_path(6, {0, 0}, {0.2, 0}), 0.6, 1.0);
    for (int i = 0; i < 3; ++i) {
      track.poses[i].speed = 0.0;
      track.poses[i].orientation = -2.0;
    }
    for (int i = 3; i < 6; ++i) track.poses[i].orientation = kPi / 4;
    track = correct_standing_orientation(std::move(track), cfg);
    for (int i = 0; i < 3; ++i)
      CHECK(track.poses[i].orientation == doctest::Approx(kPi / 4));
  }

  SUBCASE("interpolation takes the shortest angular path across the wrap") {
    auto track = make_track(straight_path(4, {0, 0}, {0.2, 0}), 0.6, 1.0);
    track.poses[0].orientation = kPi - 0.1;
    track.poses[3].orientation = -kPi + 0.1;
    for (int i = 1; i <= 2; ++i) track.poses[i].speed = 0.0;
    track = correct_standing_orientation(std::move(track), cfg);
    CHECK(circ_dist(track.poses[1].orientation, kPi - 0.1 + 0.2 / 3.0) <
          1e-9);
  }
}

TEST_CASE("trajectory smoothing") {
  SUBCASE("window 1 is the identity") {
    auto track = make_track(straight_path(8, {0, 0}, {0.2, 0.1}), 0.6, 1.0);
    const auto before = track.poses;
    track = smooth_trajectory(std::move(track), 1);
    for (size_t i = 0; i < before.size(); ++i)
      CHECK((track.poses[i].center - before[i].center).norm() == doctest::Approx(0.0));
  }

  SUBCASE("affine center sequences are fixed points") {
    auto track = make_track(straight_path(12, {1, 2}, {0.25, -0.05}), 0.6, 1.0);
    const auto before = track.poses;
    track = smooth_trajectory(std::move(track), 5);
    for (size_t i = 0; i < before.size(); ++i) {
      CHECK(track.poses[i].center.x() == doctest::Approx(before[i].center.x()));
      CHECK(track.poses[i].center.y() == doctest::Approx(before[i].center.y()));
      CHECK(track.poses[i].timestamp == before[i].timestamp);
      CHECK(track.poses[i].width == before[i].width);
      CHECK(track.poses[i].length == before[i].length);
    }
  }

  SUBCASE("alternating jitter is damped by at least 60%") {
    std::vector<Vec2> centers;
    for (int i = 0; i < 30; ++i)
      centers.push_back({0.2 * i, (i % 2) ? 0.15 : -0.15});
    auto track = make_track(centers, 0.6, 1.0);
    track = smooth_trajectory(std::move(track), 5);
    double max_dev = 0.0;
    for (int i = 2; i < 28; ++i)
      max_dev = std::max(max_dev, std::abs(track.poses[i].center.y()));
    CHECK(max_dev <= 0.4 * 0.15);
  }
}

TEST_CASE("GeoJSON building parsing") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "bld.geojson").string();
  {
    std::ofstream os(path);
    os << R"({"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"name":"hall"},
       "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,5],[0,5],[0,0]]]}},
      {"type":"Feature","properties":{},
       "geometry":{"type":"Point","coordinates":[1,1]}}
    ]})";
  }
  const auto buildings = load_buildings_geojson(path);
  REQUIRE(buildings.size() == 1);  // the point feature is skipped
  CHECK(buildings[0].name == "hall");
  CHECK(buildings[0].vertices.size() == 4);  // closing vertex dropped
  CHECK(point_in_polygon({5.0, 2.5}, buildings[0].vertices));
  CHECK_FALSE(point_in_polygon({11.0, 2.5}, buildings[0].vertices));
  std::remove(path.c_str());

  CHECK_THROWS(load_buildings_geojson("/nonexistent/path.geojson"));
}
