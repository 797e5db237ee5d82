#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emags/io.hpp"
#include "emags/synth.hpp"

using namespace emags;

namespace {

Scenario basic_scenario() {
  Scenario sc;
  sc.duration = 10;
  sc.grid_width = 80;
  sc.grid_height = 80;
  sc.cell_size = 0.15;
  sc.dt = 0.1;
  sc.noise.velocity_std = 0.1;
  return sc;
}

ActorSpec straight_actor(double width, double length, Vec2 from, Vec2 to,
                         double t0, double t1) {
  ActorSpec a;
  a.width = width;
  a.length = length;
  a.waypoints = {{t0, from}, {t1, to}};
  return a;
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty scenario renders free space only") {
  const auto [emags, truth] = generate(basic_scenario(), 1);
  REQUIRE(emags.slice_count() == 10);
  CHECK(truth.boxes.empty());
  const GridSlice& s = emags.slices[0];
  int free_dominant = 0;
  for (int r = 0; r < s.height; ++r)
    for (int c = 0; c < s.width; ++c)
      if (s.at(c, r).m_free > 0.5f) ++free_dominant;
  CHECK(free_dominant == s.width * s.height);
}

TEST_CASE("wall cells stay put, moving box translates") {
  Scenario sc = basic_scenario();
  sc.duration = 8;
  WallSpec wall;
  wall.points = {{-4.0, 3.0}, {4.0, 3.0}};
  wall.thickness = 0.3;
  sc.walls.push_back(wall);
  // 1.5 m/s east across the grid center.
  sc.actors.push_back(straight_actor(0.6, 0.9, {-3.0, -1.0}, {3.0, -1.0}, 0, 40));

  const auto [emags, truth] = generate(sc, 7);

  // Wall: identical world-position occupancy in every slice.
  for (const GridSlice& s : emags.slices) {
    const auto idx = world_to_index(s, 0.0, 3.0);
    REQUIRE(idx.has_value());
    CHECK(s.po(idx->col, idx->row) > 0.85);
    const Cell wc = s.at(idx->col, idx->row);
    CHECK(wc.valid_velocity());
    CHECK(wc.speed() == doctest::Approx(0.0));
  }

  // Box: center follows the waypoint kinematics; rendered cells move with it.
  REQUIRE(truth.boxes.size() == 8);
  const double expected_speed = 6.0 / (40.0 * 0.1);
  for (int t = 1; t < 8; ++t) {
    const Vec2 d = truth.boxes[t].center - truth.boxes[t - 1].center;
    CHECK(d.x() == doctest::Approx(expected_speed * 0.1).epsilon(1e-9));
    CHECK(d.y() == doctest::Approx(0.0));
  }
  for (const TruthBox& b : truth.boxes) {
    const GridSlice& s = emags.slices[b.t];
    const auto idx = world_to_index(s, b.center.x(), b.center.y());
    REQUIRE(idx.has_value());
    CHECK(s.po(idx->col, idx->row) > 0.85);
    const Cell bc = s.at(idx->col, idx->row);
    REQUIRE(bc.valid_velocity());
    CHECK(bc.v_e == doctest::Approx(expected_speed).epsilon(0.5));
    CHECK(b.visibility > 0.9);
  }
}

TEST_CASE("occluder shadows the box while it passes behind") {
  Scenario sc = basic_scenario();
  sc.duration = 20;
  // Box crosses east at n=2; ego sits at the grid center (0,0).
  sc.actors.push_back(straight_actor(0.6, 0.9, {-3.0, 2.0}, {3.0, 2.0}, 0, 19));
  // Opaque segment north of the ego covering e in [-1, 1] at n=1.
  sc.occluders.push_back({{-1.0, 1.0}, {1.0, 1.0}});

  const auto [emags, truth] = generate(sc, 3);
  REQUIRE(truth.boxes.size() == 20);

  // Independent ray-cast oracle: box occluded when the ego-to-center
  // segment crosses the occluder span.
  int occluded_frames = 0;
  for (const TruthBox& b : truth.boxes) {
    const Vec2 ego = emags.slices[b.t].ego_position();
    const Vec2 c = b.center;
    // Parametric crossing of the n=1 line.
    const double f = (1.0 - ego.y()) / (c.y() - ego.y());
    const double e_at = ego.x() + f * (c.x() - ego.x());
    const bool behind = f > 0.0 && f < 1.0 && e_at >= -1.0 && e_at <= 1.0;
    if (behind) {
      ++occluded_frames;
      CHECK(b.visibility < 0.35);
    } else if (std::abs(c.x()) > 2.7) {
      // Clear of the projected shadow (span [-2, 2] at the box's range)
      // with a half-box margin.
      CHECK(b.visibility > 0.9);
    }
  }
  CHECK(occluded_frames >= 4);
}

TEST_CASE("generation is deterministic per (scenario, seed)") {
  Scenario sc = basic_scenario();
  sc.noise.flicker_prob = 0.01;
  sc.actors.push_back(straight_actor(0.6, 0.6, {-2.0, 0.0}, {2.0, 0.0}, 0, 9));

  namespace fs = std::filesystem;
  const std::string p1 = (fs::temp_directory_path() / "synth_a.emags").string();
  const std::string p2 = (fs::temp_directory_path() / "synth_b.emags").string();
  {
    const auto [e1, t1] = generate(sc, 99);
    write_emags(e1, p1);
    const auto [e2, t2] = generate(sc, 99);
    write_emags(e2, p2);
  }
  CHECK(file_bytes(p1) == file_bytes(p2));

  // A different seed changes the bytes (noise is actually injected).
  {
    const auto [e3, t3] = generate(sc, 100);
    write_emags(e3, p2);
  }
  CHECK(file_bytes(p1) != file_bytes(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("injected velocity noise matches the configured std within 10%") {
  Scenario sc = basic_scenario();
  sc.duration = 30;
  sc.noise.velocity_std = 0.2;
  sc.actors.push_back(straight_actor(1.5, 1.5, {-3.0, 0.0}, {3.0, 0.0}, 0, 29));

  const auto [emags, truth] = generate(sc, 11);
  std::vector<double> residuals;
  for (const TruthBox& b : truth.boxes) {
    const GridSlice& s = emags.slices[b.t];
    const double ve = 6.0 / (29.0 * 0.1);
    for (int r = 0; r < s.height; ++r) {
      for (int c = 0; c < s.width; ++c) {
        const Cell cell = s.at(c, r);
        if (!cell.valid_velocity()) continue;
        if (cell.speed() < 0.1) continue;  // skip walls
        residuals.push_back(double(cell.v_e) - ve);
        residuals.push_back(double(cell.v_n));
      }
    }
  }
  REQUIRE(residuals.size() >= 1000);
  double acc = 0.0;
  for (double r : residuals) acc += r * r;
  const double std = std::sqrt(acc / double(residuals.size()));
  CHECK(std == doctest::Approx(0.2).epsilon(0.10));
}

TEST_CASE("one truth box per in-bounds actor per slice") {
  Scenario sc = basic_scenario();
  sc.duration = 12;
  sc.actors.push_back(straight_actor(0.6, 0.6, {-2.0, 1.0}, {2.0, 1.0}, 0, 11));
  // Second actor starts far outside the 12 m window and stays there.
  sc.actors.push_back(straight_actor(0.6, 0.6, {50.0, 50.0}, {50.0, 50.0}, 0, 11));

  const auto [emags, truth] = generate(sc, 2);
  for (int t = 0; t < 12; ++t) {
    int count = 0;
    for (const TruthBox& b : truth.boxes)
      if (b.t == t) ++count;
    CHECK(count == 1);  // only the in-bounds actor
  }
}

TEST_CASE("convergence delay withholds velocity on fresh cells") {
  Scenario sc = basic_scenario();
  sc.duration = 12;
  sc.convergence_delay = 2;
  // Slow actor (1 m/s): each swept cell stays covered for ~9 slices, so
  // the trailing interior outlives the delay.
  sc.actors.push_back(straight_actor(0.9, 0.9, {-2.0, 0.0}, {2.0, 0.0}, 0, 40));

  const auto [emags, truth] = generate(sc, 5);
  // At t=0 every actor cell is fresh: no valid velocity anywhere inside.
  const GridSlice& s0 = emags.slices[0];
  const auto idx0 = world_to_index(s0, -2.0, 0.0);
  REQUIRE(idx0.has_value());
  CHECK_FALSE(s0.at(idx0->col, idx0->row).valid_velocity());
  // Later the trailing interior reports velocity.
  const GridSlice& s6 = emags.slices[6];
  const TruthBox* b6 = nullptr;
  for (const TruthBox& b : truth.boxes)
    if (b.t == 6 && b.actor == 0) b6 = &b;
  REQUIRE(b6 != nullptr);
  int valid = 0;
  const auto c6 = world_to_index(s6, b6->center.x(), b6->center.y());
  REQUIRE(c6.has_value());
  for (int dr = -2; dr <= 2; ++dr)
    for (int dc = -2; dc <= 2; ++dc)
      if (s6.in_bounds(c6->col + dc, c6->row + dr) &&
          s6.at(c6->col + dc, c6->row + dr).valid_velocity())
        ++valid;
  CHECK(valid > 0);
}

TEST_CASE("invalid scenarios are rejected") {
  Scenario sc = basic_scenario();
  sc.duration = 0;
  CHECK_THROWS_AS(generate(sc, 1), std::invalid_argument);

  Scenario tiny = basic_scenario();
  tiny.actors.push_back(straight_actor(0.05, 0.05, {0, 0}, {1, 1}, 0, 5));
  CHECK_THROWS_AS(generate(tiny, 1), std::invalid_argument);
}

TEST_CASE("scenario JSON parsing") {
  const std::string text = R"({
    "duration": 5,
    "grid": {"width": 64, "height": 48, "cell_size": 0.2, "dt": 0.05},
    "ego": {"start": [1.0, 2.0], "velocity": [0.5, 0.0]},
    "actors": [
      {"width": 0.6, "length": 1.2,
       "waypoints": [{"t": 0, "e": -1, "n": 0}, {"t": 4, "e": 1, "n": 0}]}
    ],
    "walls": [{"points": [[0, 3], [2, 3]], "thickness": 0.4}],
    "occluders": [{"from": [0, 1], "to": [1, 1]}],
    "noise": {"flicker_prob": 0.01, "velocity_std": 0.05,
              "variance_range": [0.001, 0.5]},
    "convergence_delay": 1,
    "self_occlusion": true,
    "penetration_depth": 1.5
  })";
  const Scenario sc = parse_scenario_json(text);
  CHECK(sc.duration == 5);
  CHECK(sc.grid_width == 64);
  CHECK(sc.cell_size == doctest::Approx(0.2));
  CHECK(sc.ego_velocity.x() == doctest::Approx(0.5));
  REQUIRE(sc.actors.size() == 1);
  CHECK(sc.actors[0].length == doctest::Approx(1.2));
  REQUIRE(sc.walls.size() == 1);
  CHECK(sc.walls[0].thickness == doctest::Approx(0.4));
  REQUIRE(sc.occluders.size() == 1);
  CHECK(sc.noise.variance_hi == doctest::Approx(0.5));
  CHECK(sc.convergence_delay == 1);
  CHECK(sc.self_occlusion);
  CHECK(sc.penetration_depth == doctest::Approx(1.5));
}
