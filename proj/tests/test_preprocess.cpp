#include <doctest.h>

#include <deque>
#include <set>

#include "emags/preprocess.hpp"
#include "emags/synth.hpp"
#include "oracles.hpp"

using namespace emags;

namespace {

void fill_po(GridSlice& s, float po) {
  s.m_occ.setConstant(po);
  s.m_free.setConstant(1.0f - po);
}

void paint_po(GridSlice& s, int col0, int row0, int w, int h, float po) {
  for (int r = row0; r < row0 + h; ++r) {
    for (int c = col0; c < col0 + w; ++c) {
      s.m_occ(r, c) = po;
      s.m_free(r, c) = 1.0f - po;
    }
  }
}

Emags uniform_emags(int W, int H, int T, float po) {
  Emags e;
  e.dt = 0.1;
  for (int t = 0; t < T; ++t) {
    GridSlice s(W, H, 0.15);
    s.timestamp = 0.1 * t;
    fill_po(s, po);
    e.slices.push_back(std::move(s));
  }
  return e;
}

// Reachability over non-border cells (8-connected).
std::set<std::pair<int, int>> flood_non_border(const BorderMask& bm, int c0,
                                               int r0) {
  const int H = static_cast<int>(bm.mask.rows());
  const int W = static_cast<int>(bm.mask.cols());
  std::set<std::pair<int, int>> seen;
  if (bm.at(c0, r0)) return seen;
  std::deque<std::pair<int, int>> q{{c0, r0}};
  seen.insert({c0, r0});
  while (!q.empty()) {
    auto [c, r] = q.front();
    q.pop_front();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int nc = c + dc, nr = r + dr;
        if (nc < 0 || nc >= W || nr < 0 || nr >= H) continue;
        if (seen.count({nc, nr}) || bm.at(nc, nr)) continue;
        seen.insert({nc, nr});
        q.push_back({nc, nr});
      }
    }
  }
  return seen;
}

}  // namespace

TEST_CASE("smooth_3d with zero sigmas is the raw field") {
  Emags e = uniform_emags(20, 16, 3, 0.2f);
  paint_po(e.slices[1], 5, 5, 4, 3, 0.9f);
  const PoVolume vol = smooth_3d(e, 0.0, 0.0);
  for (int t = 0; t < 3; ++t) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 20; ++c) {
        CHECK(vol.at_slice(t, c, r) ==
              doctest::Approx(e.slices[t].po(c, r)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("smooth_3d keeps a uniform unknown field unchanged") {
  const Emags e = uniform_emags(24, 24, 5, 0.5f);
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    CHECK(vol.planes[t].minCoeff() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(vol.planes[t].maxCoeff() == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("smooth_3d impulse matches the dense convolution oracle") {
  Emags e = uniform_emags(30, 30, 5, 0.5f);
  paint_po(e.slices[2], 15, 15, 1, 1, 1.0f);

  // Raw P_O planes for the oracle.
  std::vector<Eigen::ArrayXXf> raw;
  for (const auto& s : e.slices) raw.push_back(s.occupancy_plane());

  const double sig_s = 1.0, sig_t = 0.0;
  const PoVolume vol = smooth_3d(e, sig_s, sig_t);

  // Center value equals the discrete Gaussian peak weight over the 0.5
  // baseline, and matches the independent dense convolution.
  const double center = vol.at_slice(2, 15, 15);
  CHECK(center ==
        doctest::Approx(oracles::dense_gauss3d_at(raw, 2, 15, 15, sig_s, sig_t))
            .epsilon(1e-6));
  CHECK(center > 0.5);

  // Mass of the excess is preserved.
  double excess = 0.0;
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 30; ++c) excess += vol.at_slice(2, c, r) - 0.5;
  CHECK(excess == doctest::Approx(0.5).epsilon(1e-6));

  // Spot-check off-center cells against the oracle.
  for (const auto& [c, r] : std::vector<std::pair<int, int>>{
           {14, 15}, {16, 16}, {12, 15}, {15, 18}}) {
    CHECK(vol.at_slice(2, c, r) ==
          doctest::Approx(oracles::dense_gauss3d_at(raw, 2, r, c, sig_s, sig_t))
              .epsilon(1e-6));
  }
}

TEST_CASE("borders: uniform volume yields empty masks") {
  const Emags e = uniform_emags(24, 20, 3, 0.4f);
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  const auto borders = detect_borders(vol);
  for (const BorderMask& bm : borders) CHECK(bm.count() == 0);
}

TEST_CASE("borders form a closed ring around a rectangle") {
  Emags e = uniform_emags(40, 40, 3, 0.1f);
  for (auto& s : e.slices) paint_po(s, 17, 18, 6, 4, 0.9f);
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  const auto borders = detect_borders(vol);

  const BorderMask& bm = borders[1];
  CHECK(bm.count() > 0);
  // Flood from a free cell well away from both the rectangle and the
  // volume boundary; the ring must seal the interior off.
  const auto outside = flood_non_border(bm, 8, 8);
  CHECK(outside.count({8, 8}) == 1);
  for (int r = 19; r < 21; ++r) {
    for (int c = 18; c < 22; ++c) {
      CHECK(outside.count({c, r}) == 0);
    }
  }
  // The ring hugs the rectangle: border cells exist within 2 cells of
  // the rectangle boundary.
  int near = 0;
  for (int r = 15; r < 25; ++r)
    for (int c = 14; c < 26; ++c)
      if (bm.at(c, r)) ++near;
  CHECK(near > 8);
}

TEST_CASE("borders: two rectangles give two separate rings") {
  Emags e = uniform_emags(48, 40, 3, 0.1f);
  // 4 background cells between the near edges.
  for (auto& s : e.slices) {
    paint_po(s, 14, 18, 6, 4, 0.9f);
    paint_po(s, 24, 18, 6, 4, 0.9f);
  }
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  const auto borders = detect_borders(vol);
  const BorderMask& bm = borders[1];

  const auto outside = flood_non_border(bm, 6, 6);
  // Neither interior reachable from outside.
  CHECK(outside.count({16, 20}) == 0);
  CHECK(outside.count({27, 20}) == 0);
  // The interiors are separated from each other as well.
  const auto inside_a = flood_non_border(bm, 16, 20);
  CHECK(inside_a.count({27, 20}) == 0);
}

TEST_CASE("borders are invariant under a constant occupancy shift") {
  Emags low = uniform_emags(32, 32, 3, 0.1f);
  Emags high = uniform_emags(32, 32, 3, 0.3f);
  for (auto* e : {&low, &high}) {
    const float base = e == &low ? 0.1f : 0.3f;
    for (auto& s : e->slices) paint_po(s, 13, 14, 6, 4, base + 0.5f);
  }
  // Identical gradients need identical padding; keep the field away from
  // the volume edge influence by comparing only the inner window.
  const auto b_low = detect_borders(smooth_3d(low, 2.0, 1.0));
  const auto b_high = detect_borders(smooth_3d(high, 2.0, 1.0));
  for (int r = 8; r < 24; ++r)
    for (int c = 8; c < 24; ++c)
      CHECK(b_low[1].at(c, r) == b_high[1].at(c, r));
}

TEST_CASE("traversals: static wall cell has no interval") {
  const Emags e = uniform_emags(20, 20, 30, 0.9f);
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  const TraversalMap map = detect_traversals(vol, 0.3);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) CHECK(map.cell(c, r).empty());
}

TEST_CASE("traversals: rise and fall marks one interval near truth") {
  Emags e = uniform_emags(40, 40, 30, 0.1f);
  for (int t = 10; t <= 14; ++t) paint_po(e.slices[t], 17, 18, 6, 4, 0.9f);
  const PoVolume vol = smooth_3d(e, 1.0, 1.0);
  const TraversalMap map = detect_traversals(vol, 0.3);

  const auto& intervals = map.cell(19, 19);  // block center
  REQUIRE(intervals.size() == 1);
  CHECK(std::abs(intervals[0].t_rise - 10) <= 2);
  CHECK(std::abs(intervals[0].t_fall - 14) <= 2);
}

TEST_CASE("traversals: all-free field has none") {
  const Emags e = uniform_emags(16, 16, 20, 0.05f);
  const PoVolume vol = smooth_3d(e, 2.0, 1.0);
  const TraversalMap map = detect_traversals(vol, 0.3);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) CHECK(map.cell(c, r).empty());
}

TEST_CASE("init points: moving box is marked, static wall is not") {
  Scenario sc;
  sc.duration = 40;
  sc.grid_width = 90;
  sc.grid_height = 90;
  sc.cell_size = 0.15;
  sc.noise.velocity_std = 0.05;
  WallSpec wall;
  wall.points = {{-4.0, 4.0}, {4.0, 4.0}};
  sc.walls.push_back(wall);
  ActorSpec box;
  box.width = 0.6;
  box.length = 0.9;
  box.waypoints = {{0.0, {-4.0, -1.0}}, {39.0, {4.0, -1.0}}};
  sc.actors.push_back(box);

  const auto [emags, truth] = generate(sc, 21);
  PipelineConfig cfg;
  const Preprocessed pre = preprocess_all(emags, cfg);

  int in_box = 0, on_wall = 0, total = 0;
  for (int t = 0; t < emags.slice_count(); ++t) {
    const TruthBox* tb = nullptr;
    for (const TruthBox& b : truth.boxes)
      if (b.t == t) tb = &b;
    for (const InitPoint& ip : pre.init_points[t]) {
      ++total;
      const Vec2 p =
          emags.slices[t].cell_center(ip.index.col, ip.index.row);
      if (tb) {
        const OrientedRect rect{tb->center, tb->phi, tb->length, tb->width};
        if (rect.contains(p, 2.0 * sc.cell_size)) ++in_box;
      }
      if (p.y() > 3.0) ++on_wall;  // wall band (plus margin) at n=4
      // Init points never sit on border cells.
      CHECK_FALSE(pre.borders[t].at(ip.index.col, ip.index.row));
    }
  }
  CHECK(total >= 1);
  CHECK(in_box >= 1);  // the moving object is marked at least once
  CHECK(on_wall == 0);
}

TEST_CASE("init points: empty scene gives an empty list") {
  const Emags e = uniform_emags(20, 20, 10, 0.05f);
  PipelineConfig cfg;
  const Preprocessed pre = preprocess_all(e, cfg);
  CHECK(pre.total_init_points() == 0);
}
