#include "emags/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace emags {

namespace {

// Hand-rolled RNG keeps the output byte-stable across standard library
// implementations.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double gaussian() {
    // Box-Muller on two uniforms.
    double u1 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
};

// Entry/exit distances of a ray against an oriented rectangle (slab
// test in the rect frame). Returns false when the ray misses.
bool ray_rect_span(const Vec2& from, const Vec2& dir_unit, double max_dist,
                   const OrientedRect& rect, double* d_in, double* d_out) {
  const Vec2 al = rect.axis_long();
  const Vec2 aw = rect.axis_cross();
  const Vec2 rel = rect.center - from;
  double t0 = 0.0, t1 = max_dist;
  for (int axis = 0; axis < 2; ++axis) {
    const Vec2& a = axis == 0 ? al : aw;
    const double half = axis == 0 ? 0.5 * rect.length : 0.5 * rect.width;
    const double denom = dir_unit.dot(a);
    const double center = rel.dot(a);
    if (std::abs(denom) < 1e-12) {
      if (std::abs(center) > half) return false;
      continue;
    }
    double lo = (center - half) / denom;
    double hi = (center + half) / denom;
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) return false;
  }
  *d_in = t0;
  *d_out = t1;
  return true;
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& d, double* t_ab) {
  const Vec2 r = b - a;
  const Vec2 s = d - c;
  const double denom = r.x() * s.y() - r.y() * s.x();
  if (std::abs(denom) < 1e-15) return false;
  const Vec2 ca = c - a;
  const double t = (ca.x() * s.y() - ca.y() * s.x()) / denom;
  const double u = (ca.x() * r.y() - ca.y() * r.x()) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  *t_ab = t;
  return true;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

struct ActorState {
  Vec2 pos;
  Vec2 vel;
  double heading;
  OrientedRect rect;
  bool moving;
};

}  // namespace

Vec2 actor_position(const ActorSpec& actor, double t_slice, double dt) {
  (void)dt;
  const auto& wp = actor.waypoints;
  if (wp.empty()) return {0.0, 0.0};
  if (t_slice <= wp.front().t) return wp.front().pos;
  if (t_slice >= wp.back().t) return wp.back().pos;
  for (size_t i = 0; i + 1 < wp.size(); ++i) {
    if (t_slice >= wp[i].t && t_slice <= wp[i + 1].t) {
      const double span = wp[i + 1].t - wp[i].t;
      const double f = span > 0.0 ? (t_slice - wp[i].t) / span : 0.0;
      return wp[i].pos + f * (wp[i + 1].pos - wp[i].pos);
    }
  }
  return wp.back().pos;
}

Vec2 actor_velocity(const ActorSpec& actor, double t_slice, double dt) {
  const auto& wp = actor.waypoints;
  if (wp.size() < 2 || t_slice < wp.front().t || t_slice >= wp.back().t)
    return {0.0, 0.0};
  for (size_t i = 0; i + 1 < wp.size(); ++i) {
    if (t_slice >= wp[i].t && t_slice < wp[i + 1].t) {
      const double span_s = (wp[i + 1].t - wp[i].t) * dt;
      if (span_s <= 0.0) return {0.0, 0.0};
      return (wp[i + 1].pos - wp[i].pos) / span_s;
    }
  }
  return {0.0, 0.0};
}

Scenario parse_scenario_json(const std::string& json_text) {
  using nlohmann::json;
  const json j = json::parse(json_text);

  Scenario sc;
  sc.duration = j.at("duration").get<int>();
  const json& grid = j.at("grid");
  sc.grid_width = grid.at("width").get<int>();
  sc.grid_height = grid.at("height").get<int>();
  sc.cell_size = grid.value("cell_size", 0.15);
  sc.dt = grid.value("dt", 0.1);

  if (j.contains("ego")) {
    const json& ego = j.at("ego");
    if (ego.contains("start"))
      sc.ego_start = {ego.at("start").at(0).get<double>(),
                      ego.at("start").at(1).get<double>()};
    if (ego.contains("velocity"))
      sc.ego_velocity = {ego.at("velocity").at(0).get<double>(),
                         ego.at("velocity").at(1).get<double>()};
  }

  for (const json& a : j.value("actors", json::array())) {
    ActorSpec actor;
    actor.width = a.at("width").get<double>();
    actor.length = a.at("length").get<double>();
    for (const json& w : a.at("waypoints")) {
      actor.waypoints.push_back(
          {w.at("t").get<double>(),
           Vec2{w.at("e").get<double>(), w.at("n").get<double>()}});
    }
    std::sort(actor.waypoints.begin(), actor.waypoints.end(),
              [](const Waypoint& x, const Waypoint& y) { return x.t < y.t; });
    sc.actors.push_back(std::move(actor));
  }

  for (const json& w : j.value("walls", json::array())) {
    WallSpec wall;
    wall.thickness = w.value("thickness", 0.3);
    for (const json& p : w.at("points"))
      wall.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    sc.walls.push_back(std::move(wall));
  }

  for (const json& o : j.value("occluders", json::array())) {
    sc.occluders.push_back(
        {Vec2{o.at("from").at(0).get<double>(), o.at("from").at(1).get<double>()},
         Vec2{o.at("to").at(0).get<double>(), o.at("to").at(1).get<double>()}});
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    sc.noise.flicker_prob = n.value("flicker_prob", 0.0);
    sc.noise.velocity_std = n.value("velocity_std", 0.1);
    if (n.contains("variance_range")) {
      sc.noise.variance_lo = n.at("variance_range").at(0).get<double>();
      sc.noise.variance_hi = n.at("variance_range").at(1).get<double>();
    }
  }
  sc.convergence_delay = j.value("convergence_delay", 0);
  sc.self_occlusion = j.value("self_occlusion", false);
  sc.penetration_depth = j.value("penetration_depth", 2.5);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario_json(ss.str());
}

namespace {

void validate_scenario(const Scenario& sc) {
  if (sc.duration < 1) throw std::invalid_argument("scenario: duration must be >= 1");
  if (sc.grid_width < 4 || sc.grid_height < 4)
    throw std::invalid_argument("scenario: grid too small");
  if (!(sc.cell_size > 0.0) || !(sc.dt > 0.0))
    throw std::invalid_argument("scenario: cell_size and dt must be positive");
  for (const ActorSpec& a : sc.actors) {
    if (a.width < sc.cell_size || a.length < sc.cell_size)
      throw std::invalid_argument("scenario: actor smaller than one cell");
    if (a.waypoints.empty())
      throw std::invalid_argument("scenario: actor without waypoints");
  }
  if (!(sc.noise.variance_hi >= sc.noise.variance_lo) ||
      !(sc.noise.variance_lo > 0.0))
    throw std::invalid_argument("scenario: bad variance range");
}

}  // namespace

std::pair<Emags, GroundTruth> generate(const Scenario& sc, uint64_t seed) {
  validate_scenario(sc);

  Emags emags;
  emags.dt = sc.dt;
  GroundTruth truth;

  const int W = sc.grid_width, H = sc.grid_height;
  const double cs = sc.cell_size;

  // Continuous coverage age per world-lattice cell for the particle
  // convergence delay.
  std::unordered_map<int64_t, int> age;
  auto world_key = [&](const Vec2& origin, int col, int row) {
    const int64_t gc = llround(origin.x() / cs) + col;
    const int64_t gr = llround(origin.y() / cs) + row;
    return (gc << 24) ^ (gr & 0xFFFFFF);
  };

  std::vector<double> prev_heading(sc.actors.size(), 0.0);
  // Seed headings from the first motion direction.
  for (size_t i = 0; i < sc.actors.size(); ++i) {
    for (double t = 0; t < sc.duration; t += 0.5) {
      const Vec2 v = actor_velocity(sc.actors[i], t, sc.dt);
      if (v.norm() > 1e-6) {
        prev_heading[i] = std::atan2(v.y(), v.x());
        break;
      }
    }
  }

  for (int t = 0; t < sc.duration; ++t) {
    SplitMix64 rng(seed ^ (0xA24BAED4963EE407ull * uint64_t(t + 1)));

    const Vec2 ego = sc.ego_start + sc.ego_velocity * (t * sc.dt);
    GridSlice slice(W, H, cs);
    slice.timestamp = t * sc.dt;
    slice.origin_e = std::round((ego.x() - 0.5 * W * cs) / cs) * cs;
    slice.origin_n = std::round((ego.y() - 0.5 * H * cs) / cs) * cs;
    const Vec2 ego_cell = slice.ego_position();

    std::vector<ActorState> actors(sc.actors.size());
    for (size_t i = 0; i < sc.actors.size(); ++i) {
      ActorState& st = actors[i];
      st.pos = actor_position(sc.actors[i], t, sc.dt);
      st.vel = actor_velocity(sc.actors[i], t, sc.dt);
      st.moving = st.vel.norm() > 1e-6;
      st.heading = st.moving ? std::atan2(st.vel.y(), st.vel.x()) : prev_heading[i];
      prev_heading[i] = st.heading;
      st.rect = {st.pos, st.heading, sc.actors[i].length, sc.actors[i].width};
    }

    // Obstruction test: true when the sight line from the ego to `p` is
    // blocked by an occluder segment or by enough accumulated depth
    // inside an actor box.
    auto shadowed = [&](const Vec2& p, int own_actor) {
      const Vec2 d = p - ego_cell;
      const double dist = d.norm();
      if (dist < 1e-9) return false;
      const Vec2 dir = d / dist;
      for (const OccluderSpec& oc : sc.occluders) {
        double t_hit;
        if (segments_intersect(ego_cell, p, oc.from, oc.to, &t_hit) &&
            t_hit < 1.0 - 1e-6)
          return true;
      }
      for (size_t i = 0; i < actors.size(); ++i) {
        if (static_cast<int>(i) == own_actor && !sc.self_occlusion) continue;
        double d_in, d_out;
        if (!ray_rect_span(ego_cell, dir, dist, actors[i].rect, &d_in, &d_out))
          continue;
        const double chord = std::min(dist - 0.5 * cs, d_out) - d_in;
        if (chord > sc.penetration_depth) return true;
        if (static_cast<int>(i) != own_actor &&
            d_out < dist - 0.5 * cs && chord > 0.25) {
          return true;  // fully behind another actor
        }
      }
      return false;
    };

    // Surface pass: walls, then actors near-to-far priority.
    struct Surface {
      int kind = 0;  // 0 free, 1 wall, 2 actor
      int actor = -1;
      double coverage = 0.0;
    };
    std::vector<Surface> surf(static_cast<size_t>(W) * H);

    for (const WallSpec& wall : sc.walls) {
      for (size_t s = 0; s + 1 < wall.points.size(); ++s) {
        const Vec2 a = wall.points[s], b = wall.points[s + 1];
        const double lo_e = std::min(a.x(), b.x()) - wall.thickness;
        const double hi_e = std::max(a.x(), b.x()) + wall.thickness;
        const double lo_n = std::min(a.y(), b.y()) - wall.thickness;
        const double hi_n = std::max(a.y(), b.y()) + wall.thickness;
        const int c0 = std::max(0, int(std::floor((lo_e - slice.origin_e) / cs)));
        const int c1 = std::min(W - 1, int(std::floor((hi_e - slice.origin_e) / cs)));
        const int r0 = std::max(0, int(std::floor((lo_n - slice.origin_n) / cs)));
        const int r1 = std::min(H - 1, int(std::floor((hi_n - slice.origin_n) / cs)));
        for (int r = r0; r <= r1; ++r) {
          for (int c = c0; c <= c1; ++c) {
            if (point_segment_distance(slice.cell_center(c, r), a, b) <=
                0.5 * wall.thickness) {
              auto& cellsurf = surf[static_cast<size_t>(r) * W + c];
              cellsurf.kind = std::max(cellsurf.kind, 1);
            }
          }
        }
      }
    }

    // Nearest actor wins contested cells.
    std::vector<size_t> order(actors.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return (actors[a].pos - ego_cell).norm() > (actors[b].pos - ego_cell).norm();
    });
    for (size_t oi : order) {
      const ActorState& st = actors[oi];
      const double reach = 0.5 * std::hypot(st.rect.length, st.rect.width) + cs;
      const int c0 = std::max(0, int(std::floor((st.pos.x() - reach - slice.origin_e) / cs)));
      const int c1 = std::min(W - 1, int(std::floor((st.pos.x() + reach - slice.origin_e) / cs)));
      const int r0 = std::max(0, int(std::floor((st.pos.y() - reach - slice.origin_n) / cs)));
      const int r1 = std::min(H - 1, int(std::floor((st.pos.y() + reach - slice.origin_n) / cs)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          // 4x4 supersampling of the cell square against the box.
          int hit = 0;
          for (int sy = 0; sy < 4; ++sy) {
            for (int sx = 0; sx < 4; ++sx) {
              const Vec2 p{slice.origin_e + (c + (sx + 0.5) / 4.0) * cs,
                           slice.origin_n + (r + (sy + 0.5) / 4.0) * cs};
              if (st.rect.contains(p)) ++hit;
            }
          }
          if (hit == 0) continue;
          auto& cellsurf = surf[static_cast<size_t>(r) * W + c];
          cellsurf.kind = 2;
          cellsurf.actor = static_cast<int>(oi);
          cellsurf.coverage = hit / 16.0;
        }
      }
    }

    // Composition pass: shadows, noise, convergence age.
    std::unordered_map<int64_t, int> new_age;
    std::vector<int> visible_cells(actors.size(), 0);
    std::vector<int> footprint_cells(actors.size(), 0);

    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        const Surface& s = surf[static_cast<size_t>(r) * W + c];
        const Vec2 center = slice.cell_center(c, r);
        Cell cell;  // defaults to unknown

        if (s.kind == 2 && s.coverage >= 0.5) ++footprint_cells[s.actor];

        const bool blocked = shadowed(center, s.kind == 2 ? s.actor : -1);
        if (blocked) {
          slice.set(c, r, cell);
          continue;
        }

        if (s.kind == 0) {
          cell.m_occ = 0.02f;
          cell.m_free = float(0.82 + 0.06 * rng.uniform());
        } else if (s.kind == 1) {
          cell.m_occ = float(0.86 + 0.08 * rng.uniform());
          cell.m_free = 0.02f;
          cell.v_e = 0.0f;
          cell.v_n = 0.0f;
          cell.var_ve = 0.02f;
          cell.var_vn = 0.02f;
        } else {
          const ActorState& st = actors[s.actor];
          const double occ = 0.86 + 0.08 * rng.uniform();
          cell.m_occ = float(occ * s.coverage);
          cell.m_free = float(0.88 * (1.0 - s.coverage));
          if (s.coverage >= 0.3) {
            if (s.coverage >= 0.5) ++visible_cells[s.actor];
            const double var = std::clamp(
                std::max(sc.noise.velocity_std * sc.noise.velocity_std, 0.01) *
                    (0.8 + 0.4 * rng.uniform()),
                sc.noise.variance_lo, sc.noise.variance_hi);
            const double noise_e = sc.noise.velocity_std * rng.gaussian();
            const double noise_n = sc.noise.velocity_std * rng.gaussian();
            const int64_t key = world_key(slice.origin(), c, r);
            const auto it = age.find(key);
            const int a = it == age.end() ? 1 : it->second + 1;
            new_age[key] = a;
            if (a > sc.convergence_delay) {
              cell.v_e = float(st.vel.x() + noise_e);
              cell.v_n = float(st.vel.y() + noise_n);
              cell.var_ve = float(var);
              cell.var_vn = float(var);
            }
          }
        }

        if (sc.noise.flicker_prob > 0.0 && rng.uniform() < sc.noise.flicker_prob) {
          if (s.kind == 0) {
            cell = Cell{};
            cell.m_occ = 0.8f;
            cell.m_free = 0.05f;
          } else {
            cell = Cell{};  // blip to unknown
          }
        }
        slice.set(c, r, cell);
      }
    }
    age = std::move(new_age);

    for (size_t i = 0; i < actors.size(); ++i) {
      if (footprint_cells[i] == 0) continue;  // outside the mapped window
      TruthBox box;
      box.t = t;
      box.actor = static_cast<int>(i);
      box.center = actors[i].pos;
      box.phi = actors[i].heading;
      box.width = sc.actors[i].width;
      box.length = sc.actors[i].length;
      box.visibility = double(visible_cells[i]) / double(footprint_cells[i]);
      truth.boxes.push_back(box);
    }

    emags.slices.push_back(std::move(slice));
  }
  return {std::move(emags), std::move(truth)};
}

}  // namespace emags
