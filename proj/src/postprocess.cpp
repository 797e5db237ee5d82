#include "emags/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace emags {

const ObjectPose* ObjectTrack::pose_at(int t) const {
  if (poses.empty() || t < first_t() || t > last_t()) return nullptr;
  return &poses[static_cast<size_t>(t - first_t())];
}

std::vector<BuildingPolygon> load_buildings_geojson(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open buildings file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("buildings GeoJSON parse error: " +
                             std::string(e.what()));
  }

  std::vector<BuildingPolygon> out;
  auto parse_polygon = [&](const nlohmann::json& geom, const std::string& name) {
    if (!geom.contains("type") || geom.at("type") != "Polygon") return;
    const auto& rings = geom.at("coordinates");
    if (rings.empty()) return;
    BuildingPolygon poly;
    poly.name = name;
    for (const auto& pt : rings.at(0)) {  // exterior ring only
      poly.vertices.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    }
    // Drop an explicit closing vertex.
    if (poly.vertices.size() > 1 &&
        (poly.vertices.front() - poly.vertices.back()).norm() < 1e-9) {
      poly.vertices.pop_back();
    }
    if (poly.vertices.size() >= 3) out.push_back(std::move(poly));
  };

  if (j.value("type", "") == "FeatureCollection") {
    for (const auto& f : j.at("features")) {
      std::string name;
      if (f.contains("properties") && f.at("properties").is_object())
        name = f.at("properties").value("name", "");
      parse_polygon(f.at("geometry"), name);
    }
  } else if (j.value("type", "") == "Feature") {
    parse_polygon(j.at("geometry"), "");
  } else {
    parse_polygon(j, "");
  }
  return out;
}

namespace {

// Moving-average center sequence; damps the cell-quantization jitter so
// geometric speed and path measures reflect actual motion.
std::vector<Vec2> smoothed_centers(const ObjectTrack& track, int window) {
  const int n = static_cast<int>(track.poses.size());
  std::vector<Vec2> out(n);
  const int half = window / 2;
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half, i, n - 1 - i});
    Vec2 acc{0.0, 0.0};
    for (int k = i - h; k <= i + h; ++k) acc += track.poses[k].center;
    out[i] = acc / double(2 * h + 1);
  }
  return out;
}

}  // namespace

ValidationResult validate_track(const ObjectTrack& track,
                                const std::vector<BuildingPolygon>& buildings,
                                const PipelineConfig& cfg) {
  ValidationResult res;
  if (track.poses.empty()) return {false, "empty"};

  const double len = track.final_length;
  const double wid = track.final_width;
  if (len > cfg.max_length || wid > cfg.max_width || len < cfg.min_length) {
    return {false, "size"};
  }
  if (wid > 1e-9 && len / wid > cfg.max_aspect) {
    return {false, "aspect"};
  }

  if (!buildings.empty()) {
    int inside = 0;
    for (const ObjectPose& p : track.poses) {
      for (const BuildingPolygon& b : buildings) {
        if (point_in_polygon(p.center, b.vertices)) {
          ++inside;
          break;
        }
      }
    }
    if (inside > cfg.building_fraction * double(track.poses.size())) {
      return {false, "building"};
    }
  }

  const auto centers = smoothed_centers(track, 5);
  const int n = static_cast<int>(centers.size());
  double path = 0.0;
  double max_speed = 0.0;
  double dt = 0.1;
  if (n >= 2) {
    dt = (track.poses.back().timestamp - track.poses.front().timestamp) /
         double(n - 1);
    if (!(dt > 0.0)) dt = 0.1;
    for (int i = 1; i < n; ++i) {
      const double step = (centers[i] - centers[i - 1]).norm();
      path += step;
      max_speed = std::max(max_speed, step / dt);
    }
  }
  if (path < cfg.static_path_length && max_speed < cfg.static_max_speed) {
    return {false, "static"};
  }

  if (n >= 3) {
    // Second difference of raw centers. Centers are anchored on the
    // cell lattice, so two quantization steps are tolerated on top of
    // the physical limit.
    int rough = 0;
    const double limit = cfg.jerk_limit * dt * dt + 2.0 * cfg.cell_size;
    for (int i = 1; i + 1 < n; ++i) {
      const Vec2 dd = track.poses[i + 1].center - 2.0 * track.poses[i].center +
                      track.poses[i - 1].center;
      if (dd.norm() > limit) ++rough;
    }
    if (rough > cfg.jerk_fraction * double(n - 2)) {
      return {false, "non-smooth"};
    }
  }
  return res;
}

ObjectTrack correct_standing_orientation(ObjectTrack track,
                                         const PipelineConfig& cfg) {
  const int n = static_cast<int>(track.poses.size());
  if (n == 0) return track;
  std::vector<bool> standing(n);
  for (int i = 0; i < n; ++i)
    standing[i] = track.poses[i].speed < cfg.standing_speed_post;

  auto apply_phi = [&](int i, double phi) {
    ObjectPose& p = track.poses[i];
    p.orientation = wrap_angle(phi);
    // Rotate about the center; the reference corner follows the box.
    p.ref_point = p.rect().corner(p.ref_corner);
  };

  int i = 0;
  while (i < n) {
    if (!standing[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && standing[j]) ++j;  // standing run [i, j)
    const int before = i - 1;
    const int after = j;
    if (before >= 0 && after < n) {
      const double a = track.poses[before].orientation;
      const double b = track.poses[after].orientation;
      const double delta = wrap_angle(b - a);  // shortest angular path
      const int span = after - before;
      for (int k = i; k < j; ++k) {
        apply_phi(k, a + delta * double(k - before) / double(span));
      }
    } else if (before >= 0) {
      for (int k = i; k < j; ++k) apply_phi(k, track.poses[before].orientation);
    } else if (after < n) {
      for (int k = i; k < j; ++k) apply_phi(k, track.poses[after].orientation);
    }
    i = j;
  }
  return track;
}

ObjectTrack smooth_trajectory(ObjectTrack track, int window) {
  const int n = static_cast<int>(track.poses.size());
  if (window <= 1 || n == 0) return track;
  const int half = window / 2;
  std::vector<Vec2> centers(n);
  std::vector<double> phis(n);
  for (int i = 0; i < n; ++i) {
    // Windows shrink symmetrically at the ends, so affine sequences are
    // fixed points and the endpoints stay put.
    const int h = std::min({half, i, n - 1 - i});
    Vec2 acc{0.0, 0.0};
    double s = 0.0, c = 0.0;
    for (int k = i - h; k <= i + h; ++k) {
      acc += track.poses[k].center;
      s += std::sin(track.poses[k].orientation);
      c += std::cos(track.poses[k].orientation);
    }
    centers[i] = acc / double(2 * h + 1);
    phis[i] = std::atan2(s, c);
  }
  for (int i = 0; i < n; ++i) {
    track.poses[i].center = centers[i];
    track.poses[i].orientation = phis[i];
    track.poses[i].ref_point = track.poses[i].rect().corner(track.poses[i].ref_corner);
  }
  return track;
}

}  // namespace emags
