#include "emags/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace emags {

namespace {

bool index_less(const CellIndex& a, const CellIndex& b) {
  if (a.row != b.row) return a.row < b.row;
  return a.col < b.col;
}

}  // namespace

bool Blob::contains(const CellIndex& idx) const {
  return std::binary_search(cells.begin(), cells.end(), idx,
                            [](const CellIndex& a, const CellIndex& b) {
                              return index_less(a, b);
                            });
}

Blob make_blob(int t, std::vector<CellIndex> cells, const GridSlice& slice) {
  Blob b;
  b.t = t;
  std::sort(cells.begin(), cells.end(), index_less);
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  b.cells = std::move(cells);
  double wsum = 0.0;
  Vec2 acc{0.0, 0.0};
  for (const CellIndex& idx : b.cells) {
    const double w = std::max(1e-6, slice.po(idx.col, idx.row));
    wsum += w;
    acc += w * slice.cell_center(idx.col, idx.row);
  }
  if (wsum > 0.0) b.centroid = acc / wsum;
  return b;
}

PoStats blob_po_stats(const Blob& blob, const GridSlice& slice) {
  PoStats s;
  if (blob.empty()) return s;
  double acc = 0.0;
  for (const CellIndex& idx : blob.cells) {
    const double po = slice.po(idx.col, idx.row);
    acc += po;
    s.max = std::max(s.max, po);
  }
  s.mean = acc / blob.size();
  double dev = 0.0;
  for (const CellIndex& idx : blob.cells) {
    const double d = slice.po(idx.col, idx.row) - s.mean;
    dev += d * d;
  }
  s.std = std::sqrt(dev / blob.size());
  return s;
}

Vec2 rect_center_from_corner(const Vec2& ref_point, int ref_corner, double phi,
                             double length, double width) {
  OrientedRect r{Vec2{0.0, 0.0}, phi, length, width};
  return ref_point - r.corner(ref_corner);
}

PredictedRegions predict_silhouette(const ObjectPose& pose,
                                    const VelocityProfile& profile,
                                    const Blob& prev_blob,
                                    const GridSlice& prev_slice, double dt,
                                    int direction, const GridSlice& target,
                                    const PipelineConfig& cfg) {
  PredictedRegions out;
  out.t = pose.t + direction;
  out.cell_size = target.cell_size;

  const Vec2 shift = Vec2{profile.mean_ve, profile.mean_vn} * dt * direction;
  const double margin =
      cfg.k_pred * std::sqrt(profile.var_mean_ve + profile.var_mean_vn) * dt +
      target.cell_size;

  out.object_region = pose.rect();
  out.object_region.center += shift;
  out.object_region = out.object_region.inflated(margin);
  out.blob_center = prev_blob.centroid + shift;

  // Translate the previous blob's cells into the target slice and dilate
  // by the prediction margin.
  const int radius = static_cast<int>(std::ceil(margin / target.cell_size));
  BoolGrid mask = BoolGrid::Constant(target.height, target.width, false);
  for (const CellIndex& idx : prev_blob.cells) {
    const Vec2 c = prev_slice.cell_center(idx.col, idx.row) + shift;
    const auto ti = world_to_index(target, c.x(), c.y());
    if (!ti) continue;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        const int nc = ti->col + dc, nr = ti->row + dr;
        if (target.in_bounds(nc, nr)) mask(nr, nc) = true;
      }
    }
  }
  for (int r = 0; r < target.height; ++r) {
    for (int c = 0; c < target.width; ++c) {
      if (mask(r, c)) out.blob_cells.push_back({c, r, out.t});
    }
  }
  return out;
}

SearchSeeds select_search_seeds(const PredictedRegions& regions,
                                const VelocityProfile& prev_profile,
                                const GridSlice& slice,
                                const PipelineConfig& cfg) {
  SearchSeeds out;
  out.t = regions.t;
  if (regions.blob_cells.empty()) return out;

  // Diagonal of the silhouette's bounding box normalizes the distance term.
  int min_c = slice.width, max_c = -1, min_r = slice.height, max_r = -1;
  for (const CellIndex& idx : regions.blob_cells) {
    min_c = std::min(min_c, idx.col);
    max_c = std::max(max_c, idx.col);
    min_r = std::min(min_r, idx.row);
    max_r = std::max(max_r, idx.row);
  }
  const double diag = std::max(
      slice.cell_size, std::hypot((max_c - min_c + 1) * slice.cell_size,
                                  (max_r - min_r + 1) * slice.cell_size));

  struct Candidate {
    CellIndex idx;
    double loss;
    double po;
  };
  std::vector<Candidate> cands;
  constexpr double kSpeedEps = 1e-3;
  for (const CellIndex& idx : regions.blob_cells) {
    if (!slice.in_bounds(idx.col, idx.row)) continue;
    const Cell cell = slice.at(idx.col, idx.row);
    const double po = slice.po(idx.col, idx.row);
    if (!cell.valid_velocity() || po <= cfg.occupancy_floor) continue;
    const double d_orient =
        circ_dist(cell.heading(), prev_profile.cell_mean_theta) / kPi;
    const double d_center =
        (slice.cell_center(idx.col, idx.row) - regions.blob_center).norm() / diag;
    const double d_speed = std::abs(cell.speed() - prev_profile.cell_mean_speed) /
                           (prev_profile.cell_mean_speed + kSpeedEps);
    const double loss = cfg.loss_w_occupancy * (1.0 - po) +
                        cfg.loss_w_orientation * d_orient +
                        cfg.loss_w_distance * d_center +
                        cfg.loss_w_speed * d_speed;
    cands.push_back({idx, loss, po});
  }
  if (cands.empty()) return out;

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.loss != b.loss) return a.loss < b.loss;
    if (a.po != b.po) return a.po > b.po;
    return index_less(a.idx, b.idx);
  });

  const int cap = static_cast<int>(
      std::ceil(regions.silhouette_area_m2() / cfg.seed_area_m2));
  const double min_spacing_cells = std::sqrt(cfg.seed_area_m2) / slice.cell_size;
  for (const Candidate& cand : cands) {
    if (static_cast<int>(out.seeds.size()) >= cap) break;
    bool spaced = true;
    for (const CellIndex& s : out.seeds) {
      const double d = std::hypot(double(s.col - cand.idx.col),
                                  double(s.row - cand.idx.row));
      if (d < min_spacing_cells) {
        spaced = false;
        break;
      }
    }
    if (spaced) out.seeds.push_back(cand.idx);
  }
  return out;
}

double component_occupancy_threshold(double seed_mean_po,
                                     std::optional<double> prev_po_std,
                                     const PipelineConfig& cfg) {
  // Minimum band of 0.2: an object's occupancy legitimately spans from
  // saturated core cells down to partial-coverage fringe cells, and a
  // tighter band would carve the fringe off the component.
  constexpr double kMinPoBand = 0.2;
  const double sigma = std::max(prev_po_std.value_or(0.0), kMinPoBand);
  return std::max(cfg.occupancy_floor, seed_mean_po - cfg.band_sigma * sigma);
}

Blob connected_component_search(const SearchSeeds& seeds,
                                const BorderMask& border,
                                const VelocityProfile* profile,
                                const GridSlice& slice, double occ_threshold,
                                double band) {
  std::vector<CellIndex> members;
  if (seeds.empty()) return make_blob(seeds.t, {}, slice);

  BoolGrid visited = BoolGrid::Constant(slice.height, slice.width, false);
  std::deque<CellIndex> queue;
  for (const CellIndex& s : seeds.seeds) {
    if (!slice.in_bounds(s.col, s.row) || visited(s.row, s.col)) continue;
    visited(s.row, s.col) = true;
    members.push_back(s);
    queue.push_back(s);
  }

  while (!queue.empty()) {
    const CellIndex cur = queue.front();
    queue.pop_front();
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nc = cur.col + dc, nr = cur.row + dr;
        if (!slice.in_bounds(nc, nr) || visited(nr, nc)) continue;
        visited(nr, nc) = true;
        // Occupancy gates membership; border and velocity-profile
        // mismatches still join as the single boundary layer but stop
        // the expansion.
        if (slice.po(nc, nr) < occ_threshold) continue;
        const CellIndex next{nc, nr, seeds.t};
        members.push_back(next);
        if (border.at(nc, nr)) continue;
        if (profile && !cell_matches(*profile, slice.at(nc, nr), band)) continue;
        queue.push_back(next);
      }
    }
  }
  return make_blob(seeds.t, std::move(members), slice);
}

Blob remove_outliers(const Blob& first_blob, int n_prev,
                     const VelocityProfile& profile, const GridSlice& slice,
                     const PipelineConfig& cfg) {
  if (first_blob.empty()) return first_blob;
  const int n = first_blob.size();
  n_prev = std::max(1, n_prev);

  struct Entry {
    CellIndex idx;
    double po;
    double theta_dev;  // +inf when velocity invalid
    double speed;
    bool valid;
  };
  std::vector<Entry> entries;
  entries.reserve(n);
  double po_max = 0.0;
  for (const CellIndex& idx : first_blob.cells) {
    const Cell cell = slice.at(idx.col, idx.row);
    Entry e;
    e.idx = idx;
    e.po = slice.po(idx.col, idx.row);
    e.valid = cell.valid_velocity();
    e.theta_dev = e.valid
                      ? circ_dist(cell.heading(), profile.cell_mean_theta)
                      : std::numeric_limits<double>::infinity();
    e.speed = e.valid ? cell.speed() : 0.0;
    po_max = std::max(po_max, e.po);
    entries.push_back(e);
  }

  // Combined rank: highest occupancy and smallest orientation deviation,
  // rank-sum with equal weight.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> rank_po(n), rank_theta(n);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (entries[a].po != entries[b].po) return entries[a].po > entries[b].po;
    return index_less(entries[a].idx, entries[b].idx);
  });
  for (int i = 0; i < n; ++i) rank_po[order[i]] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (entries[a].theta_dev != entries[b].theta_dev)
      return entries[a].theta_dev < entries[b].theta_dev;
    return index_less(entries[a].idx, entries[b].idx);
  });
  for (int i = 0; i < n; ++i) rank_theta[order[i]] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const int ra = rank_po[a] + rank_theta[a];
    const int rb = rank_po[b] + rank_theta[b];
    if (ra != rb) return ra < rb;
    return index_less(entries[a].idx, entries[b].idx);
  });

  const int n_in = std::min(n_prev, n);
  std::vector<int> inliers(order.begin(), order.begin() + n_in);

  // Inlier statistics. Heading and speed moments use valid cells only.
  double po_mean = 0.0;
  for (int i : inliers) po_mean += entries[i].po;
  po_mean /= n_in;
  double po_var = 0.0;
  for (int i : inliers) po_var += (entries[i].po - po_mean) * (entries[i].po - po_mean);
  const double po_std = std::sqrt(po_var / n_in);

  std::vector<double> thetas;
  std::vector<double> speeds;
  for (int i : inliers) {
    if (!entries[i].valid) continue;
    const Cell cell = slice.at(entries[i].idx.col, entries[i].idx.row);
    thetas.push_back(cell.heading());
    speeds.push_back(entries[i].speed);
  }
  const bool have_velocity = !thetas.empty();
  double theta_mean = 0.0, theta_std = 0.0, speed_mean = 0.0, speed_std = 0.0;
  if (have_velocity) {
    theta_mean = circ_mean(thetas);
    theta_std = circ_std(thetas, theta_mean);
    for (double s : speeds) speed_mean += s;
    speed_mean /= speeds.size();
    for (double s : speeds) speed_std += (s - speed_mean) * (s - speed_mean);
    speed_std = std::sqrt(speed_std / speeds.size());
  }

  // Minimum bands: expected per-cell velocity spread, and an occupancy
  // cut no higher than 0.9 * max P_O.
  const double band = cfg.band_sigma;
  const double sigma_v_floor = profile.sigma_floor();
  const double theta_floor =
      std::min(kPi, sigma_v_floor / std::max(speed_mean, 0.1));
  const double theta_band = band * std::max(theta_std, theta_floor);
  const double speed_band = band * std::max(speed_std, sigma_v_floor);
  const double po_cut = std::min(po_mean - band * po_std, 0.9 * po_max);

  std::vector<CellIndex> kept;
  for (const Entry& e : entries) {
    if (e.po < po_cut) continue;
    if (have_velocity) {
      if (!e.valid) continue;
      if (circ_dist(slice.at(e.idx.col, e.idx.row).heading(), theta_mean) >
          theta_band)
        continue;
      if (std::abs(e.speed - speed_mean) > speed_band) continue;
    }
    kept.push_back(e.idx);
  }
  if (kept.empty()) {
    for (int i : inliers) kept.push_back(entries[i].idx);
  }
  return make_blob(first_blob.t, std::move(kept), slice);
}

BlobPolygon fit_blob_polygon(const Blob& blob, double phi, const Vec2& ego,
                             const GridSlice& slice) {
  BlobPolygon out;
  const Vec2 axis_l{std::cos(phi), std::sin(phi)};
  const Vec2 axis_w{-std::sin(phi), std::cos(phi)};

  double min_l = std::numeric_limits<double>::infinity(), max_l = -min_l;
  double min_w = min_l, max_w = -min_l;
  for (const CellIndex& idx : blob.cells) {
    const Vec2 c = slice.cell_center(idx.col, idx.row);
    const double pl = c.dot(axis_l);
    const double pw = c.dot(axis_w);
    min_l = std::min(min_l, pl);
    max_l = std::max(max_l, pl);
    min_w = std::min(min_w, pw);
    max_w = std::max(max_w, pw);
  }
  const double mid_l = 0.5 * (min_l + max_l);
  const double mid_w = 0.5 * (min_w + max_w);
  out.rect.center = mid_l * axis_l + mid_w * axis_w;
  out.rect.phi = wrap_angle(phi);
  out.rect.length = (max_l - min_l) + slice.cell_size;
  out.rect.width = (max_w - min_w) + slice.cell_size;

  // Reference point: least line-of-sight occlusion, then nearest to ego.
  // Occlusion sums the occupancy evidence above the unknown level, so
  // plain free space along a long ray does not count as blockage.
  double best_occ = std::numeric_limits<double>::infinity();
  double best_dist = best_occ;
  for (int k = 0; k < 4; ++k) {
    const Vec2 corner = out.rect.corner(k);
    double occ = 0.0;
    for (const GridCellRef& cell : traverse_segment(
             ego, corner, slice.origin(), slice.cell_size, slice.width,
             slice.height)) {
      const Vec2 center = slice.cell_center(cell.col, cell.row);
      if (out.rect.contains(center)) continue;
      occ += std::max(0.0, slice.po(cell.col, cell.row) - 0.5);
    }
    const double dist = (corner - ego).norm();
    if (occ < best_occ - 1e-12 ||
        (std::abs(occ - best_occ) <= 1e-12 && dist < best_dist - 1e-12)) {
      best_occ = occ;
      best_dist = dist;
      out.ref_point = corner;
      out.ref_corner = k;
    }
  }
  return out;
}

Extent update_dimensions(std::span<const Extent> history, double percentile) {
  Extent out;
  if (history.empty()) return out;
  auto pct = [&](auto&& get) {
    std::vector<double> v;
    v.reserve(history.size());
    for (const Extent& e : history) v.push_back(get(e));
    std::sort(v.begin(), v.end());
    const double pos = percentile * double(v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - double(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };
  out.width = pct([](const Extent& e) { return e.width; });
  out.length = pct([](const Extent& e) { return e.length; });
  return out;
}

InitResult init_object(const GridSlice& slice, const BorderMask& border,
                       const InitPoint& p, const PipelineConfig& cfg) {
  InitResult out;
  const Cell seed_cell = slice.at(p.index.col, p.index.row);
  if (!seed_cell.valid_velocity() ||
      double(seed_cell.var_ve) >= cfg.init_max_variance ||
      double(seed_cell.var_vn) >= cfg.init_max_variance) {
    out.status = InitStatus::rejected_prerequisite;
    return out;
  }

  SearchSeeds seeds;
  seeds.t = p.index.t;
  seeds.seeds = {p.index};

  const double seed_po = slice.po(p.index.col, p.index.row);
  const double coarse_thresh =
      component_occupancy_threshold(seed_po, std::nullopt, cfg);
  const Blob coarse = connected_component_search(seeds, border, nullptr, slice,
                                                 coarse_thresh, cfg.band_sigma);
  std::vector<Cell> coarse_cells;
  coarse_cells.reserve(coarse.cells.size());
  for (const CellIndex& idx : coarse.cells)
    coarse_cells.push_back(slice.at(idx.col, idx.row));
  const auto coarse_profile = compute_profile(coarse_cells);
  if (!coarse_profile) {
    out.status = InitStatus::rejected_degenerate;
    return out;
  }

  const PoStats coarse_stats = blob_po_stats(coarse, slice);
  const double fine_thresh =
      component_occupancy_threshold(seed_po, coarse_stats.std, cfg);
  out.blob = connected_component_search(seeds, border, &*coarse_profile, slice,
                                        fine_thresh, cfg.band_sigma);
  std::vector<Cell> fine_cells;
  fine_cells.reserve(out.blob.cells.size());
  for (const CellIndex& idx : out.blob.cells)
    fine_cells.push_back(slice.at(idx.col, idx.row));
  const auto fine_profile = compute_profile(fine_cells);
  if (!fine_profile || out.blob.size() < cfg.min_cluster_cells) {
    out.status = InitStatus::rejected_degenerate;
    return out;
  }
  out.profile = *fine_profile;

  const BlobPolygon poly = fit_blob_polygon(
      out.blob, out.profile.orientation, slice.ego_position(), slice);
  out.pose.t = p.index.t;
  out.pose.timestamp = slice.timestamp;
  out.pose.ref_point = poly.ref_point;
  out.pose.ref_corner = poly.ref_corner;
  out.pose.center = poly.rect.center;
  out.pose.orientation = poly.rect.phi;
  out.pose.width = poly.rect.width;
  out.pose.length = poly.rect.length;
  out.pose.observed_width = poly.rect.width;
  out.pose.observed_length = poly.rect.length;
  out.status = InitStatus::ok;
  return out;
}

}  // namespace emags
