#include "emags/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emags {

int InitPointStack::size() const {
  int n = 0;
  for (const auto& pts : remaining) n += static_cast<int>(pts.size());
  return n;
}

std::optional<InitPoint> InitPointStack::pop() {
  for (auto& pts : remaining) {
    if (pts.empty()) continue;
    // Slices are kept sorted score-descending then row-major.
    InitPoint p = pts.front();
    pts.erase(pts.begin());
    return p;
  }
  return std::nullopt;
}

void remove_covered_init_points(const ObjectTrack& track, InitPointStack& stack,
                                const Emags& emags) {
  for (const ObjectPose& pose : track.poses) {
    if (pose.t < 0 || pose.t >= static_cast<int>(stack.remaining.size())) continue;
    const GridSlice& slice = emags.slices[pose.t];
    const OrientedRect rect = pose.rect().inflated(slice.cell_size);
    auto& pts = stack.remaining[pose.t];
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](const InitPoint& p) {
                               const Vec2 c = slice.cell_center(p.index.col,
                                                                p.index.row);
                               return rect.contains(c, 1e-9);
                             }),
              pts.end());
  }
}

PlausibilityResult plausibility_check(const Blob& reduced, int prev_blob_size,
                                      const VelocityProfile& new_profile,
                                      const VelocityProfile& prev_profile,
                                      const Vec2& predicted_center,
                                      double dt_eff, double cell_size,
                                      bool after_coast,
                                      const PipelineConfig& cfg) {
  if (!after_coast && prev_blob_size > 0 && reduced.size() > 0) {
    const double ratio = double(reduced.size()) / double(prev_blob_size);
    if (ratio > cfg.plaus_area_factor || ratio < 1.0 / cfg.plaus_area_factor) {
      return {false, "area-jump"};
    }
  }
  if (std::min(new_profile.speed, prev_profile.speed) > cfg.plaus_orient_min_speed) {
    if (circ_dist(new_profile.orientation, prev_profile.orientation) >
        cfg.plaus_orient_jump_rad) {
      return {false, "orientation-jump"};
    }
  }
  const double allowance =
      2.0 * (prev_profile.speed * dt_eff +
             2.0 * std::sqrt(prev_profile.var_mean_ve + prev_profile.var_mean_vn) *
                 dt_eff) +
      2.0 * cell_size;
  if ((reduced.centroid - predicted_center).norm() > allowance) {
    return {false, "centroid-deviation"};
  }
  return {};
}

namespace {

std::vector<Cell> blob_cells(const Blob& blob, const GridSlice& slice) {
  std::vector<Cell> cells;
  cells.reserve(blob.cells.size());
  for (const CellIndex& idx : blob.cells) cells.push_back(slice.at(idx.col, idx.row));
  return cells;
}

double seed_mean_po(const SearchSeeds& seeds, const GridSlice& slice) {
  double acc = 0.0;
  for (const CellIndex& s : seeds.seeds) acc += slice.po(s.col, s.row);
  return seeds.seeds.empty() ? 0.0 : acc / double(seeds.seeds.size());
}

}  // namespace

std::string trace_direction(const TraceState& start, int direction,
                            const Emags& emags, const Preprocessed& pre,
                            const PipelineConfig& cfg, TraceDraft& draft) {
  TraceState cur = start;
  int coast = 0;
  std::vector<ObjectPose> pending;  // coasted poses awaiting reacquisition
  int t = cur.pose.t + direction;

  while (t >= 0 && t < emags.slice_count()) {
    const GridSlice& slice = emags.slices[t];
    const double dt_eff = emags.dt * double(coast + 1);

    const PredictedRegions regions = predict_silhouette(
        cur.pose, cur.profile, cur.blob, emags.slices[cur.pose.t], dt_eff,
        direction, slice, cfg);
    const SearchSeeds seeds = select_search_seeds(regions, cur.profile, slice, cfg);

    bool weak_step = seeds.empty();
    Blob reduced;
    std::optional<VelocityProfile> new_profile;

    if (!weak_step) {
      const PoStats prev_stats = blob_po_stats(cur.blob, emags.slices[cur.pose.t]);
      const double occ_thresh = component_occupancy_threshold(
          seed_mean_po(seeds, slice), prev_stats.std, cfg);
      const Blob first = connected_component_search(
          seeds, pre.borders[t], &cur.profile, slice, occ_thresh, cfg.band_sigma);
      reduced = remove_outliers(first, cur.blob.size(), cur.profile, slice, cfg);
      new_profile = compute_profile(blob_cells(reduced, slice));
      if (!new_profile || reduced.size() < cfg.min_cluster_cells) weak_step = true;
    }

    if (weak_step) {
      ++coast;
      if (coast > cfg.max_coast) {
        return "lost (coasted past limit)";
      }
      ObjectPose p = cur.pose;
      const Vec2 shift =
          Vec2{cur.profile.mean_ve, cur.profile.mean_vn} * dt_eff * direction;
      p.t = t;
      p.timestamp = slice.timestamp;
      p.center = cur.pose.center + shift;
      p.ref_point = cur.pose.ref_point + shift;
      p.coasted = true;
      p.observed_width = 0.0;
      p.observed_length = 0.0;
      pending.push_back(p);
      t += direction;
      continue;
    }

    const PlausibilityResult plaus = plausibility_check(
        reduced, cur.blob.size(), *new_profile, cur.profile,
        regions.blob_center, dt_eff, slice.cell_size, coast > 0, cfg);
    if (!plaus.pass) {
      return "implausible (" + plaus.reason + ")";
    }

    // Standing objects keep the last confident heading.
    double phi = cur.confident_phi;
    if (new_profile->speed >= cfg.standing_speed) phi = new_profile->orientation;

    const BlobPolygon poly =
        fit_blob_polygon(reduced, phi, slice.ego_position(), slice);
    draft.extents.push_back({poly.rect.width, poly.rect.length});
    draft.dims = update_dimensions(draft.extents, cfg.dim_percentile);

    ObjectPose p;
    p.t = t;
    p.timestamp = slice.timestamp;
    p.ref_point = poly.ref_point;
    p.ref_corner = poly.ref_corner;
    p.orientation = poly.rect.phi;
    p.width = draft.dims.width;
    p.length = draft.dims.length;
    p.center = rect_center_from_corner(p.ref_point, p.ref_corner, p.orientation,
                                       p.length, p.width);
    p.observed_width = poly.rect.width;
    p.observed_length = poly.rect.length;
    p.speed = new_profile->speed;

    // Reacquired: the coasted gap becomes part of the trace.
    for (ObjectPose& cp : pending) draft.poses.push_back(cp);
    pending.clear();
    coast = 0;
    draft.poses.push_back(p);

    cur.pose = p;
    cur.profile = *new_profile;
    cur.blob = reduced;
    if (new_profile->speed >= cfg.standing_speed) cur.confident_phi = phi;
    t += direction;
  }
  return "sequence end";
}

namespace {

// Re-render every pose with the final dimensions, anchored at the
// per-step reference point, and normalize to length >= width.
void finalize_track(ObjectTrack& track, const Extent& dims) {
  double length = dims.length;
  double width = dims.width;
  double rotate = 0.0;
  if (length < width) {
    std::swap(length, width);
    rotate = 0.5 * kPi;
  }
  track.final_width = width;
  track.final_length = length;
  for (ObjectPose& p : track.poses) {
    const double phi = wrap_angle(p.orientation + rotate);
    // Keep the anchored corner fixed while the dimensions change.
    const Vec2 ref = p.ref_point;
    if (rotate != 0.0) {
      // Corner roles change under the axis swap; re-pick the corner
      // closest to its previous world position.
      const Vec2 old_center = p.center;
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int k = 0; k < 4; ++k) {
        const Vec2 c = old_center + OrientedRect{Vec2{0, 0}, phi, length, width}.corner(k);
        const double d = (c - ref).norm();
        if (d < best) {
          best = d;
          best_k = k;
        }
      }
      p.ref_corner = best_k;
    }
    p.orientation = phi;
    p.width = width;
    p.length = length;
    p.center = rect_center_from_corner(ref, p.ref_corner, phi, length, width);
  }
}

bool duplicate_of(const ObjectTrack& cand, const ObjectTrack& done,
                  const PipelineConfig& cfg) {
  const int lo = std::max(cand.first_t(), done.first_t());
  const int hi = std::min(cand.last_t(), done.last_t());
  if (lo > hi) return false;
  int shared = 0;
  for (int t = lo; t <= hi; ++t) {
    const ObjectPose* a = cand.pose_at(t);
    const ObjectPose* b = done.pose_at(t);
    if (!a || !b) continue;
    const double inter = intersection_area(a->rect(), b->rect());
    const double smaller = std::min(a->rect().area(), b->rect().area());
    if (smaller > 1e-9 && inter / smaller > cfg.duplicate_overlap) ++shared;
  }
  return shared > 0.5 * double(hi - lo + 1);
}

}  // namespace

std::vector<ObjectTrack> run_all(const Emags& emags, const Preprocessed& pre,
                                 const std::vector<BuildingPolygon>& buildings,
                                 const PipelineConfig& config, RunSummary* summary) {
  RunSummary local;
  RunSummary& sum = summary ? *summary : local;
  PipelineConfig cfg = config;
  if (!emags.empty()) cfg.cell_size = emags.slices.front().cell_size;
  InitPointStack stack(pre.init_points);
  sum.initial_init_points = stack.size();

  std::vector<ObjectTrack> completed;
  int next_id = 1;

  while (auto popped = stack.pop()) {
    const InitPoint p = *popped;
    ++sum.initializations_attempted;
    std::ostringstream log;
    log << "init (" << p.index.col << "," << p.index.row << ",t=" << p.index.t
        << ") score=" << p.score;

    const GridSlice& slice = emags.slices[p.index.t];
    const InitResult init = init_object(slice, pre.borders[p.index.t], p, cfg);
    if (init.status == InitStatus::rejected_prerequisite) {
      ++sum.init_rejected_prerequisite;
      log << " -> rejected (variance prerequisite)";
      sum.log.push_back(log.str());
      continue;
    }
    if (init.status == InitStatus::rejected_degenerate) {
      ++sum.init_rejected_degenerate;
      log << " -> rejected (degenerate component)";
      sum.log.push_back(log.str());
      continue;
    }

    TraceDraft draft;
    TraceState start;
    start.pose = init.pose;
    start.pose.speed = init.profile.speed;
    start.profile = init.profile;
    start.blob = init.blob;
    start.confident_phi = init.profile.orientation;

    draft.extents.push_back({init.pose.observed_width, init.pose.observed_length});
    draft.dims = update_dimensions(draft.extents, cfg.dim_percentile);
    draft.poses.push_back(start.pose);

    const std::string fwd_stop = trace_direction(start, +1, emags, pre, cfg, draft);

    // The backward phase starts from the init state carrying the best
    // forward dimensions.
    TraceState back = start;
    back.pose.width = draft.dims.width;
    back.pose.length = draft.dims.length;
    back.pose.center = rect_center_from_corner(back.pose.ref_point,
                                               back.pose.ref_corner,
                                               back.pose.orientation,
                                               back.pose.length, back.pose.width);
    const std::string bwd_stop = trace_direction(back, -1, emags, pre, cfg, draft);

    ObjectTrack track;
    track.poses = std::move(draft.poses);
    std::sort(track.poses.begin(), track.poses.end(),
              [](const ObjectPose& a, const ObjectPose& b) { return a.t < b.t; });
    finalize_track(track, draft.dims);

    // Covered init points are consumed regardless of the track's fate;
    // the spawning point is already gone via pop().
    remove_covered_init_points(track, stack, emags);

    const ValidationResult valid = validate_track(track, buildings, cfg);
    log << " -> traced t=[" << track.first_t() << "," << track.last_t()
        << "] fwd: " << fwd_stop << "; bwd: " << bwd_stop
        << "; dims " << track.final_width << "x" << track.final_length;

    if (!valid.keep) {
      track.status = TrackStatus::discarded;
      track.note = valid.reason;
      ++sum.tracks_discarded;
      sum.discard_reasons.push_back(valid.reason);
      log << " -> discarded (" << valid.reason << ")";
      sum.log.push_back(log.str());
      continue;
    }

    track = correct_standing_orientation(std::move(track), cfg);
    if (cfg.smooth_window > 1) {
      track = smooth_trajectory(std::move(track), cfg.smooth_window);
    }

    bool dup = false;
    for (const ObjectTrack& done : completed) {
      if (duplicate_of(track, done, cfg)) {
        dup = true;
        break;
      }
    }
    if (dup) {
      track.status = TrackStatus::discarded;
      track.note = "duplicate";
      ++sum.tracks_discarded;
      sum.discard_reasons.push_back("duplicate");
      log << " -> discarded (duplicate)";
      sum.log.push_back(log.str());
      continue;
    }

    track.status = TrackStatus::completed;
    track.id = next_id++;
    ++sum.tracks_completed;
    log << " -> completed id=" << track.id;
    sum.log.push_back(log.str());
    completed.push_back(std::move(track));
  }
  return completed;
}

}  // namespace emags
