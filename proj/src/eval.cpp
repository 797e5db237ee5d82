#include "emags/eval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

namespace emags {

EvalReport evaluate(const std::vector<LabelRecord>& labels,
                    const GroundTruth& truth, double iou_threshold,
                    double visibility_threshold) {
  EvalReport report;
  report.iou_threshold = iou_threshold;
  report.visibility_threshold = visibility_threshold;

  std::map<int, std::vector<const LabelRecord*>> labels_by_t;
  std::set<int> track_ids;
  for (const LabelRecord& r : labels) {
    labels_by_t[r.t].push_back(&r);
    track_ids.insert(r.track_id);
  }
  report.label_track_count = static_cast<int>(track_ids.size());

  std::map<int, std::vector<const TruthBox*>> truth_by_t;
  std::set<int> actor_ids;
  for (const TruthBox& b : truth.boxes) {
    actor_ids.insert(b.actor);
    if (b.visibility >= visibility_threshold) truth_by_t[b.t].push_back(&b);
  }
  report.truth_actor_count = static_cast<int>(actor_ids.size());

  struct Accum {
    int visible = 0;
    int matched = 0;
    double iou_sum = 0.0;
    double w_err = 0.0;
    double l_err = 0.0;
    int switches = 0;
    int last_track = -1;
  };
  std::map<int, Accum> acc;
  for (int a : actor_ids) acc[a];

  for (const auto& [t, boxes] : truth_by_t) {
    for (const TruthBox* b : boxes) acc[b->actor].visible++;

    struct Pair {
      double iou;
      size_t li, ti;
    };
    std::vector<Pair> pairs;
    const auto it = labels_by_t.find(t);
    if (it != labels_by_t.end()) {
      for (size_t li = 0; li < it->second.size(); ++li) {
        for (size_t ti = 0; ti < boxes.size(); ++ti) {
          const OrientedRect truth_rect{boxes[ti]->center, boxes[ti]->phi,
                                        boxes[ti]->length, boxes[ti]->width};
          const double iou = rect_iou(it->second[li]->rect(), truth_rect);
          if (iou > iou_threshold) pairs.push_back({iou, li, ti});
        }
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.iou != b.iou) return a.iou > b.iou;
      if (a.ti != b.ti) return a.ti < b.ti;
      return a.li < b.li;
    });
    std::set<size_t> used_l, used_t;
    for (const Pair& p : pairs) {
      if (used_l.count(p.li) || used_t.count(p.ti)) continue;
      used_l.insert(p.li);
      used_t.insert(p.ti);
      const TruthBox* b = boxes[p.ti];
      const LabelRecord* r = it->second[p.li];
      Accum& a = acc[b->actor];
      a.matched++;
      a.iou_sum += p.iou;
      // Truth and label axis conventions may be swapped for near-square
      // boxes; compare the sorted dimension pairs.
      const double tw = std::min(b->width, b->length);
      const double tl = std::max(b->width, b->length);
      const double rw = std::min(r->width, r->length);
      const double rl = std::max(r->width, r->length);
      a.w_err += std::abs(tw - rw);
      a.l_err += std::abs(tl - rl);
      if (a.last_track >= 0 && a.last_track != r->track_id) a.switches++;
      a.last_track = r->track_id;
    }
  }

  for (const auto& [actor, a] : acc) {
    ActorMetrics m;
    m.actor = actor;
    m.visible_frames = a.visible;
    m.matched_frames = a.matched;
    m.matched_fraction = a.visible > 0 ? double(a.matched) / a.visible : 0.0;
    m.mean_iou = a.matched > 0 ? a.iou_sum / a.matched : 0.0;
    m.mean_width_error = a.matched > 0 ? a.w_err / a.matched : 0.0;
    m.mean_length_error = a.matched > 0 ? a.l_err / a.matched : 0.0;
    m.id_switches = a.switches;
    report.actors.push_back(m);
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json actors = nlohmann::json::array();
  for (const ActorMetrics& m : report.actors) {
    actors.push_back({{"actor", m.actor},
                      {"visible_frames", m.visible_frames},
                      {"matched_frames", m.matched_frames},
                      {"matched_fraction", m.matched_fraction},
                      {"mean_iou", m.mean_iou},
                      {"mean_width_error", m.mean_width_error},
                      {"mean_length_error", m.mean_length_error},
                      {"id_switches", m.id_switches}});
  }
  nlohmann::json j{{"actors", actors},
                   {"label_track_count", report.label_track_count},
                   {"truth_actor_count", report.truth_actor_count},
                   {"iou_threshold", report.iou_threshold},
                   {"visibility_threshold", report.visibility_threshold}};
  return j.dump(2);
}

}  // namespace emags
