#include "emags/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace emags {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& field, json& seen) {
  if (j.contains(key)) {
    field = j.at(key).get<T>();
    seen.erase(key);
  }
}

}  // namespace

void apply_config_json(PipelineConfig& cfg, const std::string& json_text) {
  json j = json::parse(json_text);
  if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
  json remaining = j;

  read_key(j, "sigma_spatial", cfg.sigma_spatial, remaining);
  read_key(j, "sigma_temporal", cfg.sigma_temporal, remaining);
  read_key(j, "traversal_min_amplitude", cfg.traversal_min_amplitude, remaining);
  read_key(j, "min_cluster_cells", cfg.min_cluster_cells, remaining);
  read_key(j, "band_sigma", cfg.band_sigma, remaining);
  read_key(j, "occupancy_floor", cfg.occupancy_floor, remaining);
  read_key(j, "init_max_variance", cfg.init_max_variance, remaining);
  read_key(j, "k_pred", cfg.k_pred, remaining);
  read_key(j, "seed_area_m2", cfg.seed_area_m2, remaining);
  read_key(j, "loss_w_occupancy", cfg.loss_w_occupancy, remaining);
  read_key(j, "loss_w_orientation", cfg.loss_w_orientation, remaining);
  read_key(j, "loss_w_distance", cfg.loss_w_distance, remaining);
  read_key(j, "loss_w_speed", cfg.loss_w_speed, remaining);
  read_key(j, "max_coast", cfg.max_coast, remaining);
  read_key(j, "plaus_area_factor", cfg.plaus_area_factor, remaining);
  read_key(j, "plaus_orient_jump_rad", cfg.plaus_orient_jump_rad, remaining);
  read_key(j, "plaus_orient_min_speed", cfg.plaus_orient_min_speed, remaining);
  read_key(j, "standing_speed", cfg.standing_speed, remaining);
  read_key(j, "duplicate_overlap", cfg.duplicate_overlap, remaining);
  read_key(j, "dim_percentile", cfg.dim_percentile, remaining);
  read_key(j, "max_length", cfg.max_length, remaining);
  read_key(j, "max_width", cfg.max_width, remaining);
  read_key(j, "min_length", cfg.min_length, remaining);
  read_key(j, "max_aspect", cfg.max_aspect, remaining);
  read_key(j, "building_fraction", cfg.building_fraction, remaining);
  read_key(j, "static_path_length", cfg.static_path_length, remaining);
  read_key(j, "static_max_speed", cfg.static_max_speed, remaining);
  read_key(j, "standing_speed_post", cfg.standing_speed_post, remaining);
  read_key(j, "jerk_limit", cfg.jerk_limit, remaining);
  read_key(j, "jerk_fraction", cfg.jerk_fraction, remaining);
  read_key(j, "smooth_window", cfg.smooth_window, remaining);
  read_key(j, "jobs", cfg.jobs, remaining);

  if (!remaining.empty()) {
    throw std::runtime_error("unknown config key: " + remaining.begin().key());
  }
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  PipelineConfig cfg;
  apply_config_json(cfg, ss.str());
  return cfg;
}

}  // namespace emags
