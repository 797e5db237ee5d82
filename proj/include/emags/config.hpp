#pragma once

#include <string>

namespace emags {

/// Every tunable of the labeling pipeline. Defaults are baked in; a JSON
/// config file may override any subset of keys (same names as fields).
struct PipelineConfig {
  // preprocessing
  double sigma_spatial = 1.0;    // cells
  double sigma_temporal = 1.0;   // slices
  double traversal_min_amplitude = 0.3;
  int min_cluster_cells = 4;

  // gating
  double band_sigma = 2.0;       // the pervasive two-sigma convention
  double occupancy_floor = 0.55; // lowest admissible occupancy threshold
  double init_max_variance = 1.0;  // m^2/s^2, per axis, init prerequisite

  // silhouette prediction
  double k_pred = 2.0;

  // search-seed selection
  double seed_area_m2 = 0.5;     // one seed per this much silhouette area
  double loss_w_occupancy = 1.0;
  double loss_w_orientation = 1.0;
  double loss_w_distance = 1.0;
  double loss_w_speed = 1.0;

  // tracing
  int max_coast = 3;             // prediction-only steps through occlusion
  double plaus_area_factor = 3.0;
  double plaus_orient_jump_rad = 1.0471975511965976;  // 60 deg
  double plaus_orient_min_speed = 1.0;                // m/s
  double standing_speed = 0.5;   // m/s, extraction keeps last orientation
  double duplicate_overlap = 0.5;
  double dim_percentile = 0.90;  // robust width/length estimate

  // post processing
  double max_length = 20.0;      // m
  double max_width = 4.0;        // m
  double min_length = 0.2;       // m
  double max_aspect = 8.0;
  double building_fraction = 0.5;
  double static_path_length = 1.0;   // m
  double static_max_speed = 0.3;     // m/s
  double standing_speed_post = 0.3;  // m/s, orientation interpolation
  double jerk_limit = 5.0;           // m/s^2 second difference
  double jerk_fraction = 0.2;
  int smooth_window = 0;             // odd window; 0/1 disables smoothing

  int jobs = 1;

  // Set from the data by the pipeline driver, not a tuning knob.
  double cell_size = 0.15;
};

/// Loads overrides from a JSON object file; unknown keys are an error.
PipelineConfig load_config(const std::string& path);
void apply_config_json(PipelineConfig& cfg, const std::string& json_text);

}  // namespace emags
