#pragma once

#include <string>
#include <vector>

#include "emags/grid.hpp"
#include "emags/labels.hpp"

namespace emags {

/// Writes one PPM (P6) per slice in [t0, t1]: grayscale occupancy
/// background, direction-colored dynamic cells, and label rectangles in
/// orange. Rows are flipped so north points up. Returns the file paths.
std::vector<std::string> render_frames(const Emags& emags,
                                       const std::vector<LabelRecord>& labels,
                                       int t0, int t1, const std::string& out_dir);

struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
};

/// Reads back a pixel from a rendered P6 file; used by tests.
Rgb read_ppm_pixel(const std::string& path, int x, int y);

}  // namespace emags
