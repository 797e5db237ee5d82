#pragma once

#include <string>

#include "emags/grid.hpp"

namespace emags {

// EMAGS container layout (all little endian):
//   magic   "EMAG" (4 bytes)
//   version u16 (currently 1)
//   width   u32
//   height  u32
//   cell_size  f64
//   slice_count u32
//   dt      f64
// then per slice:
//   timestamp f64, origin_e f64, origin_n f64,
//   width*height cell records of 7 f32 in the order
//   (m_occ, m_free, v_e, v_n, var_ve, var_vn, cov_ve_vn),
//   row-major (row 0 first, col 0 first within a row).
// Invalid velocity is encoded as NaN variances.

void write_emags(const Emags& emags, const std::string& path);

/// Throws std::runtime_error on unreadable or malformed containers.
Emags read_emags(const std::string& path);

}  // namespace emags
