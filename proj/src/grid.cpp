#include "emags/grid.hpp"

#include <stdexcept>

namespace emags {

Cell unknown_cell() { return Cell{}; }

double occupancy_probability(const Cell& cell) {
  return 0.5 * double(cell.m_occ) + 0.5 * (1.0 - double(cell.m_free));
}

GridSlice::GridSlice(int w, int h, double cs)
    : width(w), height(h), cell_size(cs) {
  m_occ = Eigen::ArrayXXf::Zero(h, w);
  m_free = Eigen::ArrayXXf::Zero(h, w);
  v_e = Eigen::ArrayXXf::Zero(h, w);
  v_n = Eigen::ArrayXXf::Zero(h, w);
  var_ve = Eigen::ArrayXXf::Constant(h, w, std::numeric_limits<float>::quiet_NaN());
  var_vn = Eigen::ArrayXXf::Constant(h, w, std::numeric_limits<float>::quiet_NaN());
  cov_ve_vn = Eigen::ArrayXXf::Zero(h, w);
}

Cell GridSlice::at(int col, int row) const {
  Cell c;
  c.m_occ = m_occ(row, col);
  c.m_free = m_free(row, col);
  c.v_e = v_e(row, col);
  c.v_n = v_n(row, col);
  c.var_ve = var_ve(row, col);
  c.var_vn = var_vn(row, col);
  c.cov_ve_vn = cov_ve_vn(row, col);
  return c;
}

void GridSlice::set(int col, int row, const Cell& c) {
  m_occ(row, col) = c.m_occ;
  m_free(row, col) = c.m_free;
  v_e(row, col) = c.v_e;
  v_n(row, col) = c.v_n;
  var_ve(row, col) = c.var_ve;
  var_vn(row, col) = c.var_vn;
  cov_ve_vn(row, col) = c.cov_ve_vn;
}

std::optional<CellIndex> world_to_index(const GridSlice& slice, double e,
                                        double n) {
  const int col = static_cast<int>(std::floor((e - slice.origin_e) / slice.cell_size));
  const int row = static_cast<int>(std::floor((n - slice.origin_n) / slice.cell_size));
  if (!slice.in_bounds(col, row)) return std::nullopt;
  return CellIndex{col, row, 0};
}

Vec2 index_to_world_center(const GridSlice& slice, int col, int row) {
  return slice.cell_center(col, row);
}

Emags align_snapshots(std::vector<Snapshot> snapshots) {
  Emags out;
  if (snapshots.empty()) return out;
  const double cs = snapshots.front().grid.cell_size;
  double prev_ts = -std::numeric_limits<double>::infinity();
  out.slices.reserve(snapshots.size());
  for (auto& snap : snapshots) {
    GridSlice slice = std::move(snap.grid);
    if (slice.cell_size != cs)
      throw std::invalid_argument("align_snapshots: mixed cell sizes");
    if (!(slice.timestamp > prev_ts))
      throw std::invalid_argument("align_snapshots: timestamps not strictly increasing");
    prev_ts = slice.timestamp;
    // Snap to whole cells so static content stays on one lattice.
    slice.origin_e = std::round((snap.ego.e + slice.origin_e) / cs) * cs;
    slice.origin_n = std::round((snap.ego.n + slice.origin_n) / cs) * cs;
    out.slices.push_back(std::move(slice));
  }
  out.dt = out.slices.size() > 1
               ? (out.slices.back().timestamp - out.slices.front().timestamp) /
                     double(out.slices.size() - 1)
               : 0.1;
  return out;
}

}  // namespace emags
