#include "emags/geometry.hpp"

#include <algorithm>

namespace emags {

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

double circ_dist(double a, double b) { return std::abs(wrap_angle(a - b)); }

double circ_mean(const std::vector<double>& angles) {
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  return std::atan2(s, c);
}

double circ_std(const std::vector<double>& angles, double mean) {
  if (angles.empty()) return 0.0;
  double acc = 0.0;
  for (double a : angles) {
    const double d = circ_dist(a, mean);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(angles.size()));
}

std::array<Vec2, 4> OrientedRect::corners() const {
  const Vec2 al = axis_long() * (0.5 * length);
  const Vec2 aw = axis_cross() * (0.5 * width);
  return {center + al + aw, center + al - aw, center - al - aw,
          center - al + aw};
}

Vec2 OrientedRect::corner(int k) const { return corners()[k & 3]; }

bool OrientedRect::contains(const Vec2& p, double margin) const {
  const Vec2 d = p - center;
  return std::abs(d.dot(axis_long())) <= 0.5 * length + margin &&
         std::abs(d.dot(axis_cross())) <= 0.5 * width + margin;
}

OrientedRect OrientedRect::inflated(double margin) const {
  OrientedRect r = *this;
  r.length = std::max(0.0, length + 2.0 * margin);
  r.width = std::max(0.0, width + 2.0 * margin);
  return r;
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(acc);
}

namespace {

// Signed area of the clip polygon decides which side is "inside".
double ring_signed_area(const std::vector<Vec2>& poly) {
  double acc = 0.0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * acc;
}

}  // namespace

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  const double orient = ring_signed_area(clip) >= 0.0 ? 1.0 : -1.0;
  std::vector<Vec2> poly = subject;
  for (size_t i = 0; i < clip.size() && !poly.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto inside = [&](const Vec2& p) {
      return orient * (edge.x() * (p.y() - a.y()) -
                       edge.y() * (p.x() - a.x())) >= -1e-12;
    };
    auto intersect = [&](const Vec2& p, const Vec2& q) {
      const Vec2 d = q - p;
      const double denom = edge.x() * d.y() - edge.y() * d.x();
      if (std::abs(denom) < 1e-18) return p;
      const double t =
          (edge.x() * (a.y() - p.y()) - edge.y() * (a.x() - p.x())) / denom;
      return Vec2(p + t * d);
    };
    std::vector<Vec2> out;
    out.reserve(poly.size() + 2);
    for (size_t j = 0; j < poly.size(); ++j) {
      const Vec2& cur = poly[j];
      const Vec2& prev = poly[(j + poly.size() - 1) % poly.size()];
      const bool cur_in = inside(cur);
      const bool prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) out.push_back(intersect(prev, cur));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(intersect(prev, cur));
      }
    }
    poly = std::move(out);
  }
  return poly;
}

double intersection_area(const OrientedRect& a, const OrientedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  return polygon_area(clip_convex(pa, pb));
}

double rect_iou(const OrientedRect& a, const OrientedRect& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& ring) {
  const size_t n = ring.size();
  if (n < 3) return false;
  // Boundary points count as inside.
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    const Vec2 ab = b - a;
    const Vec2 ap = p - a;
    const double cross = ab.x() * ap.y() - ab.y() * ap.x();
    if (std::abs(cross) < 1e-12) {
      const double t = ab.squaredNorm() > 0.0 ? ap.dot(ab) / ab.squaredNorm() : 0.0;
      if (t >= -1e-12 && t <= 1.0 + 1e-12) return true;
    }
  }
  bool in = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x) in = !in;
    }
  }
  return in;
}

std::vector<GridCellRef> traverse_segment(const Vec2& from, const Vec2& to,
                                          const Vec2& origin, double cell_size,
                                          int w, int h) {
  std::vector<GridCellRef> out;
  const Vec2 p0 = (from - origin) / cell_size;
  const Vec2 p1 = (to - origin) / cell_size;
  const Vec2 d = p1 - p0;
  const double len = d.norm();

  int col = static_cast<int>(std::floor(p0.x()));
  int row = static_cast<int>(std::floor(p0.y()));
  const int col_end = static_cast<int>(std::floor(p1.x()));
  const int row_end = static_cast<int>(std::floor(p1.y()));

  auto emit = [&](int c, int r) {
    if (c >= 0 && c < w && r >= 0 && r < h) out.push_back({c, r});
  };
  emit(col, row);
  if (len < 1e-12) return out;

  const int step_c = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
  const int step_r = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
  const double inv_dx = d.x() != 0.0 ? 1.0 / d.x() : 0.0;
  const double inv_dy = d.y() != 0.0 ? 1.0 / d.y() : 0.0;

  double t_max_c = step_c != 0
                       ? ((col + (step_c > 0 ? 1 : 0)) - p0.x()) * inv_dx
                       : std::numeric_limits<double>::infinity();
  double t_max_r = step_r != 0
                       ? ((row + (step_r > 0 ? 1 : 0)) - p0.y()) * inv_dy
                       : std::numeric_limits<double>::infinity();
  const double t_delta_c = step_c != 0 ? std::abs(inv_dx)
                                       : std::numeric_limits<double>::infinity();
  const double t_delta_r = step_r != 0 ? std::abs(inv_dy)
                                       : std::numeric_limits<double>::infinity();

  // Hard cap protects against numerical stalls on grazing hits.
  const int max_steps = std::abs(col_end - col) + std::abs(row_end - row) + 2;
  for (int i = 0; i < max_steps; ++i) {
    if (col == col_end && row == row_end) break;
    if (std::abs(t_max_c - t_max_r) < 1e-12) {
      // Exact corner crossing: step diagonally, the segment does not
      // pass through the side cells.
      col += step_c;
      row += step_r;
      t_max_c += t_delta_c;
      t_max_r += t_delta_r;
    } else if (t_max_c < t_max_r) {
      col += step_c;
      t_max_c += t_delta_c;
    } else {
      row += step_r;
      t_max_r += t_delta_r;
    }
    emit(col, row);
  }
  return out;
}

}  // namespace emags
