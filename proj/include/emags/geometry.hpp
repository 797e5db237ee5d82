#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

namespace emags {

using Vec2 = Eigen::Vector2d;

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Absolute circular distance between two angles, in [0, pi].
double circ_dist(double a, double b);

/// Circular mean of a set of angles via summed sin/cos.
double circ_mean(const std::vector<double>& angles);

/// Standard deviation of the wrapped residuals about a circular mean
/// (population form, radians).
double circ_std(const std::vector<double>& angles, double mean);

/// Rectangle with arbitrary orientation. `length` extends along the
/// heading `phi`, `width` across it.
struct OrientedRect {
  Vec2 center{0.0, 0.0};
  double phi = 0.0;
  double length = 0.0;
  double width = 0.0;

  Vec2 axis_long() const { return {std::cos(phi), std::sin(phi)}; }
  Vec2 axis_cross() const { return {-std::sin(phi), std::cos(phi)}; }

  // Corner k has local sign pattern (+l,+w), (+l,-w), (-l,-w), (-l,+w).
  std::array<Vec2, 4> corners() const;
  Vec2 corner(int k) const;

  bool contains(const Vec2& p, double margin = 0.0) const;
  double area() const { return length * width; }

  /// Grows both dimensions by `margin` on every side.
  OrientedRect inflated(double margin) const;
};

/// Area of a simple polygon (shoelace, absolute value).
double polygon_area(const std::vector<Vec2>& poly);

/// Clips a convex polygon against the half planes of a convex clip
/// polygon (Sutherland-Hodgman). Both wound consistently.
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                              const std::vector<Vec2>& clip);

double intersection_area(const OrientedRect& a, const OrientedRect& b);
double rect_iou(const OrientedRect& a, const OrientedRect& b);

/// Even-odd point-in-polygon on a closed ring; points on an edge count
/// as inside.
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& ring);

struct GridCellRef {
  int col = 0;
  int row = 0;
};

/// All lattice cells a segment passes through, in travel order
/// (Amanatides-Woo traversal). The lattice has cell (0,0) covering
/// [origin, origin + cell_size)^2; cells outside [0,w)x[0,h) are skipped.
std::vector<GridCellRef> traverse_segment(const Vec2& from, const Vec2& to,
                                          const Vec2& origin, double cell_size,
                                          int w, int h);

}  // namespace emags
