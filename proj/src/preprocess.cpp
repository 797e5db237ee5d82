#include "emags/preprocess.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

namespace emags {

namespace {

void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// 1D convolution along the given axis, boundary samples replicated.
Eigen::ArrayXXf convolve_axis(const Eigen::ArrayXXf& in,
                              const std::vector<double>& kernel, bool along_cols) {
  const int radius = static_cast<int>(kernel.size()) / 2;
  if (radius == 0) return in;
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Eigen::ArrayXXf out(rows, cols);
  if (along_cols) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int cc = std::clamp(c + k, 0, cols - 1);
          acc += kernel[k + radius] * double(in(r, cc));
        }
        out(r, c) = static_cast<float>(acc);
      }
    }
  } else {
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int rr = std::clamp(r + k, 0, rows - 1);
          acc += kernel[k + radius] * double(in(rr, c));
        }
        out(r, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

struct UnionLattice {
  Vec2 origin;
  int width = 0;
  int height = 0;
  std::vector<GridCellRef> offsets;
};

UnionLattice union_lattice(const Emags& emags) {
  UnionLattice u;
  if (emags.empty()) return u;
  const double cs = emags.slices.front().cell_size;
  double min_e = std::numeric_limits<double>::infinity();
  double min_n = std::numeric_limits<double>::infinity();
  double max_e = -std::numeric_limits<double>::infinity();
  double max_n = -std::numeric_limits<double>::infinity();
  for (const GridSlice& s : emags.slices) {
    min_e = std::min(min_e, s.origin_e);
    min_n = std::min(min_n, s.origin_n);
    max_e = std::max(max_e, s.origin_e + s.width * cs);
    max_n = std::max(max_n, s.origin_n + s.height * cs);
  }
  u.origin = {min_e, min_n};
  u.width = static_cast<int>(std::lround((max_e - min_e) / cs));
  u.height = static_cast<int>(std::lround((max_n - min_n) / cs));
  u.offsets.reserve(emags.slices.size());
  for (const GridSlice& s : emags.slices) {
    u.offsets.push_back(
        {static_cast<int>(std::lround((s.origin_e - min_e) / cs)),
         static_cast<int>(std::lround((s.origin_n - min_n) / cs))});
  }
  return u;
}

}  // namespace

PoVolume smooth_3d(const Emags& emags, double sigma_spatial,
                   double sigma_temporal, int jobs) {
  PoVolume vol;
  if (emags.empty()) return vol;
  const UnionLattice u = union_lattice(emags);
  const int T = emags.slice_count();
  vol.width = u.width;
  vol.height = u.height;
  vol.origin = u.origin;
  vol.cell_size = emags.slices.front().cell_size;
  vol.slice_width = emags.slices.front().width;
  vol.slice_height = emags.slices.front().height;
  vol.window_offset = u.offsets;
  vol.planes.assign(T, Eigen::ArrayXXf::Constant(u.height, u.width, 0.5f));

  for (int t = 0; t < T; ++t) {
    const GridSlice& s = emags.slices[t];
    vol.planes[t].block(u.offsets[t].row, u.offsets[t].col, s.height, s.width) =
        s.occupancy_plane();
  }

  const auto spatial = gaussian_kernel(sigma_spatial);
  if (spatial.size() > 1) {
    parallel_for(T, jobs, [&](int t) {
      vol.planes[t] = convolve_axis(vol.planes[t], spatial, true);
      vol.planes[t] = convolve_axis(vol.planes[t], spatial, false);
    });
  }

  const auto temporal = gaussian_kernel(sigma_temporal);
  if (temporal.size() > 1) {
    const int radius = static_cast<int>(temporal.size()) / 2;
    std::vector<Eigen::ArrayXXf> smoothed(T);
    parallel_for(T, jobs, [&](int t) {
      Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(u.height, u.width);
      for (int k = -radius; k <= radius; ++k) {
        const int tt = std::clamp(t + k, 0, T - 1);
        acc += temporal[k + radius] * vol.planes[tt].cast<double>();
      }
      smoothed[t] = acc.cast<float>();
    });
    vol.planes = std::move(smoothed);
  }
  return vol;
}

namespace {

// Otsu split of a nonnegative value histogram; returns the bin midpoint
// threshold maximizing inter-class variance.
double otsu_threshold(const Eigen::ArrayXXf& values) {
  const float vmax = values.maxCoeff();
  if (!(vmax > 1e-9f)) return std::numeric_limits<double>::infinity();
  constexpr int kBins = 64;
  std::array<long, kBins> hist{};
  const float scale = kBins / vmax;
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      int b = static_cast<int>(values(r, c) * scale);
      b = std::clamp(b, 0, kBins - 1);
      hist[b]++;
    }
  }
  const long total = values.size();
  double sum_all = 0.0;
  for (int b = 0; b < kBins; ++b) sum_all += hist[b] * (b + 0.5);
  long w0 = 0;
  double sum0 = 0.0;
  double best_var = -1.0;
  int best_bin = 0;
  for (int b = 0; b < kBins - 1; ++b) {
    w0 += hist[b];
    if (w0 == 0) continue;
    const long w1 = total - w0;
    if (w1 == 0) break;
    sum0 += hist[b] * (b + 0.5);
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = double(w0) * double(w1) * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_bin = b;
    }
  }
  return (best_bin + 1) / double(kBins) * vmax;
}

inline float sample(const Eigen::ArrayXXf& p, int r, int c) {
  r = std::clamp(r, 0, static_cast<int>(p.rows()) - 1);
  c = std::clamp(c, 0, static_cast<int>(p.cols()) - 1);
  return p(r, c);
}

}  // namespace

std::vector<BorderMask> detect_borders(const PoVolume& vol, int jobs) {
  const int T = static_cast<int>(vol.planes.size());
  std::vector<BorderMask> out(T);
  parallel_for(T, jobs, [&](int t) {
    const Eigen::ArrayXXf& p = vol.planes[t];
    const int H = vol.height, W = vol.width;
    // Central differences; clamped sampling degrades to one-sided at edges.
    Eigen::ArrayXXf gx(H, W), gy(H, W), d2(H, W);
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        gx(r, c) = 0.5f * (sample(p, r, c + 1) - sample(p, r, c - 1));
        gy(r, c) = 0.5f * (sample(p, r + 1, c) - sample(p, r - 1, c));
      }
    }
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        const float pxx = sample(p, r, c + 1) - 2 * p(r, c) + sample(p, r, c - 1);
        const float pyy = sample(p, r + 1, c) - 2 * p(r, c) + sample(p, r - 1, c);
        const float pxy = 0.25f * (sample(p, r + 1, c + 1) - sample(p, r + 1, c - 1) -
                                   sample(p, r - 1, c + 1) + sample(p, r - 1, c - 1));
        const float gxx = gx(r, c), gyy = gy(r, c);
        const float g2 = gxx * gxx + gyy * gyy;
        d2(r, c) = g2 > 1e-12f
                       ? (gxx * gxx * pxx + 2 * gxx * gyy * pxy + gyy * gyy * pyy) / g2
                       : 0.0f;
      }
    }

    const int col0 = vol.window_offset[t].col;
    const int row0 = vol.window_offset[t].row;
    const int sw = vol.slice_width, sh = vol.slice_height;
    Eigen::ArrayXXf gmag(sh, sw);
    for (int r = 0; r < sh; ++r)
      for (int c = 0; c < sw; ++c)
        gmag(r, c) = std::sqrt(gx(r + row0, c + col0) * gx(r + row0, c + col0) +
                               gy(r + row0, c + col0) * gy(r + row0, c + col0));
    const double thresh = otsu_threshold(gmag);

    BorderMask bm;
    bm.mask = BoolGrid::Constant(sh, sw, false);
    for (int r = 0; r < sh; ++r) {
      for (int c = 0; c < sw; ++c) {
        if (gmag(r, c) <= thresh) continue;
        const int ur = r + row0, uc = c + col0;
        const double ang = std::atan2(gy(ur, uc), gx(ur, uc));
        const int dc = static_cast<int>(std::lround(std::cos(ang)));
        const int dr = static_cast<int>(std::lround(std::sin(ang)));
        if (dc == 0 && dr == 0) continue;
        const float here = d2(ur, uc);
        const float fwd = sample(d2, ur + dr, uc + dc);
        const float bwd = sample(d2, ur - dr, uc - dc);
        // Inflection: the directional second derivative crosses zero
        // between this cell and a neighbor along the gradient.
        if (here * fwd <= 0.0f || here * bwd <= 0.0f) bm.mask(r, c) = true;
      }
    }
    out[t] = std::move(bm);
  });
  return out;
}

TraversalMap detect_traversals(const PoVolume& vol, double min_amplitude) {
  TraversalMap map;
  map.width = vol.width;
  map.height = vol.height;
  map.origin = vol.origin;
  map.cell_size = vol.cell_size;
  map.intervals.assign(static_cast<size_t>(vol.width) * vol.height, {});
  const int T = static_cast<int>(vol.planes.size());
  if (T == 0) return map;

  // A traversal needs actual occupancy evidence at the peak; occlusion
  // shadows swing free <-> unknown (0.5) and must not register.
  constexpr float kOccupiedEvidence = 0.6f;

  std::vector<float> profile(T);
  for (int r = 0; r < vol.height; ++r) {
    for (int c = 0; c < vol.width; ++c) {
      float lo = 1.0f, hi = 0.0f;
      for (int t = 0; t < T; ++t) {
        profile[t] = vol.planes[t](r, c);
        lo = std::min(lo, profile[t]);
        hi = std::max(hi, profile[t]);
      }
      if (hi - lo < min_amplitude || hi < kOccupiedEvidence) continue;
      const float thresh = 0.5f * (hi + lo);
      auto& list = map.intervals[static_cast<size_t>(r) * vol.width + c];
      int run_start = -1;
      for (int t = 0; t < T; ++t) {
        const bool high = profile[t] >= thresh;
        if (high && run_start < 0) run_start = t;
        if ((!high || t == T - 1) && run_start >= 0) {
          // Runs touching the sequence boundary count as traversals too.
          list.push_back({run_start, high ? t : t - 1});
          run_start = -1;
        }
      }
    }
  }
  return map;
}

std::vector<std::vector<InitPoint>> cluster_init_points(
    const TraversalMap& traversals, const std::vector<BorderMask>& borders,
    const PoVolume& vol, int min_cluster_cells) {
  const int T = static_cast<int>(vol.planes.size());
  std::vector<std::vector<InitPoint>> out(T);
  const int sw = vol.slice_width, sh = vol.slice_height;

  for (int t = 0; t < T; ++t) {
    const int col0 = vol.window_offset[t].col;
    const int row0 = vol.window_offset[t].row;
    BoolGrid active = BoolGrid::Constant(sh, sw, false);
    for (int r = 0; r < sh; ++r) {
      for (int c = 0; c < sw; ++c) {
        if (borders[t].at(c, r)) continue;
        for (const TimeInterval& iv : traversals.cell(c + col0, r + row0)) {
          if (iv.contains(t)) {
            active(r, c) = true;
            break;
          }
        }
      }
    }

    BoolGrid visited = BoolGrid::Constant(sh, sw, false);
    for (int r = 0; r < sh; ++r) {
      for (int c = 0; c < sw; ++c) {
        if (!active(r, c) || visited(r, c)) continue;
        std::vector<GridCellRef> cluster;
        std::deque<GridCellRef> queue{{c, r}};
        visited(r, c) = true;
        while (!queue.empty()) {
          const GridCellRef cur = queue.front();
          queue.pop_front();
          cluster.push_back(cur);
          for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
              if (dr == 0 && dc == 0) continue;
              const int nc = cur.col + dc, nr = cur.row + dr;
              if (nc < 0 || nc >= sw || nr < 0 || nr >= sh) continue;
              if (visited(nr, nc) || !active(nr, nc)) continue;
              visited(nr, nc) = true;
              queue.push_back({nc, nr});
            }
          }
        }
        if (static_cast<int>(cluster.size()) < min_cluster_cells) continue;

        double wsum = 0.0, we = 0.0, wn = 0.0;
        for (const GridCellRef& cell : cluster) {
          const double w = std::max(1e-6f, vol.at_slice(t, cell.col, cell.row));
          wsum += w;
          we += w * cell.col;
          wn += w * cell.row;
        }
        const double ce = we / wsum, cn = wn / wsum;
        // Snap the weighted centroid to the nearest cluster cell.
        const GridCellRef* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const GridCellRef& cell : cluster) {
          const double d = (cell.col - ce) * (cell.col - ce) +
                           (cell.row - cn) * (cell.row - cn);
          if (d < best_d) {
            best_d = d;
            best = &cell;
          }
        }
        out[t].push_back(
            {CellIndex{best->col, best->row, t}, double(cluster.size())});
      }
    }
    // Deterministic order within a slice: strongest first, then row-major.
    std::sort(out[t].begin(), out[t].end(), [](const InitPoint& a, const InitPoint& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.index.row != b.index.row) return a.index.row < b.index.row;
      return a.index.col < b.index.col;
    });
  }
  return out;
}

Preprocessed preprocess_all(const Emags& emags, const PipelineConfig& cfg) {
  Preprocessed pre;
  pre.volume = smooth_3d(emags, cfg.sigma_spatial, cfg.sigma_temporal, cfg.jobs);
  pre.borders = detect_borders(pre.volume, cfg.jobs);
  const TraversalMap traversals =
      detect_traversals(pre.volume, cfg.traversal_min_amplitude);
  pre.init_points = cluster_init_points(traversals, pre.borders, pre.volume,
                                        cfg.min_cluster_cells);
  return pre;
}

void dump_preprocess_pgm(const Preprocessed& pre, const Emags& emags,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (int t = 0; t < emags.slice_count(); ++t) {
    const GridSlice& s = emags.slices[t];
    std::ofstream os(fs::path(dir) / ("pre_" + std::to_string(t) + ".pgm"),
                     std::ios::binary);
    os << "P5\n" << s.width << " " << s.height << "\n255\n";
    std::vector<unsigned char> rowbuf(s.width);
    for (int r = s.height - 1; r >= 0; --r) {  // north up
      for (int c = 0; c < s.width; ++c) {
        unsigned char v =
            static_cast<unsigned char>(255.0 * (1.0 - s.po(c, r)));
        if (pre.borders[t].at(c, r)) v = 0;
        rowbuf[c] = v;
      }
      for (const InitPoint& ip : pre.init_points[t]) {
        if (ip.index.row == r) rowbuf[ip.index.col] = 255;
      }
      os.write(reinterpret_cast<const char*>(rowbuf.data()), s.width);
    }
  }
}

}  // namespace emags
