#include "emags/render.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace emags {

namespace {

Rgb direction_color(double heading) {
  // Hue from the heading, full saturation.
  double h = (heading + kPi) / (2.0 * kPi) * 6.0;  // [0, 6)
  h = std::clamp(h, 0.0, 5.999);
  const int i = static_cast<int>(h);
  const double f = h - i;
  const unsigned char v = 230, p = 30;
  const auto q = static_cast<unsigned char>(v - (v - p) * f);
  const auto u = static_cast<unsigned char>(p + (v - p) * f);
  switch (i) {
    case 0: return {v, u, p};
    case 1: return {q, v, p};
    case 2: return {p, v, u};
    case 3: return {p, q, v};
    case 4: return {u, p, v};
    default: return {v, p, q};
  }
}

}  // namespace

std::vector<std::string> render_frames(const Emags& emags,
                                       const std::vector<LabelRecord>& labels,
                                       int t0, int t1, const std::string& out_dir) {
  if (emags.empty()) throw std::runtime_error("render: empty stack");
  if (t0 < 0 || t1 >= emags.slice_count() || t0 > t1)
    throw std::out_of_range("render: slice range out of bounds");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<std::string> written;
  for (int t = t0; t <= t1; ++t) {
    const GridSlice& s = emags.slices[t];
    const int W = s.width, H = s.height;
    std::vector<Rgb> img(static_cast<size_t>(W) * H);

    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        const double po = s.po(c, r);
        const auto g = static_cast<unsigned char>(
            std::clamp(255.0 * (1.0 - po), 0.0, 255.0));
        Rgb px{g, g, g};
        const Cell cell = s.at(c, r);
        if (cell.valid_velocity() && cell.speed() > 0.5 && po > 0.6) {
          px = direction_color(cell.heading());
        }
        img[static_cast<size_t>(H - 1 - r) * W + c] = px;
      }
    }

    auto put_pixel = [&](const Vec2& world) {
      const auto idx = world_to_index(s, world.x(), world.y());
      if (!idx) return;
      img[static_cast<size_t>(H - 1 - idx->row) * W + idx->col] = {255, 128, 0};
    };
    for (const LabelRecord& rec : labels) {
      if (rec.t != t) continue;
      const auto corners = rec.rect().corners();
      for (int k = 0; k < 4; ++k) {
        const Vec2 a = corners[k];
        const Vec2 b = corners[(k + 1) % 4];
        const double len = (b - a).norm();
        const int steps = std::max(1, static_cast<int>(len / (0.25 * s.cell_size)));
        for (int i = 0; i <= steps; ++i) {
          put_pixel(a + (b - a) * (double(i) / steps));
        }
      }
    }

    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.ppm", t);
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P6\n" << W << " " << H << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.data()),
             static_cast<std::streamsize>(img.size() * 3));
    written.push_back(path);
  }
  return written;
}

Rgb read_ppm_pixel(const std::string& path, int x, int y) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int w, h, maxval;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6") throw std::runtime_error("not a P6 file: " + path);
  is.get();  // single whitespace after the header
  if (x < 0 || x >= w || y < 0 || y >= h)
    throw std::out_of_range("pixel out of range");
  is.seekg((static_cast<std::streamoff>(y) * w + x) * 3, std::ios::cur);
  Rgb px;
  is.read(reinterpret_cast<char*>(&px), 3);
  return px;
}

}  // namespace emags
