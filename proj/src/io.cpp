#include "emags/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "EMAGS container IO assumes a little-endian host");

namespace emags {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'A', 'G'};
constexpr uint16_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("EMAGS container truncated");
  return v;
}

}  // namespace

void write_emags(const Emags& emags, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  const int w = emags.empty() ? 0 : emags.slices.front().width;
  const int h = emags.empty() ? 0 : emags.slices.front().height;
  const double cs = emags.empty() ? 0.15 : emags.slices.front().cell_size;

  os.write(kMagic, 4);
  put<uint16_t>(os, kVersion);
  put<uint32_t>(os, static_cast<uint32_t>(w));
  put<uint32_t>(os, static_cast<uint32_t>(h));
  put<double>(os, cs);
  put<uint32_t>(os, static_cast<uint32_t>(emags.slices.size()));
  put<double>(os, emags.dt);

  std::vector<float> rec(7);
  for (const GridSlice& s : emags.slices) {
    if (s.width != w || s.height != h)
      throw std::runtime_error("write_emags: slice dimensions differ");
    put<double>(os, s.timestamp);
    put<double>(os, s.origin_e);
    put<double>(os, s.origin_n);
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) {
        rec[0] = s.m_occ(row, col);
        rec[1] = s.m_free(row, col);
        rec[2] = s.v_e(row, col);
        rec[3] = s.v_n(row, col);
        rec[4] = s.var_ve(row, col);
        rec[5] = s.var_vn(row, col);
        rec[6] = s.cov_ve_vn(row, col);
        os.write(reinterpret_cast<const char*>(rec.data()), 7 * sizeof(float));
      }
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Emags read_emags(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not an EMAGS container: " + path);
  const auto version = get<uint16_t>(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported EMAGS container version");
  const auto w = static_cast<int>(get<uint32_t>(is));
  const auto h = static_cast<int>(get<uint32_t>(is));
  const double cs = get<double>(is);
  const auto count = get<uint32_t>(is);
  const double dt = get<double>(is);
  if (w <= 0 || h <= 0 || !(cs > 0.0) || w > (1 << 20) || h > (1 << 20))
    throw std::runtime_error("EMAGS container header invalid");

  Emags out;
  out.dt = dt;
  out.slices.reserve(count);
  double prev_ts = -std::numeric_limits<double>::infinity();
  std::vector<float> rec(7);
  for (uint32_t i = 0; i < count; ++i) {
    GridSlice s(w, h, cs);
    s.timestamp = get<double>(is);
    s.origin_e = get<double>(is);
    s.origin_n = get<double>(is);
    if (!(s.timestamp > prev_ts))
      throw std::runtime_error("EMAGS slice timestamps not strictly increasing");
    prev_ts = s.timestamp;
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) {
        is.read(reinterpret_cast<char*>(rec.data()), 7 * sizeof(float));
        if (!is) throw std::runtime_error("EMAGS container truncated");
        s.m_occ(row, col) = rec[0];
        s.m_free(row, col) = rec[1];
        s.v_e(row, col) = rec[2];
        s.v_n(row, col) = rec[3];
        s.var_ve(row, col) = rec[4];
        s.var_vn(row, col) = rec[5];
        s.cov_ve_vn(row, col) = rec[6];
      }
    }
    out.slices.push_back(std::move(s));
  }
  return out;
}

}  // namespace emags
