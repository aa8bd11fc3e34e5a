/*
 * Copyright 2026 The evigrid Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "evigrid/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "evigrid/binary_io.hpp"
#include "evigrid/rng.hpp"

namespace evigrid {

namespace {

constexpr char kMagic[5] = "EVPC";
constexpr std::uint8_t kVersion = 1;

}  // namespace

void save_point_cloud(const std::string& path, const PointCloud& cloud) {
  ByteWriter w;
  w.magic(kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(cloud.points.size()));
  w.f32(static_cast<float>(cloud.sensor_height));
  for (const Point& p : cloud.points) {
    w.f32(static_cast<float>(p.x));
    w.f32(static_cast<float>(p.y));
    w.f32(static_cast<float>(p.z));
    w.f32(static_cast<float>(p.intensity));
  }
  write_file(path, w.bytes());
}

PointCloud load_point_cloud(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  ByteReader r(bytes);
  r.expect_magic(kMagic, "evpc");
  if (r.u8() != kVersion) throw FormatError("evpc: unsupported version");
  const std::uint32_t count = r.u32();
  PointCloud cloud;
  cloud.sensor_height = static_cast<double>(r.f32());
  if (!(cloud.sensor_height > 0.0) || !std::isfinite(cloud.sensor_height)) {
    throw FormatError("evpc: sensor_height must be finite and > 0");
  }
  if (r.remaining() < static_cast<std::size_t>(count) * 16) {
    throw TruncationError("evpc: payload truncated");
  }
  if (r.remaining() > static_cast<std::size_t>(count) * 16) {
    throw DimensionError("evpc: payload length does not match point count");
  }
  cloud.points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Point p;
    p.x = static_cast<double>(r.f32());
    p.y = static_cast<double>(r.f32());
    p.z = static_cast<double>(r.f32());
    p.intensity = static_cast<double>(r.f32());
    cloud.points.push_back(p);
  }
  return cloud;
}

namespace {

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

PointCloud normalize_intensity(const PointCloud& cloud, double scale_percentile) {
  if (cloud.points.empty()) return cloud;
  if (!(scale_percentile > 0.0) || scale_percentile > 100.0) {
    throw std::invalid_argument("normalize_intensity: percentile must be in (0, 100]");
  }
  std::vector<double> values;
  values.reserve(cloud.points.size());
  for (const Point& p : cloud.points) values.push_back(p.intensity);
  double scale = percentile(values, scale_percentile);
  if (scale <= 0.0) scale = *std::max_element(values.begin(), values.end());
  if (scale <= 0.0) return cloud;  // all-zero channel stays untouched

  PointCloud out = cloud;
  for (Point& p : out.points) {
    p.intensity = std::clamp(p.intensity / scale, 0.0, 1.0);
  }
  return out;
}

void rotate_xy(double angle_rad, double& x, double& y) {
  // Quarter turns map the lattice onto itself; snap so 90-degree
  // augmentation commutes exactly with grid indexing.
  const double quarter = angle_rad / (std::numbers::pi / 2.0);
  const double k = std::round(quarter);
  if (std::abs(quarter - k) < 1e-12 && std::abs(k) < 4.6e15) {
    const long long q = ((static_cast<long long>(k) % 4) + 4) % 4;
    const double x0 = x, y0 = y;
    switch (q) {
      case 0: return;
      case 1: x = -y0; y = x0; return;
      case 2: x = -x0; y = -y0; return;
      default: x = y0; y = -x0; return;
    }
  }
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const double x0 = x, y0 = y;
  x = c * x0 - s * y0;
  y = s * x0 + c * y0;
}

PointCloud rotate_z(const PointCloud& cloud, double angle_rad) {
  if (!std::isfinite(angle_rad)) {
    throw std::invalid_argument("rotate_z: angle must be finite");
  }
  PointCloud out = cloud;
  for (Point& p : out.points) rotate_xy(angle_rad, p.x, p.y);
  return out;
}

GroundTruthGrid rotate_label_grid(const GroundTruthGrid& grid, double angle_rad) {
  if (!std::isfinite(angle_rad)) {
    throw std::invalid_argument("rotate_label_grid: angle must be finite");
  }
  GroundTruthGrid out(grid.spec);
  for (int r = 0; r < grid.spec.rows; ++r) {
    for (int c = 0; c < grid.spec.cols; ++c) {
      auto [x, y] = cell_to_world_center(grid.spec, r, c);
      rotate_xy(-angle_rad, x, y);
      const auto src = world_to_cell(grid.spec, x, y);
      out.at(r, c) = src ? grid.at(src->row, src->col) : CellLabel::kUnknown;
    }
  }
  return out;
}

PillarSet pillarize(const PointCloud& cloud, const GridSpec& spec,
                    const PillarLimits& limits, std::uint64_t rng_seed) {
  if (limits.feature_dim != 9) {
    throw std::invalid_argument("pillarize: feature_dim must be 9");
  }
  if (limits.max_pillars <= 0 || limits.max_points <= 0) {
    throw std::invalid_argument("pillarize: limits must be positive");
  }

  // Bucket in-grid points by cell; std::map keeps pillars in row-major order
  // so the encoding is canonical regardless of input permutation details.
  std::map<std::pair<int, int>, std::vector<int>> buckets;
  for (int i = 0; i < static_cast<int>(cloud.points.size()); ++i) {
    const Point& p = cloud.points[static_cast<std::size_t>(i)];
    if (const auto cell = world_to_cell(spec, p.x, p.y)) {
      buckets[{cell->row, cell->col}].push_back(i);
    }
  }

  std::vector<std::pair<int, int>> pillar_cells;
  pillar_cells.reserve(buckets.size());
  for (const auto& [cell, _] : buckets) pillar_cells.push_back(cell);

  if (static_cast<int>(pillar_cells.size()) > limits.max_pillars) {
    Rng rng = Rng::stream(rng_seed, 0x70696c6cull);  // pillar-drop stream
    const std::vector<int> keep = rng.sample_indices(
        static_cast<int>(pillar_cells.size()), limits.max_pillars);
    std::vector<std::pair<int, int>> kept;
    kept.reserve(keep.size());
    for (int k : keep) kept.push_back(pillar_cells[static_cast<std::size_t>(k)]);
    pillar_cells = std::move(kept);
  }

  PillarSet set;
  set.spec = spec;
  set.limits = limits;
  set.num_pillars = static_cast<int>(pillar_cells.size());
  set.features.assign(static_cast<std::size_t>(limits.max_pillars) *
                          static_cast<std::size_t>(limits.max_points) *
                          static_cast<std::size_t>(limits.feature_dim),
                      0.0f);
  set.mask.assign(static_cast<std::size_t>(limits.max_pillars) *
                      static_cast<std::size_t>(limits.max_points),
                  0);
  set.pillar_cells.reserve(pillar_cells.size());

  for (int pi = 0; pi < set.num_pillars; ++pi) {
    const auto [row, col] = pillar_cells[static_cast<std::size_t>(pi)];
    set.pillar_cells.push_back(CellIndex{row, col});
    std::vector<int>& members = buckets[{row, col}];
    if (static_cast<int>(members.size()) > limits.max_points) {
      // Per-pillar stream keyed by the flat cell index: independent of how
      // many other pillars were sampled.
      Rng rng = Rng::stream(rng_seed, 0x706f696eull, spec.flat(row, col));
      const std::vector<int> keep = rng.sample_indices(
          static_cast<int>(members.size()), limits.max_points);
      std::vector<int> kept;
      kept.reserve(keep.size());
      for (int k : keep) kept.push_back(members[static_cast<std::size_t>(k)]);
      members = std::move(kept);
    }

    double mx = 0.0, my = 0.0, mz = 0.0;
    for (int idx : members) {
      const Point& p = cloud.points[static_cast<std::size_t>(idx)];
      mx += p.x;
      my += p.y;
      mz += p.z;
    }
    const double n = static_cast<double>(members.size());
    mx /= n;
    my /= n;
    mz /= n;
    const auto [cx, cy] = cell_to_world_center(spec, row, col);

    for (int pj = 0; pj < static_cast<int>(members.size()); ++pj) {
      const Point& p = cloud.points[static_cast<std::size_t>(members[static_cast<std::size_t>(pj)])];
      float* f = set.features.data() + set.feature_offset(pi, pj);
      f[0] = static_cast<float>(p.x);
      f[1] = static_cast<float>(p.y);
      f[2] = static_cast<float>(p.z);
      f[3] = static_cast<float>(p.intensity);
      f[4] = static_cast<float>(p.x - mx);
      f[5] = static_cast<float>(p.y - my);
      f[6] = static_cast<float>(p.z - mz);
      f[7] = static_cast<float>(p.x - cx);
      f[8] = static_cast<float>(p.y - cy);
      set.mask[set.mask_offset(pi, pj)] = 1;
    }
  }
  return set;
}

}  // namespace evigrid
