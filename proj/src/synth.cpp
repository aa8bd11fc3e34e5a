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

#include "evigrid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "evigrid/rng.hpp"

namespace evigrid {

double material_reflectivity(Material m) {
  switch (m) {
    case Material::kGround:
      return 0.4;
    case Material::kVehicle:
      return 0.9;
    case Material::kPedestrian:
      return 0.5;
    case Material::kVegetation:
      return 0.6;
    case Material::kBuilding:
      return 0.7;
  }
  return 0.0;
}

bool Obstacle::footprint_contains(double px, double py, double margin) const {
  const double dx = px - x;
  const double dy = py - y;
  if (shape == Shape::kCylinder) {
    return std::hypot(dx, dy) <= radius + margin;
  }
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * size_x + margin &&
         std::abs(ly) <= 0.5 * size_y + margin;
}

namespace {

struct FootprintRect {
  double x, y, yaw, hx, hy;
};

// Separating-axis test for two oriented rectangles, inflated by margin.
bool rects_overlap(const FootprintRect& a, const FootprintRect& b, double margin) {
  const FootprintRect* rects[2] = {&a, &b};
  for (int which = 0; which < 2; ++which) {
    const double yaw = rects[which]->yaw;
    for (int axis = 0; axis < 2; ++axis) {
      const double ang = yaw + axis * (std::numbers::pi / 2.0);
      const double ux = std::cos(ang), uy = std::sin(ang);
      const double centers = std::abs((b.x - a.x) * ux + (b.y - a.y) * uy);
      const auto radius = [&](const FootprintRect& r) {
        const double c = std::cos(r.yaw - ang), s = std::sin(r.yaw - ang);
        return std::abs(c) * r.hx + std::abs(s) * r.hy;
      };
      if (centers > radius(a) + radius(b) + margin) return false;
    }
  }
  return true;
}

FootprintRect rect_of(const Obstacle& o) {
  return FootprintRect{o.x, o.y, o.yaw, 0.5 * o.size_x, 0.5 * o.size_y};
}

bool footprints_overlap(const Obstacle& a, const Obstacle& b, double margin) {
  using Shape = Obstacle::Shape;
  if (a.shape == Shape::kCylinder && b.shape == Shape::kCylinder) {
    return std::hypot(a.x - b.x, a.y - b.y) <= a.radius + b.radius + margin;
  }
  if (a.shape == Shape::kCylinder) return footprints_overlap(b, a, margin);
  if (b.shape == Shape::kCylinder) {
    // Distance from the circle center to the rectangle.
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    const double qx = std::max(0.0, std::abs(lx) - 0.5 * a.size_x);
    const double qy = std::max(0.0, std::abs(ly) - 0.5 * a.size_y);
    return std::hypot(qx, qy) <= b.radius + margin;
  }
  return rects_overlap(rect_of(a), rect_of(b), margin);
}

constexpr double kPlacementMargin = 0.25;

bool placement_ok(const Scene& scene, const Obstacle& candidate,
                  double origin_clearance) {
  if (candidate.footprint_contains(0.0, 0.0, origin_clearance)) return false;
  for (const Obstacle& existing : scene.obstacles) {
    if (footprints_overlap(existing, candidate, kPlacementMargin)) return false;
  }
  return true;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  constexpr double kMaxSlope = 0.035;  // tan(2 deg)
  if (std::abs(params.slope_x) > kMaxSlope ||
      std::abs(params.slope_y) > kMaxSlope) {
    throw std::invalid_argument("generate_scene: ground slope above 2 degrees");
  }
  Scene scene;
  scene.slope_x = params.slope_x;
  scene.slope_y = params.slope_y;

  Rng rng = Rng::stream(seed, 0x5ce4eull);
  int next_id = 1;

  const auto place = [&](auto&& make) {
    for (int retry = 0; retry < params.max_retries; ++retry) {
      Obstacle candidate = make();
      candidate.base_z = scene.ground_z(candidate.x, candidate.y);
      candidate.object_id = next_id;
      if (placement_ok(scene, candidate, params.origin_clearance)) {
        scene.obstacles.push_back(candidate);
        ++next_id;
        return;
      }
    }
    throw std::runtime_error("generate_scene: placement failed after retries");
  };

  for (int i = 0; i < params.n_vehicles; ++i) {
    place([&] {
      Obstacle o;
      o.shape = Obstacle::Shape::kBox;
      o.x = rng.uniform(-params.extent_x, params.extent_x);
      o.y = rng.uniform(-params.extent_y, params.extent_y);
      o.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
      o.size_x = rng.uniform(3.5, 12.0);
      o.size_y = rng.uniform(1.6, 2.6);
      o.height = rng.uniform(1.4, 3.6);
      o.material = Material::kVehicle;
      return o;
    });
  }
  for (int i = 0; i < params.n_pedestrians; ++i) {
    place([&] {
      Obstacle o;
      o.shape = Obstacle::Shape::kCylinder;
      o.x = rng.uniform(-params.extent_x, params.extent_x);
      o.y = rng.uniform(-params.extent_y, params.extent_y);
      o.radius = rng.uniform(0.25, 0.35);
      o.height = rng.uniform(1.5, 1.95);
      o.material = Material::kPedestrian;
      return o;
    });
  }
  for (int i = 0; i < params.n_static; ++i) {
    const bool vegetation = i % 2 == 0;
    place([&] {
      Obstacle o;
      if (vegetation) {
        o.shape = Obstacle::Shape::kCylinder;
        o.radius = rng.uniform(0.3, 1.5);
        o.height = rng.uniform(2.0, 8.0);
        o.material = Material::kVegetation;
      } else {
        o.shape = Obstacle::Shape::kBox;
        o.yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
        o.size_x = rng.uniform(4.0, 14.0);
        o.size_y = rng.uniform(4.0, 14.0);
        o.height = rng.uniform(3.0, 10.0);
        o.material = Material::kBuilding;
      }
      o.x = rng.uniform(-params.extent_x, params.extent_x);
      o.y = rng.uniform(-params.extent_y, params.extent_y);
      return o;
    });
  }
  return scene;
}

void LidarConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("LidarConfig: channels >= 1");
  if (!(azimuth_step_deg > 0.0)) {
    throw std::invalid_argument("LidarConfig: azimuth_step_deg > 0");
  }
  if (!(max_range > 0.0)) throw std::invalid_argument("LidarConfig: max_range > 0");
  if (!(mount_height > 0.0)) {
    throw std::invalid_argument("LidarConfig: mount_height > 0");
  }
  if (noise_sigma < 0.0) throw std::invalid_argument("LidarConfig: noise_sigma >= 0");
  if (!(vfov_min_deg <= vfov_max_deg)) {
    throw std::invalid_argument("LidarConfig: vertical fov inverted");
  }
}

int LidarConfig::azimuth_count() const {
  return static_cast<int>(std::floor(360.0 / azimuth_step_deg + 0.5));
}

double LidarConfig::elevation_deg(int channel) const {
  if (channels == 1) return 0.5 * (vfov_min_deg + vfov_max_deg);
  return vfov_min_deg + static_cast<double>(channel) *
                            (vfov_max_deg - vfov_min_deg) /
                            static_cast<double>(channels - 1);
}

PointCloud LabeledCloud::to_point_cloud() const {
  PointCloud cloud;
  cloud.sensor_height = sensor_height;
  cloud.points.reserve(points.size());
  for (const LabeledPoint& p : points) {
    cloud.points.push_back({p.x, p.y, p.z, p.intensity});
  }
  return cloud;
}

namespace {

constexpr double kMinT = 0.05;

std::optional<double> intersect_ground(const Scene& scene, const double o[3],
                                       const double d[3]) {
  const double denom = d[2] - scene.slope_x * d[0] - scene.slope_y * d[1];
  if (denom == 0.0) return std::nullopt;
  const double t =
      (scene.slope_x * o[0] + scene.slope_y * o[1] - o[2]) / denom;
  if (t <= kMinT) return std::nullopt;
  return t;
}

std::optional<double> intersect_box(const Obstacle& b, const double o[3],
                                    const double d[3]) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double ox = c * (o[0] - b.x) + s * (o[1] - b.y);
  const double oy = -s * (o[0] - b.x) + c * (o[1] - b.y);
  const double oz = o[2];
  const double dx = c * d[0] + s * d[1];
  const double dy = -s * d[0] + c * d[1];
  const double dz = d[2];

  const double lo[3] = {-0.5 * b.size_x, -0.5 * b.size_y, b.base_z};
  const double hi[3] = {0.5 * b.size_x, 0.5 * b.size_y, b.base_z + b.height};
  const double ro[3] = {ox, oy, oz};
  const double rd[3] = {dx, dy, dz};

  double t0 = kMinT;
  double t1 = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (rd[axis] == 0.0) {
      if (ro[axis] < lo[axis] || ro[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double ta = (lo[axis] - ro[axis]) / rd[axis];
    double tb = (hi[axis] - ro[axis]) / rd[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

std::optional<double> intersect_cylinder(const Obstacle& cyl, const double o[3],
                                         const double d[3]) {
  const double zlo = cyl.base_z;
  const double zhi = cyl.base_z + cyl.height;
  double best = std::numeric_limits<double>::infinity();

  // Lateral surface.
  const double ox = o[0] - cyl.x, oy = o[1] - cyl.y;
  const double a = d[0] * d[0] + d[1] * d[1];
  if (a > 0.0) {
    const double bq = 2.0 * (ox * d[0] + oy * d[1]);
    const double cq = ox * ox + oy * oy - cyl.radius * cyl.radius;
    const double disc = bq * bq - 4.0 * a * cq;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (const double t : {(-bq - sq) / (2.0 * a), (-bq + sq) / (2.0 * a)}) {
        if (t > kMinT && t < best) {
          const double z = o[2] + t * d[2];
          if (z >= zlo && z <= zhi) best = t;
        }
      }
    }
  }
  // Caps.
  if (d[2] != 0.0) {
    for (const double zcap : {zlo, zhi}) {
      const double t = (zcap - o[2]) / d[2];
      if (t > kMinT && t < best) {
        const double px = o[0] + t * d[0] - cyl.x;
        const double py = o[1] + t * d[1] - cyl.y;
        if (px * px + py * py <= cyl.radius * cyl.radius) best = t;
      }
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

}  // namespace

std::optional<RayHit> trace_ray(const Scene& scene, const double origin[3],
                                const double dir[3], double max_range) {
  std::optional<RayHit> best;
  if (const auto t = intersect_ground(scene, origin, dir); t && *t <= max_range) {
    best = RayHit{*t, Material::kGround, 0};
  }
  for (const Obstacle& o : scene.obstacles) {
    const auto t = o.shape == Obstacle::Shape::kBox
                       ? intersect_box(o, origin, dir)
                       : intersect_cylinder(o, origin, dir);
    if (t && *t <= max_range && (!best || *t < best->t)) {
      best = RayHit{*t, o.material, o.object_id};
    }
  }
  return best;
}

LabeledCloud raycast(const Scene& scene, const LidarConfig& config,
                     std::uint64_t seed) {
  config.validate();
  LabeledCloud cloud;
  cloud.sensor_height = config.mount_height;
  const double origin[3] = {0.0, 0.0, config.mount_height};
  const int n_az = config.azimuth_count();
  const double deg = std::numbers::pi / 180.0;

  for (int ch = 0; ch < config.channels; ++ch) {
    const double el = config.elevation_deg(ch) * deg;
    const double cos_el = std::cos(el), sin_el = std::sin(el);
    for (int ai = 0; ai < n_az; ++ai) {
      const double az = static_cast<double>(ai) * config.azimuth_step_deg * deg;
      const double dir[3] = {cos_el * std::cos(az), cos_el * std::sin(az), sin_el};
      const auto hit = trace_ray(scene, origin, dir, config.max_range);
      if (!hit) continue;

      double range = hit->t;
      if (config.noise_sigma > 0.0) {
        const std::uint64_t ray_index =
            static_cast<std::uint64_t>(ch) * static_cast<std::uint64_t>(n_az) +
            static_cast<std::uint64_t>(ai);
        range += Rng::stream(seed, 0x4e015eull, ray_index).normal(config.noise_sigma);
        range = std::max(range, 0.01);
      }
      LabeledPoint p;
      p.x = origin[0] + range * dir[0];
      p.y = origin[1] + range * dir[1];
      p.z = origin[2] + range * dir[2];
      p.intensity = material_reflectivity(hit->material) / (hit->t * hit->t);
      p.material = hit->material;
      p.object_id = hit->object_id;
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

GroundTruthGrid ground_truth_from_hd(const Scene& scene,
                                     const LabeledCloud& hd_cloud,
                                     const LabeledCloud& sparse_cloud,
                                     const GridSpec& spec, int min_hits) {
  if (hd_cloud.sensor_height != sparse_cloud.sensor_height) {
    throw std::invalid_argument(
        "ground_truth_from_hd: clouds disagree on sensor pose");
  }
  GroundTruthGrid grid(spec);
  std::vector<std::uint8_t> has_obstacle(spec.num_cells(), 0);
  std::vector<std::uint8_t> has_ground(spec.num_cells(), 0);

  for (const LabeledPoint& p : hd_cloud.points) {
    const auto cell = world_to_cell(spec, p.x, p.y);
    if (!cell) continue;
    const std::size_t i = spec.flat(cell->row, cell->col);
    if (p.material == Material::kGround) {
      has_ground[i] = 1;
    } else {
      has_obstacle[i] = 1;
    }
  }
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (has_obstacle[i]) {
      grid.cells[i] = CellLabel::kOccupied;
    } else if (has_ground[i]) {
      grid.cells[i] = CellLabel::kFree;
    }
  }

  // Objects the sparse sensor saw often enough get their whole footprint
  // marked, interior included.
  std::unordered_map<int, int> sparse_hits;
  for (const LabeledPoint& p : sparse_cloud.points) {
    if (p.object_id > 0) ++sparse_hits[p.object_id];
  }
  for (const Obstacle& o : scene.obstacles) {
    const auto it = sparse_hits.find(o.object_id);
    if (it == sparse_hits.end() || it->second < min_hits) continue;
    // Conservative footprint bounding box, clipped to the grid.
    const double reach = o.shape == Obstacle::Shape::kCylinder
                             ? o.radius
                             : 0.5 * std::hypot(o.size_x, o.size_y);
    const auto lo = world_to_cell(
        spec, std::max(o.x - reach, -0.5 * spec.length_m() + 1e-9),
        std::max(o.y - reach, -0.5 * spec.width_m() + 1e-9));
    const auto hi = world_to_cell(
        spec, std::min(o.x + reach, 0.5 * spec.length_m() - 1e-9),
        std::min(o.y + reach, 0.5 * spec.width_m() - 1e-9));
    if (!lo || !hi) continue;
    for (int r = lo->row; r <= hi->row; ++r) {
      for (int c = lo->col; c <= hi->col; ++c) {
        const auto center = cell_to_world_center(spec, r, c);
        if (o.footprint_contains(center[0], center[1])) {
          grid.at(r, c) = CellLabel::kOccupied;
        }
      }
    }
  }
  return grid;
}

}  // namespace evigrid
