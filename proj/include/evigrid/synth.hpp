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

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evigrid/grid.hpp"
#include "evigrid/pointcloud.hpp"

namespace evigrid {

enum class Material : std::uint8_t {
  kGround = 0,
  kVehicle = 1,
  kPedestrian = 2,
  kVegetation = 3,
  kBuilding = 4,
};

// Reflectivity base value; return intensity is base / range^2.
double material_reflectivity(Material m);

// Vertical prism obstacle: an oriented box footprint or a circular one,
// extruded from base_z to base_z + height.
struct Obstacle {
  enum class Shape : std::uint8_t { kBox = 0, kCylinder = 1 };

  Shape shape = Shape::kBox;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;       // box orientation; unused for cylinders
  double size_x = 1.0;    // box footprint extents
  double size_y = 1.0;
  double radius = 0.5;    // cylinder footprint
  double height = 1.0;
  double base_z = 0.0;
  Material material = Material::kVehicle;
  int object_id = 0;

  bool footprint_contains(double px, double py, double margin = 0.0) const;
};

// Procedural world: a ground plane z = slope_x * x + slope_y * y plus
// non-overlapping obstacles, none of which contain the sensor origin.
struct Scene {
  double slope_x = 0.0;
  double slope_y = 0.0;
  std::vector<Obstacle> obstacles;

  double ground_z(double x, double y) const {
    return slope_x * x + slope_y * y;
  }
};

struct SceneParams {
  int n_vehicles = 8;
  int n_pedestrians = 6;
  int n_static = 5;
  double extent_x = 36.0;  // obstacle centers stay within +-extent
  double extent_y = 24.0;
  double slope_x = 0.0;    // |slope| <= tan(2 deg)
  double slope_y = 0.0;
  double origin_clearance = 3.0;
  int max_retries = 200;
};

// Deterministic for a seed; rejection-samples non-overlapping footprints
// (0.25 m separation margin). Throws std::runtime_error if a placement
// cannot be found within max_retries.
Scene generate_scene(std::uint64_t seed, const SceneParams& params);

struct LidarConfig {
  int channels = 32;
  double vfov_min_deg = -25.0;
  double vfov_max_deg = 15.0;
  double azimuth_step_deg = 1.0;
  double max_range = 80.0;
  double mount_height = 1.9;
  double noise_sigma = 0.01;

  void validate() const;
  int azimuth_count() const;
  double elevation_deg(int channel) const;
};

struct LabeledPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
  Material material = Material::kGround;
  int object_id = 0;  // 0 = ground
};

struct LabeledCloud {
  std::vector<LabeledPoint> points;
  double sensor_height = 1.9;

  PointCloud to_point_cloud() const;
};

struct RayHit {
  double t = 0.0;
  Material material = Material::kGround;
  int object_id = 0;
};

// Nearest intersection of the ray origin + t * dir with ground plane, boxes
// and cylinders, for t in (0.05, max_range].
std::optional<RayHit> trace_ray(const Scene& scene, const double origin[3],
                                const double dir[3], double max_range);

// Casts channels x azimuths rays from (0, 0, mount_height). Hit ranges are
// perturbed along the ray with N(0, noise_sigma) drawn from a per-ray
// counter-based stream, so the cloud is identical however rays are scheduled.
LabeledCloud raycast(const Scene& scene, const LidarConfig& config,
                     std::uint64_t seed);

// Labels from the dense cloud: any non-ground return in a cell marks it
// Occupied, ground-only cells are Free, untouched cells Unknown. Objects
// with at least min_hits returns in the sparse cloud additionally get every
// cell whose center lies under their footprint set to Occupied; the fill
// never downgrades a cell. Throws std::invalid_argument when the two clouds
// disagree on sensor pose.
GroundTruthGrid ground_truth_from_hd(const Scene& scene,
                                     const LabeledCloud& hd_cloud,
                                     const LabeledCloud& sparse_cloud,
                                     const GridSpec& spec, int min_hits = 50);

}  // namespace evigrid
