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
#include <string>
#include <vector>

#include "evigrid/grid.hpp"

namespace evigrid {

// One lidar return in the sensor frame (sensor at the origin).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
};

struct PointCloud {
  std::vector<Point> points;
  // Height of the sensor above ground; the ground plane sits at
  // z = -sensor_height in the sensor frame.
  double sensor_height = 1.9;
};

// .evpc container: magic "EVPC", u8 version=1, u32 point count,
// f32 sensor_height, then 4 x f32 (x, y, z, intensity) per point, all
// little-endian. Coordinates are rounded to f32 on save.
void save_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_point_cloud(const std::string& path);

// Divides intensities by the given percentile of their distribution
// (linear-interpolation percentile) and clamps to [0, 1]. An all-zero
// intensity channel is returned unchanged. Geometry is untouched.
PointCloud normalize_intensity(const PointCloud& cloud,
                               double scale_percentile = 99.0);

// Rotates (x, y) about the vertical sensor axis; z and intensity unchanged.
// Angles within 1e-12 of a quarter-turn multiple use the exact lattice
// mapping so 90-degree rotations commute exactly with grid operations.
PointCloud rotate_z(const PointCloud& cloud, double angle_rad);

// Rotates one point; shared quarter-turn handling with rotate_z.
void rotate_xy(double angle_rad, double& x, double& y);

// Nearest-neighbor label resampling: each destination cell center is
// rotated by -angle and sampled from the source; off-grid sources become
// Unknown.
GroundTruthGrid rotate_label_grid(const GroundTruthGrid& grid, double angle_rad);

struct PillarLimits {
  int max_pillars = 10000;
  int max_points = 100;
  int feature_dim = 9;
};

// Dense pillar tensor: features[max_pillars][max_points][feature_dim] with
// per-point feature (x, y, z, intensity, x-xm, y-ym, z-zm, x-xc, y-yc) where
// (xm, ym, zm) is the mean of the pillar's encoded points and (xc, yc) the
// center of its grid cell. Slots beyond num_pillars / the per-pillar point
// count are zero with mask 0.
struct PillarSet {
  GridSpec spec;
  PillarLimits limits;
  int num_pillars = 0;
  std::vector<float> features;
  std::vector<std::uint8_t> mask;         // [max_pillars][max_points]
  std::vector<CellIndex> pillar_cells;    // size num_pillars, unique cells

  std::size_t feature_offset(int pillar, int point) const {
    return (static_cast<std::size_t>(pillar) *
                static_cast<std::size_t>(limits.max_points) +
            static_cast<std::size_t>(point)) *
           static_cast<std::size_t>(limits.feature_dim);
  }
  std::size_t mask_offset(int pillar, int point) const {
    return static_cast<std::size_t>(pillar) *
               static_cast<std::size_t>(limits.max_points) +
           static_cast<std::size_t>(point);
  }
};

// Buckets in-grid points by cell, randomly subsamples pillars over
// max_pillars and points over max_points (seeded, counter-based, so results
// do not depend on scheduling), and encodes the 9-feature vector per point.
// Throws std::invalid_argument if limits.feature_dim != 9.
PillarSet pillarize(const PointCloud& cloud, const GridSpec& spec,
                    const PillarLimits& limits, std::uint64_t rng_seed);

}  // namespace evigrid
