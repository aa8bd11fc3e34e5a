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

#include "evigrid/grid.hpp"
#include "evigrid/pointcloud.hpp"

namespace evigrid {

struct GeometricIsmParams {
  double h_min = 0.5;   // height band above ground that counts as occupied
  double h_max = 2.0;
  double m_hit = 0.9;   // belief mass placed on Occupied for hit cells
  double m_free = 0.9;  // belief mass placed on Free for carved cells

  void validate() const;
};

// Hand-crafted baseline: cells containing a return whose height above ground
// lies in [h_min, h_max] are marked occupied, every cell on the segment from
// the sensor origin to such a cell is marked free unless already occupied,
// and the marks convert to evidence through the subjective-opinion mapping
// with the uncertainty floored at 1 - m_hit. Returns outside the band or the
// grid contribute nothing, so ground-only regions stay unknown.
EvidentialGrid geometric_ism(const PointCloud& cloud, const GridSpec& spec,
                             const GeometricIsmParams& params = {});

}  // namespace evigrid
