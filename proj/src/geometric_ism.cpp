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

#include "evigrid/geometric_ism.hpp"

#include <stdexcept>
#include <vector>

#include "evigrid/evidential.hpp"

namespace evigrid {

void GeometricIsmParams::validate() const {
  if (!(h_min >= 0.0) || !(h_min < h_max)) {
    throw std::invalid_argument("GeometricIsmParams: need 0 <= h_min < h_max");
  }
  if (!(m_hit > 0.0 && m_hit < 1.0) || !(m_free > 0.0 && m_free < 1.0)) {
    throw std::invalid_argument("GeometricIsmParams: masses must be in (0, 1)");
  }
}

EvidentialGrid geometric_ism(const PointCloud& cloud, const GridSpec& spec,
                             const GeometricIsmParams& params) {
  params.validate();
  spec.validate();
  if (!(cloud.sensor_height > 0.0)) {
    throw std::invalid_argument("geometric_ism: sensor_height must be > 0");
  }

  enum : std::uint8_t { kNone = 0, kFree = 1, kHit = 2 };
  std::vector<std::uint8_t> marks(spec.num_cells(), kNone);

  std::vector<CellIndex> hits;
  for (const Point& p : cloud.points) {
    const double height = p.z + cloud.sensor_height;
    if (height < params.h_min || height > params.h_max) continue;
    if (const auto cell = world_to_cell(spec, p.x, p.y)) {
      std::uint8_t& mark = marks[spec.flat(cell->row, cell->col)];
      if (mark != kHit) {
        mark = kHit;
        hits.push_back(*cell);
      }
    }
  }

  // Carve free space from the origin toward every hit cell; occupied wins.
  for (const CellIndex& hit : hits) {
    const auto target = cell_to_world_center(spec, hit.row, hit.col);
    for (const CellIndex& cell :
         raytrace_cells(spec, 0.0, 0.0, target[0], target[1])) {
      if (!spec.contains(cell.row, cell.col)) continue;
      std::uint8_t& mark = marks[spec.flat(cell.row, cell.col)];
      if (mark == kNone) mark = kFree;
    }
  }

  const double u_min = 1.0 - params.m_hit;
  const auto to_evidence = [u_min](const BeliefMass& mass) {
    const DirichletBinary d = opinion_to_dirichlet(mass_to_opinion(mass), u_min);
    return EvidencePair{d.alpha_free - 1.0, d.alpha_occ - 1.0};
  };
  const EvidencePair hit_evidence =
      to_evidence({0.0, params.m_hit, 1.0 - params.m_hit});
  const EvidencePair free_evidence =
      to_evidence({params.m_free, 0.0, 1.0 - params.m_free});

  EvidentialGrid grid(spec);
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i] == kHit) {
      grid.cells[i] = hit_evidence;
    } else if (marks[i] == kFree) {
      grid.cells[i] = free_evidence;
    }
  }
  return grid;
}

}  // namespace evigrid
