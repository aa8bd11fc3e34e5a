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

#include "evigrid/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace evigrid {

void GridSpec::validate() const {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("GridSpec: rows and cols must be positive");
  }
  if (rows % 2 != 0 || cols % 2 != 0) {
    throw std::invalid_argument(
        "GridSpec: rows and cols must be even so the sensor sits on a cell "
        "boundary at the grid center");
  }
  if (!(cell_m > 0.0) || !std::isfinite(cell_m)) {
    throw std::invalid_argument("GridSpec: cell_m must be finite and > 0");
  }
}

GridSpec GridSpec::from_extents(double length_m, double width_m, double cell_m) {
  if (!(cell_m > 0.0)) {
    throw std::invalid_argument("GridSpec: cell_m must be > 0");
  }
  const auto to_count = [cell_m](double extent, const char* axis) {
    const long long n = std::llround(extent / cell_m);
    if (n <= 0 || std::abs(static_cast<double>(n) * cell_m - extent) >
                      1e-9 * std::max(1.0, extent)) {
      throw std::invalid_argument(std::string("GridSpec: ") + axis +
                                  " extent is not a multiple of cell_m");
    }
    return static_cast<int>(n);
  };
  GridSpec spec{to_count(length_m, "length"), to_count(width_m, "width"), cell_m};
  spec.validate();
  return spec;
}

std::optional<CellIndex> world_to_cell(const GridSpec& spec, double x, double y) {
  const double gx = (x + 0.5 * spec.length_m()) / spec.cell_m;
  const double gy = (y + 0.5 * spec.width_m()) / spec.cell_m;
  const int row = static_cast<int>(std::floor(gx));
  const int col = static_cast<int>(std::floor(gy));
  if (!spec.contains(row, col)) return std::nullopt;
  return CellIndex{row, col};
}

std::array<double, 2> cell_to_world_center(const GridSpec& spec, int row, int col) {
  if (!spec.contains(row, col)) {
    throw std::out_of_range("cell_to_world_center: index outside grid");
  }
  return {(row + 0.5) * spec.cell_m - 0.5 * spec.length_m(),
          (col + 0.5) * spec.cell_m - 0.5 * spec.width_m()};
}

std::vector<CellIndex> raytrace_cells(const GridSpec& spec, double from_x,
                                      double from_y, double to_x, double to_y) {
  // Work in grid coordinates where cell boundaries sit on integers.
  const double gx0 = (from_x + 0.5 * spec.length_m()) / spec.cell_m;
  const double gy0 = (from_y + 0.5 * spec.width_m()) / spec.cell_m;
  const double gx1 = (to_x + 0.5 * spec.length_m()) / spec.cell_m;
  const double gy1 = (to_y + 0.5 * spec.width_m()) / spec.cell_m;

  int r = static_cast<int>(std::floor(gx0));
  int c = static_cast<int>(std::floor(gy0));
  const int r1 = static_cast<int>(std::floor(gx1));
  const int c1 = static_cast<int>(std::floor(gy1));

  std::vector<CellIndex> out;
  out.push_back({r, c});
  if (r == r1 && c == c1) return out;

  const double dgx = gx1 - gx0;
  const double dgy = gy1 - gy0;
  const int step_r = dgx > 0.0 ? 1 : (dgx < 0.0 ? -1 : 0);
  const int step_c = dgy > 0.0 ? 1 : (dgy < 0.0 ? -1 : 0);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // t along the segment of the next row/col boundary crossing.
  double t_max_r = kInf, t_delta_r = kInf;
  if (step_r != 0) {
    const double boundary = step_r > 0 ? r + 1.0 : static_cast<double>(r);
    t_max_r = (boundary - gx0) / dgx;
    t_delta_r = 1.0 / std::abs(dgx);
  }
  double t_max_c = kInf, t_delta_c = kInf;
  if (step_c != 0) {
    const double boundary = step_c > 0 ? c + 1.0 : static_cast<double>(c);
    t_max_c = (boundary - gy0) / dgy;
    t_delta_c = 1.0 / std::abs(dgy);
  }

  const long guard =
      4L * (std::abs(r1 - r) + std::abs(c1 - c)) + 8;
  for (long it = 0; it < guard && !(r == r1 && c == c1); ++it) {
    if (t_max_r < t_max_c) {
      r += step_r;
      t_max_r += t_delta_r;
    } else if (t_max_c < t_max_r) {
      c += step_c;
      t_max_c += t_delta_c;
    } else {
      // Exact corner crossing: both side cells touch the segment there.
      out.push_back({r + step_r, c});
      out.push_back({r, c + step_c});
      r += step_r;
      c += step_c;
      t_max_r += t_delta_r;
      t_max_c += t_delta_c;
    }
    out.push_back({r, c});
  }

  // Destination cell is excluded from the result.
  std::erase(out, CellIndex{r1, c1});
  return out;
}

}  // namespace evigrid
