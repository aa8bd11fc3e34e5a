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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "evigrid/evidential.hpp"

namespace evigrid {

struct CellIndex {
  int row = 0;
  int col = 0;
  bool operator==(const CellIndex&) const = default;
};

// Metric grid geometry. The sensor sits at the world origin, which is the
// grid center; rows run along vehicle-forward x, columns along left y.
// Extents are derived as rows * cell_m / cols * cell_m so they are integer
// multiples of the cell size by construction.
struct GridSpec {
  int rows = 512;
  int cols = 352;
  double cell_m = 0.16;

  // Cell sizes cross the f32 container boundary, so two specs describe the
  // same grid when they agree at f32 resolution.
  bool operator==(const GridSpec& other) const {
    return rows == other.rows && cols == other.cols &&
           static_cast<float>(cell_m) == static_cast<float>(other.cell_m);
  }

  double length_m() const { return rows * cell_m; }
  double width_m() const { return cols * cell_m; }
  std::size_t num_cells() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t flat(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(col);
  }
  bool contains(int row, int col) const {
    return row >= 0 && row < rows && col >= 0 && col < cols;
  }

  // Throws std::invalid_argument unless rows/cols are positive and even and
  // cell_m > 0. Even counts keep the sensor on a cell boundary at the center.
  void validate() const;

  // Builds a spec from metric extents; they must be integer multiples of
  // cell_m (relative tolerance 1e-9).
  static GridSpec from_extents(double length_m, double width_m, double cell_m);
};

// World (x, y) to cell index; out-of-bounds coordinates yield nullopt.
std::optional<CellIndex> world_to_cell(const GridSpec& spec, double x, double y);

// Center of a cell in world coordinates. Throws std::out_of_range for
// indices outside the grid.
std::array<double, 2> cell_to_world_center(const GridSpec& spec, int row, int col);

// Supercover traversal: every cell touched by the segment from -> to, in
// order, start cell included and destination cell excluded. When the segment
// passes exactly through a cell corner both corner-adjacent side cells are
// included. If both endpoints share a cell the result is that single cell.
// Indices are not clipped to the grid extent.
std::vector<CellIndex> raytrace_cells(const GridSpec& spec, double from_x,
                                      double from_y, double to_x, double to_y);

// Raster of per-cell evidence, row-major.
struct EvidentialGrid {
  GridSpec spec;
  std::vector<EvidencePair> cells;

  EvidentialGrid() : cells(spec.num_cells()) {}
  explicit EvidentialGrid(const GridSpec& s) : spec(s), cells(s.num_cells()) {}

  EvidencePair& at(int row, int col) { return cells[spec.flat(row, col)]; }
  const EvidencePair& at(int row, int col) const {
    return cells[spec.flat(row, col)];
  }
};

enum class CellLabel : std::uint8_t {
  kFree = 0,
  kOccupied = 1,
  kUnknown = 2,
};

// Raster of ground-truth labels, row-major.
struct GroundTruthGrid {
  GridSpec spec;
  std::vector<CellLabel> cells;

  GroundTruthGrid() : cells(spec.num_cells(), CellLabel::kUnknown) {}
  explicit GroundTruthGrid(const GridSpec& s)
      : spec(s), cells(s.num_cells(), CellLabel::kUnknown) {}

  CellLabel& at(int row, int col) { return cells[spec.flat(row, col)]; }
  const CellLabel& at(int row, int col) const {
    return cells[spec.flat(row, col)];
  }
};

}  // namespace evigrid
