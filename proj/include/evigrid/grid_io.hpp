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
#include <variant>
#include <vector>

#include "evigrid/grid.hpp"

namespace evigrid {

// .evgrid container: magic "EVGR", u8 version=1, u8 kind (0 evidential,
// 1 labels), u32 rows, u32 cols, f32 cell_m, little-endian payload.
// Evidence cells are stored as f32 pairs; values that are not exactly
// representable in f32 are rounded on save.
void save_grid(const std::string& path, const EvidentialGrid& grid);
void save_grid(const std::string& path, const GroundTruthGrid& grid);

using GridFile = std::variant<EvidentialGrid, GroundTruthGrid>;

// Throws FormatError / TruncationError / DimensionError for the respective
// defects; IoError when the file cannot be read.
GridFile load_grid(const std::string& path);

EvidentialGrid load_evidential_grid(const std::string& path);
GroundTruthGrid load_label_grid(const std::string& path);

// Renders one pixel per cell as binary PPM (P6, maxval 255). Evidence maps
// through the subjective opinion: green 255*b_free, red 255*b_occ, blue 0,
// so zero evidence is black. Labels render pure green/red/black. The image
// is oriented with vehicle-forward x up and left y to the left.
std::vector<std::uint8_t> render_ppm(const EvidentialGrid& grid);
std::vector<std::uint8_t> render_ppm(const GroundTruthGrid& grid);

}  // namespace evigrid
