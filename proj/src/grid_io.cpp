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

#include "evigrid/grid_io.hpp"

#include <algorithm>
#include <cmath>

#include "evigrid/binary_io.hpp"

namespace evigrid {

namespace {

constexpr char kMagic[5] = "EVGR";
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kKindEvidential = 0;
constexpr std::uint8_t kKindLabels = 1;

void write_header(ByteWriter& w, std::uint8_t kind, const GridSpec& spec) {
  w.magic(kMagic);
  w.u8(kVersion);
  w.u8(kind);
  w.u32(static_cast<std::uint32_t>(spec.rows));
  w.u32(static_cast<std::uint32_t>(spec.cols));
  w.f32(static_cast<float>(spec.cell_m));
}

struct Header {
  std::uint8_t kind;
  GridSpec spec;
};

Header read_header(ByteReader& r) {
  r.expect_magic(kMagic, "evgrid");
  const std::uint8_t version = r.u8();
  if (version != kVersion) throw FormatError("evgrid: unsupported version");
  const std::uint8_t kind = r.u8();
  if (kind != kKindEvidential && kind != kKindLabels) {
    throw FormatError("evgrid: unknown payload kind");
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const float cell = r.f32();
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20) ||
      !(cell > 0.0f)) {
    throw FormatError("evgrid: implausible header dimensions");
  }
  return Header{kind, GridSpec{static_cast<int>(rows), static_cast<int>(cols),
                               static_cast<double>(cell)}};
}

void check_payload(std::size_t remaining, std::size_t expected) {
  if (remaining < expected) throw TruncationError("evgrid: payload truncated");
  if (remaining > expected) {
    throw DimensionError("evgrid: payload length does not match rows*cols");
  }
}

}  // namespace

void save_grid(const std::string& path, const EvidentialGrid& grid) {
  ByteWriter w;
  write_header(w, kKindEvidential, grid.spec);
  for (const EvidencePair& e : grid.cells) {
    w.f32(static_cast<float>(e.e_free));
    w.f32(static_cast<float>(e.e_occ));
  }
  write_file(path, w.bytes());
}

void save_grid(const std::string& path, const GroundTruthGrid& grid) {
  ByteWriter w;
  write_header(w, kKindLabels, grid.spec);
  for (const CellLabel label : grid.cells) {
    w.u8(static_cast<std::uint8_t>(label));
  }
  write_file(path, w.bytes());
}

GridFile load_grid(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  ByteReader r(bytes);
  const Header h = read_header(r);
  const std::size_t n = h.spec.num_cells();
  if (h.kind == kKindEvidential) {
    check_payload(r.remaining(), n * 8);
    EvidentialGrid grid(h.spec);
    for (std::size_t i = 0; i < n; ++i) {
      grid.cells[i].e_free = static_cast<double>(r.f32());
      grid.cells[i].e_occ = static_cast<double>(r.f32());
    }
    return grid;
  }
  check_payload(r.remaining(), n);
  GroundTruthGrid grid(h.spec);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t v = r.u8();
    if (v > 2) throw FormatError("evgrid: invalid cell label");
    grid.cells[i] = static_cast<CellLabel>(v);
  }
  return grid;
}

EvidentialGrid load_evidential_grid(const std::string& path) {
  GridFile f = load_grid(path);
  if (auto* g = std::get_if<EvidentialGrid>(&f)) return std::move(*g);
  throw FormatError("evgrid: expected evidential payload, found labels: " + path);
}

GroundTruthGrid load_label_grid(const std::string& path) {
  GridFile f = load_grid(path);
  if (auto* g = std::get_if<GroundTruthGrid>(&f)) return std::move(*g);
  throw FormatError("evgrid: expected label payload, found evidence: " + path);
}

namespace {

std::vector<std::uint8_t> ppm_canvas(const GridSpec& spec, std::size_t& offset) {
  const std::string header = "P6\n" + std::to_string(spec.cols) + " " +
                             std::to_string(spec.rows) + "\n255\n";
  std::vector<std::uint8_t> img(header.size() + spec.num_cells() * 3, 0);
  std::copy(header.begin(), header.end(), img.begin());
  offset = header.size();
  return img;
}

std::uint8_t channel(double mass) {
  const double v = std::floor(255.0 * std::clamp(mass, 0.0, 1.0));
  return static_cast<std::uint8_t>(v);
}

// Image pixel (i, j) shows cell (rows-1-i, cols-1-j): forward up, left left.
std::size_t pixel_offset(const GridSpec& spec, int row, int col) {
  const std::size_t i = static_cast<std::size_t>(spec.rows - 1 - row);
  const std::size_t j = static_cast<std::size_t>(spec.cols - 1 - col);
  return (i * static_cast<std::size_t>(spec.cols) + j) * 3;
}

}  // namespace

std::vector<std::uint8_t> render_ppm(const EvidentialGrid& grid) {
  std::size_t base = 0;
  std::vector<std::uint8_t> img = ppm_canvas(grid.spec, base);
  for (int r = 0; r < grid.spec.rows; ++r) {
    for (int c = 0; c < grid.spec.cols; ++c) {
      const SubjectiveOpinion o =
          dirichlet_to_opinion(evidence_to_dirichlet(grid.at(r, c)));
      const std::size_t px = base + pixel_offset(grid.spec, r, c);
      img[px + 0] = channel(o.b_occ);
      img[px + 1] = channel(o.b_free);
      img[px + 2] = 0;
    }
  }
  return img;
}

std::vector<std::uint8_t> render_ppm(const GroundTruthGrid& grid) {
  std::size_t base = 0;
  std::vector<std::uint8_t> img = ppm_canvas(grid.spec, base);
  for (int r = 0; r < grid.spec.rows; ++r) {
    for (int c = 0; c < grid.spec.cols; ++c) {
      const std::size_t px = base + pixel_offset(grid.spec, r, c);
      switch (grid.at(r, c)) {
        case CellLabel::kFree:
          img[px + 1] = 255;
          break;
        case CellLabel::kOccupied:
          img[px + 0] = 255;
          break;
        case CellLabel::kUnknown:
          break;
      }
    }
  }
  return img;
}

}  // namespace evigrid
