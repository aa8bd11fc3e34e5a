#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "evigrid/binary_io.hpp"
#include "evigrid/grid.hpp"
#include "evigrid/grid_io.hpp"
#include "evigrid/rng.hpp"
#include "oracles.hpp"

using namespace evigrid;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("GridSpec defaults and validation") {
  GridSpec spec;
  CHECK(spec.rows == 512);
  CHECK(spec.cols == 352);
  CHECK(spec.length_m() == doctest::Approx(81.92));
  CHECK(spec.width_m() == doctest::Approx(56.32));
  spec.validate();

  CHECK_THROWS_AS((GridSpec{511, 352, 0.16}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{512, 0, 0.16}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{512, 352, -1.0}).validate(), std::invalid_argument);

  const GridSpec derived = GridSpec::from_extents(81.92, 56.32, 0.16);
  CHECK(derived.rows == 512);
  CHECK(derived.cols == 352);
  CHECK_THROWS_AS(GridSpec::from_extents(81.0, 56.32, 0.16), std::invalid_argument);
}

TEST_CASE("world_to_cell") {
  const GridSpec spec;
  auto c = world_to_cell(spec, 0.0, 0.0);
  REQUIRE(c.has_value());
  CHECK(c->row == 256);
  CHECK(c->col == 176);

  c = world_to_cell(spec, -40.96, -28.16);
  REQUIRE(c.has_value());
  CHECK(c->row == 0);
  CHECK(c->col == 0);

  CHECK_FALSE(world_to_cell(spec, 40.96, 0.0).has_value());
  CHECK_FALSE(world_to_cell(spec, 0.0, 28.16).has_value());
  CHECK_FALSE(world_to_cell(spec, -41.0, 0.0).has_value());
}

TEST_CASE("cell_to_world_center and round trip") {
  const GridSpec spec;
  auto xy = cell_to_world_center(spec, 0, 0);
  CHECK(xy[0] == doctest::Approx(-40.88).epsilon(1e-12));
  CHECK(xy[1] == doctest::Approx(-28.08).epsilon(1e-12));
  xy = cell_to_world_center(spec, 256, 176);
  CHECK(xy[0] == doctest::Approx(0.08).epsilon(1e-9));
  CHECK(xy[1] == doctest::Approx(0.08).epsilon(1e-9));

  CHECK_THROWS_AS(cell_to_world_center(spec, 512, 0), std::out_of_range);

  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const auto center = cell_to_world_center(spec, r, c);
      const auto back = world_to_cell(spec, center[0], center[1]);
      REQUIRE(back.has_value());
      if (back->row != r || back->col != c) {
        CHECK(back->row == r);
        CHECK(back->col == c);
      }
    }
  }
}

TEST_CASE("raytrace_cells axis-aligned and degenerate") {
  const GridSpec spec{32, 32, 1.0};
  // Center of a cell to the center of the cell three columns to the right.
  const auto a = cell_to_world_center(spec, 10, 10);
  const auto b = cell_to_world_center(spec, 10, 13);
  const auto cells = raytrace_cells(spec, a[0], a[1], b[0], b[1]);
  REQUIRE(cells.size() == 3);
  CHECK(cells[0] == CellIndex{10, 10});
  CHECK(cells[1] == CellIndex{10, 11});
  CHECK(cells[2] == CellIndex{10, 12});

  const auto degenerate = raytrace_cells(spec, a[0], a[1], a[0], a[1]);
  REQUIRE(degenerate.size() == 1);
  CHECK(degenerate[0] == CellIndex{10, 10});
}

TEST_CASE("raytrace_cells 45-degree corner crossing includes both side cells") {
  const GridSpec spec{32, 32, 1.0};
  // From (-15.5, -15.5) to (-11.5, -11.5) in world coordinates: cell centers
  // on the diagonal, crossing corners exactly.
  const auto cells = raytrace_cells(spec, -15.5, -15.5, -11.5, -11.5);
  const std::set<std::pair<int, int>> got = [&] {
    std::set<std::pair<int, int>> s;
    for (const auto& c : cells) s.insert({c.row, c.col});
    return s;
  }();
  // Diagonal cells (0,0)..(3,3) minus destination (4,4), plus both
  // corner-adjacent side cells at each of the 4 crossed corners.
  for (int k = 0; k < 4; ++k) {
    CHECK(got.count({k, k}) == 1);
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(got.count({k + 1, k}) == 1);
    CHECK(got.count({k, k + 1}) == 1);
  }
  CHECK(got.count({4, 4}) == 0);

  // Matches the closed-rectangle brute force minus the destination cell.
  auto brute = oracles::segment_cells_brute_force(0.5, 0.5, 4.5, 4.5);
  brute.erase({4, 4});
  CHECK(got == brute);
}

TEST_CASE("raytrace_cells equals brute force on random segments") {
  const GridSpec spec{32, 32, 1.0};
  Rng rng(123);
  for (int i = 0; i < 400; ++i) {
    const double x0 = rng.uniform(-15.9, 15.9);
    const double y0 = rng.uniform(-15.9, 15.9);
    const double x1 = rng.uniform(-15.9, 15.9);
    const double y1 = rng.uniform(-15.9, 15.9);
    const auto cells = raytrace_cells(spec, x0, y0, x1, y1);

    std::set<std::pair<int, int>> got;
    for (const auto& c : cells) got.insert({c.row, c.col});
    CHECK(got.size() == cells.size());  // no duplicates

    auto brute = oracles::segment_cells_brute_force(x0 + 16.0, y0 + 16.0,
                                                    x1 + 16.0, y1 + 16.0);
    const int dest_r = static_cast<int>(std::floor(x1 + 16.0));
    const int dest_c = static_cast<int>(std::floor(y1 + 16.0));
    if (!(got.size() == 1 && got.count({dest_r, dest_c}) == 1)) {
      brute.erase({dest_r, dest_c});
    }
    CHECK(got == brute);
  }
}

TEST_CASE("render_ppm sizes and colors") {
  GridSpec spec{4, 6, 0.5};
  EvidentialGrid grid(spec);
  grid.at(1, 2) = EvidencePair{18.0, 0.0};
  grid.at(2, 3) = EvidencePair{0.0, 18.0};
  const auto img = render_ppm(grid);

  const std::string header = "P6\n6 4\n255\n";
  REQUIRE(img.size() == header.size() + spec.num_cells() * 3);
  CHECK(std::equal(header.begin(), header.end(), img.begin()));

  const auto pixel = [&](int row, int col) {
    const std::size_t i = static_cast<std::size_t>(spec.rows - 1 - row);
    const std::size_t j = static_cast<std::size_t>(spec.cols - 1 - col);
    const std::size_t off = header.size() + (i * spec.cols + j) * 3;
    return std::array<int, 3>{img[off], img[off + 1], img[off + 2]};
  };

  CHECK(pixel(0, 0) == std::array<int, 3>{0, 0, 0});      // zero evidence
  CHECK(pixel(1, 2) == std::array<int, 3>{0, 229, 0});    // m_free = 0.9
  CHECK(pixel(2, 3) == std::array<int, 3>{229, 0, 0});    // m_occ = 0.9

  GroundTruthGrid labels(spec);
  labels.at(0, 0) = CellLabel::kFree;
  labels.at(0, 1) = CellLabel::kOccupied;
  const auto limg = render_ppm(labels);
  REQUIRE(limg.size() == img.size());
  const auto lpixel = [&](int row, int col) {
    const std::size_t i = static_cast<std::size_t>(spec.rows - 1 - row);
    const std::size_t j = static_cast<std::size_t>(spec.cols - 1 - col);
    const std::size_t off = header.size() + (i * spec.cols + j) * 3;
    return std::array<int, 3>{limg[off], limg[off + 1], limg[off + 2]};
  };
  CHECK(lpixel(0, 0) == std::array<int, 3>{0, 255, 0});
  CHECK(lpixel(0, 1) == std::array<int, 3>{255, 0, 0});
  CHECK(lpixel(1, 1) == std::array<int, 3>{0, 0, 0});
}

TEST_CASE("grid save/load round trip is bit-exact") {
  const GridSpec spec{8, 6, 0.25};
  EvidentialGrid grid(spec);
  Rng rng(5);
  for (auto& cell : grid.cells) {
    // Dyadic evidence values are exactly representable in the f32 container.
    cell.e_free = static_cast<double>(rng.uniform_int(0, 80 * 256)) / 256.0;
    cell.e_occ = static_cast<double>(rng.uniform_int(0, 80 * 256)) / 256.0;
  }
  const auto path = temp_file("evigrid_roundtrip.evgrid");
  save_grid(path.string(), grid);
  const EvidentialGrid back = load_evidential_grid(path.string());
  CHECK(back.spec == spec);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    CHECK(back.cells[i].e_free == grid.cells[i].e_free);
    CHECK(back.cells[i].e_occ == grid.cells[i].e_occ);
  }

  GroundTruthGrid labels(spec);
  for (std::size_t i = 0; i < labels.cells.size(); ++i) {
    labels.cells[i] = static_cast<CellLabel>(i % 3);
  }
  const auto lpath = temp_file("evigrid_labels.evgrid");
  save_grid(lpath.string(), labels);
  const GroundTruthGrid lback = load_label_grid(lpath.string());
  CHECK(lback.cells == labels.cells);

  std::filesystem::remove(path);
  std::filesystem::remove(lpath);
}

TEST_CASE("grid load rejects malformed files with distinct errors") {
  const GridSpec spec{4, 4, 0.5};
  EvidentialGrid grid(spec);
  const auto path = temp_file("evigrid_malformed.evgrid");
  save_grid(path.string(), grid);
  auto bytes = read_file(path.string());

  SUBCASE("truncated payload") {
    bytes.resize(bytes.size() - 5);
    write_file(path.string(), bytes);
    CHECK_THROWS_AS(load_grid(path.string()), TruncationError);
  }
  SUBCASE("oversized payload is a dimension mismatch") {
    bytes.push_back(0);
    write_file(path.string(), bytes);
    CHECK_THROWS_AS(load_grid(path.string()), DimensionError);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    write_file(path.string(), bytes);
    CHECK_THROWS_AS(load_grid(path.string()), FormatError);
  }
  SUBCASE("bad version") {
    bytes[4] = 9;
    write_file(path.string(), bytes);
    CHECK_THROWS_AS(load_grid(path.string()), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_grid("/nonexistent/nowhere.evgrid"), IoError);
  }
  std::filesystem::remove(path);
}
