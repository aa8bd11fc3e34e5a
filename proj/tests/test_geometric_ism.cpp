#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "evigrid/evidential.hpp"
#include "evigrid/geometric_ism.hpp"
#include "evigrid/rng.hpp"

using namespace evigrid;

namespace {

bool is_unknown(const EvidencePair& e) { return e.e_free == 0.0 && e.e_occ == 0.0; }
bool is_occupied(const EvidencePair& e) { return e.e_occ > 0.0; }
bool is_free(const EvidencePair& e) { return e.e_free > 0.0; }

PointCloud cloud_with(std::initializer_list<Point> points, double sensor_height = 1.9) {
  PointCloud cloud;
  cloud.points = points;
  cloud.sensor_height = sensor_height;
  return cloud;
}

}  // namespace

TEST_CASE("empty cloud leaves every cell unknown") {
  const GridSpec spec{64, 44, 0.64};
  const EvidentialGrid grid = geometric_ism(PointCloud{}, spec);
  for (const EvidencePair& e : grid.cells) {
    CHECK(e.e_free == 0.0);
    CHECK(e.e_occ == 0.0);
  }
}

TEST_CASE("single in-band point marks its cell and carves the ray") {
  const GridSpec spec{64, 44, 0.64};
  // Height above ground = z + 1.9 = 1.0.
  const PointCloud cloud = cloud_with({{10.03, 0.11, -0.9, 0.5}});
  const EvidentialGrid grid = geometric_ism(cloud, spec);

  const auto hit_cell = world_to_cell(spec, 10.03, 0.11);
  REQUIRE(hit_cell.has_value());
  // Occupied evidence follows the opinion mapping with m_hit = 0.9.
  CHECK(grid.at(hit_cell->row, hit_cell->col).e_occ == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(grid.at(hit_cell->row, hit_cell->col).e_free == doctest::Approx(0.0));

  const auto target = cell_to_world_center(spec, hit_cell->row, hit_cell->col);
  const auto path = raytrace_cells(spec, 0.0, 0.0, target[0], target[1]);
  CHECK_FALSE(path.empty());
  int carved = 0;
  for (const CellIndex& cell : path) {
    const EvidencePair& e = grid.at(cell.row, cell.col);
    CHECK(is_free(e));
    CHECK(e.e_free == doctest::Approx(18.0).epsilon(1e-12));
    ++carved;
  }
  // Everything else stays unknown.
  int known = 0;
  for (const EvidencePair& e : grid.cells) known += !is_unknown(e);
  CHECK(known == carved + 1);
}

TEST_CASE("points outside the height band contribute nothing") {
  const GridSpec spec{64, 44, 0.64};
  // Heights above ground 0.2 and 2.6: both outside [0.5, 2.0].
  const EvidentialGrid grid =
      geometric_ism(cloud_with({{8.0, 1.0, -1.7, 0.1}, {12.0, -2.0, 0.7, 0.1}}), spec);
  for (const EvidencePair& e : grid.cells) {
    CHECK(is_unknown(e));
  }
}

TEST_CASE("band boundaries are inclusive") {
  const GridSpec spec{64, 44, 0.64};
  const EvidentialGrid grid = geometric_ism(
      cloud_with({{5.0, 0.0, 0.5 - 1.9, 0.1}, {7.0, 3.0, 2.0 - 1.9, 0.1}}), spec);
  int occupied = 0;
  for (const EvidencePair& e : grid.cells) occupied += is_occupied(e);
  CHECK(occupied == 2);
}

TEST_CASE("occupied wins over free carving") {
  const GridSpec spec{64, 44, 0.64};
  // Near point and far point on nearly the same bearing: the far ray passes
  // through the near occupied cell.
  const PointCloud cloud =
      cloud_with({{6.1, 0.05, -0.8, 0.2}, {15.9, 0.13, -0.8, 0.2}});
  const EvidentialGrid grid = geometric_ism(cloud, spec);

  const auto near = world_to_cell(spec, 6.1, 0.05);
  const auto far = world_to_cell(spec, 15.9, 0.13);
  REQUIRE(near.has_value());
  REQUIRE(far.has_value());
  CHECK(is_occupied(grid.at(near->row, near->col)));
  CHECK(is_occupied(grid.at(far->row, far->col)));

  int occupied = 0;
  for (const EvidencePair& e : grid.cells) {
    occupied += is_occupied(e);
    // No cell is both free- and occupied-marked.
    CHECK_FALSE((is_free(e) && is_occupied(e)));
  }
  CHECK(occupied == 2);
}

TEST_CASE("adding a point never converts occupied to free") {
  const GridSpec spec{32, 32, 1.0};
  Rng rng(5);
  std::vector<Point> points;
  for (int i = 0; i < 40; ++i) {
    points.push_back({rng.uniform(-14.0, 14.0), rng.uniform(-14.0, 14.0),
                      rng.uniform(-1.9, 0.4), 0.3});
  }
  PointCloud base;
  base.points = points;
  const EvidentialGrid before = geometric_ism(base, spec);
  PointCloud extended = base;
  extended.points.push_back({7.3, -4.2, -1.0, 0.3});
  const EvidentialGrid after = geometric_ism(extended, spec);
  for (std::size_t i = 0; i < before.cells.size(); ++i) {
    if (is_occupied(before.cells[i])) {
      CHECK(is_occupied(after.cells[i]));
    }
  }
}

TEST_CASE("every free cell lies on a segment toward an occupied cell") {
  const GridSpec spec{32, 32, 1.0};
  Rng rng(9);
  PointCloud cloud;
  for (int i = 0; i < 25; ++i) {
    cloud.points.push_back({rng.uniform(-14.0, 14.0), rng.uniform(-14.0, 14.0),
                            rng.uniform(-1.5, 0.0), 0.4});
  }
  const EvidentialGrid grid = geometric_ism(cloud, spec);

  std::set<std::pair<int, int>> on_some_ray;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      if (!is_occupied(grid.at(r, c))) continue;
      const auto target = cell_to_world_center(spec, r, c);
      for (const CellIndex& cell : raytrace_cells(spec, 0.0, 0.0, target[0], target[1])) {
        on_some_ray.insert({cell.row, cell.col});
      }
    }
  }
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      if (is_free(grid.at(r, c))) {
        CHECK(on_some_ray.count({r, c}) == 1);
      }
    }
  }
}

TEST_CASE("quarter-turn rotation equivariance is exact on a square grid") {
  const GridSpec spec{32, 32, 1.0};
  Rng rng(23);
  PointCloud cloud;
  for (int i = 0; i < 30; ++i) {
    cloud.points.push_back({rng.uniform(-14.0, 14.0), rng.uniform(-14.0, 14.0),
                            rng.uniform(-1.9, 0.3), 0.2});
  }
  const EvidentialGrid base = geometric_ism(cloud, spec);
  const EvidentialGrid rotated =
      geometric_ism(rotate_z(cloud, std::numbers::pi / 2.0), spec);

  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      // Cell (r, c) maps to (rows-1-c, r) under the quarter turn.
      const EvidencePair& a = base.at(r, c);
      const EvidencePair& b = rotated.at(spec.rows - 1 - c, r);
      CHECK(a.e_free == b.e_free);
      CHECK(a.e_occ == b.e_occ);
    }
  }
}

TEST_CASE("custom masses map through the opinion conversion") {
  const GridSpec spec{16, 16, 1.0};
  GeometricIsmParams params;
  params.m_hit = 0.8;
  params.m_free = 0.6;
  const PointCloud cloud = cloud_with({{5.5, 0.5, -0.9, 0.2}});
  const EvidentialGrid grid = geometric_ism(cloud, spec, params);

  const auto hit = world_to_cell(spec, 5.5, 0.5);
  REQUIRE(hit.has_value());
  // u_min = 1 - m_hit = 0.2 -> S = 10, e_occ = 8.
  CHECK(grid.at(hit->row, hit->col).e_occ == doctest::Approx(8.0).epsilon(1e-12));
  // Free cells keep u = 1 - m_free = 0.4 (no clamp), S = 5, e_free = 3.
  const auto target = cell_to_world_center(spec, hit->row, hit->col);
  const auto path = raytrace_cells(spec, 0.0, 0.0, target[0], target[1]);
  REQUIRE_FALSE(path.empty());
  CHECK(grid.at(path[0].row, path[0].col).e_free == doctest::Approx(3.0).epsilon(1e-12));

  CHECK_THROWS_AS(geometric_ism(cloud, spec, GeometricIsmParams{2.0, 1.0, 0.9, 0.9}),
                  std::invalid_argument);
}
