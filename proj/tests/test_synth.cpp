#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <tuple>
#include <numbers>
#include <set>

#include "evigrid/binary_io.hpp"
#include "evigrid/dataset.hpp"
#include "evigrid/rng.hpp"
#include "evigrid/synth.hpp"

using namespace evigrid;

namespace {

// Test-side geometry: point containment with its own transform math, used to
// audit the ray caster by marching along returned rays.
bool inside_obstacle_oracle(const Obstacle& o, double x, double y, double z,
                            double shrink) {
  if (z < o.base_z + shrink || z > o.base_z + o.height - shrink) return false;
  const double dx = x - o.x, dy = y - o.y;
  if (o.shape == Obstacle::Shape::kCylinder) {
    return std::hypot(dx, dy) < o.radius - shrink;
  }
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) < 0.5 * o.size_x - shrink &&
         std::abs(ly) < 0.5 * o.size_y - shrink;
}

// March from the sensor toward each return; no sample before the hit may sit
// inside an obstacle or below ground.
void check_occlusion_soundness(const Scene& scene, const LabeledCloud& cloud,
                               int stride) {
  int violations = 0;
  for (std::size_t i = 0; i < cloud.points.size();
       i += static_cast<std::size_t>(stride)) {
    const LabeledPoint& p = cloud.points[i];
    const double origin[3] = {0.0, 0.0, cloud.sensor_height};
    const double delta[3] = {p.x - origin[0], p.y - origin[1], p.z - origin[2]};
    const double range =
        std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]);
    const double step = 0.05;
    for (double s = 0.2; s < range - 0.05; s += step) {
      const double x = origin[0] + delta[0] * s / range;
      const double y = origin[1] + delta[1] * s / range;
      const double z = origin[2] + delta[2] * s / range;
      if (z < scene.ground_z(x, y) - 0.01) {
        ++violations;
        break;
      }
      bool inside = false;
      for (const Obstacle& o : scene.obstacles) {
        if (inside_obstacle_oracle(o, x, y, z, 0.005)) {
          inside = true;
          break;
        }
      }
      if (inside) {
        ++violations;
        break;
      }
    }
  }
  CHECK(violations == 0);
}

}  // namespace

TEST_CASE("generate_scene basics") {
  SUBCASE("all-zero params produce ground only") {
    const Scene scene = generate_scene(1, SceneParams{0, 0, 0});
    CHECK(scene.obstacles.empty());
  }
  SUBCASE("deterministic per seed") {
    const SceneParams params;
    const Scene a = generate_scene(11, params);
    const Scene b = generate_scene(11, params);
    REQUIRE(a.obstacles.size() == b.obstacles.size());
    for (std::size_t i = 0; i < a.obstacles.size(); ++i) {
      CHECK(a.obstacles[i].x == b.obstacles[i].x);
      CHECK(a.obstacles[i].y == b.obstacles[i].y);
      CHECK(a.obstacles[i].yaw == b.obstacles[i].yaw);
    }
    const Scene c = generate_scene(12, params);
    bool differs = c.obstacles.size() != a.obstacles.size();
    for (std::size_t i = 0; !differs && i < a.obstacles.size(); ++i) {
      differs = a.obstacles[i].x != c.obstacles[i].x;
    }
    CHECK(differs);
  }
  SUBCASE("unique ids, origin clearance, sized within catalog ranges") {
    const Scene scene = generate_scene(3, SceneParams{});
    std::set<int> ids;
    for (const Obstacle& o : scene.obstacles) {
      CHECK(ids.insert(o.object_id).second);
      CHECK_FALSE(o.footprint_contains(0.0, 0.0, 2.9));
      if (o.material == Material::kVehicle) {
        CHECK(o.size_x >= 3.5);
        CHECK(o.size_x <= 12.0);
        CHECK(o.size_y >= 1.6);
        CHECK(o.size_y <= 2.6);
      }
      if (o.material == Material::kPedestrian) {
        CHECK(o.radius >= 0.25);
        CHECK(o.radius <= 0.35);
      }
    }
  }
}

TEST_CASE("generate_scene footprints are pairwise disjoint (brute force)") {
  // 20 vehicles in an 80 x 56 m area, checked by point sampling: no sampled
  // interior point of one footprint may lie inside another.
  const Scene scene = generate_scene(7, SceneParams{20, 0, 0, 38.0, 26.0});
  REQUIRE(scene.obstacles.size() == 20);
  for (const Obstacle& a : scene.obstacles) {
    const double c = std::cos(a.yaw), s = std::sin(a.yaw);
    for (double fx = -0.5; fx <= 0.5; fx += 0.05) {
      for (double fy = -0.5; fy <= 0.5; fy += 0.05) {
        const double lx = fx * a.size_x, ly = fy * a.size_y;
        const double px = a.x + c * lx - s * ly;
        const double py = a.y + s * lx + c * ly;
        for (const Obstacle& b : scene.obstacles) {
          if (b.object_id == a.object_id) continue;
          CHECK_FALSE(b.footprint_contains(px, py));
        }
      }
    }
  }
}

TEST_CASE("raycast ground ranges on an empty scene") {
  const Scene scene;  // flat ground, no obstacles
  LidarConfig config;
  config.channels = 3;
  config.vfov_min_deg = -20.0;
  config.vfov_max_deg = -10.0;
  config.azimuth_step_deg = 30.0;
  config.noise_sigma = 0.0;
  const LabeledCloud cloud = raycast(scene, config, 5);

  REQUIRE(cloud.points.size() ==
          static_cast<std::size_t>(config.channels * config.azimuth_count()));
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const LabeledPoint& p = cloud.points[i];
    CHECK(p.material == Material::kGround);
    CHECK(p.object_id == 0);
    CHECK(p.z == doctest::Approx(0.0).epsilon(1e-9));
    const int channel = static_cast<int>(i) / config.azimuth_count();
    const double elevation = config.elevation_deg(channel) * std::numbers::pi / 180.0;
    const double expected_range = config.mount_height / std::sin(-elevation);
    const double range = std::sqrt(p.x * p.x + p.y * p.y +
                                   (p.z - config.mount_height) *
                                       (p.z - config.mount_height));
    CHECK(range == doctest::Approx(expected_range).epsilon(1e-9));
    // Inverse-square intensity with the material base value.
    CHECK(p.intensity ==
          doctest::Approx(material_reflectivity(Material::kGround) /
                          (expected_range * expected_range))
              .epsilon(1e-9));
  }
}

TEST_CASE("raycast occlusion behind a box") {
  Scene scene;
  Obstacle box;
  box.shape = Obstacle::Shape::kBox;
  box.x = 10.0;
  box.y = 0.0;
  box.size_x = 2.0;
  box.size_y = 4.0;
  box.height = 3.0;
  box.material = Material::kVehicle;
  box.object_id = 1;
  scene.obstacles.push_back(box);

  LidarConfig config;
  config.channels = 16;
  config.vfov_min_deg = -20.0;
  config.vfov_max_deg = 5.0;
  config.azimuth_step_deg = 2.0;
  config.noise_sigma = 0.0;
  const LabeledCloud cloud = raycast(scene, config, 9);

  int vehicle_hits = 0;
  for (const LabeledPoint& p : cloud.points) {
    if (p.material == Material::kVehicle) {
      ++vehicle_hits;
      CHECK(p.object_id == 1);
      // All hits land on the front face or the top edge region of the box.
      CHECK(p.x >= 9.0 - 1e-6);
      CHECK(p.x <= 11.0 + 1e-6);
    } else {
      // Ground returns cannot lie in the occluded corridor straight behind
      // the box at ground level.
      const bool behind = p.x > 11.0 && std::abs(p.y) < 1.0;
      CHECK_FALSE(behind);
    }
  }
  CHECK(vehicle_hits > 10);
  check_occlusion_soundness(scene, cloud, 1);
}

TEST_CASE("raycast determinism and noise stream stability") {
  const Scene scene = generate_scene(21, SceneParams{4, 3, 2});
  LidarConfig config;
  config.channels = 8;
  config.azimuth_step_deg = 5.0;

  SUBCASE("sigma zero is reproducible") {
    LidarConfig quiet = config;
    quiet.noise_sigma = 0.0;
    const LabeledCloud a = raycast(scene, quiet, 3);
    const LabeledCloud b = raycast(scene, quiet, 3);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].x == b.points[i].x);
      CHECK(a.points[i].y == b.points[i].y);
      CHECK(a.points[i].z == b.points[i].z);
    }
  }
  SUBCASE("noisy clouds depend on the seed, not on call order") {
    const LabeledCloud a = raycast(scene, config, 3);
    const LabeledCloud b = raycast(scene, config, 3);
    const LabeledCloud c = raycast(scene, config, 4);
    REQUIRE(a.points.size() == b.points.size());
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      same = same && a.points[i].x == b.points[i].x;
      differs = differs || (i < c.points.size() && a.points[i].x != c.points[i].x);
    }
    CHECK(same);
    CHECK(differs);
  }
}

TEST_CASE("sparse rays are a subset pattern of aligned HD rays") {
  const Scene scene = generate_scene(33, SceneParams{5, 2, 3});
  LidarConfig sparse;
  sparse.channels = 5;
  sparse.vfov_min_deg = -25.0;
  sparse.vfov_max_deg = 15.0;
  sparse.azimuth_step_deg = 3.0;
  sparse.noise_sigma = 0.0;
  LidarConfig hd = sparse;
  hd.channels = 33;  // elevations at exactly every 8th HD channel
  hd.azimuth_step_deg = 1.0;

  const LabeledCloud sc = raycast(scene, sparse, 0);
  const LabeledCloud hc = raycast(scene, hd, 0);

  std::map<std::tuple<long long, long long, long long>, const LabeledPoint*>
      hd_points;
  for (const LabeledPoint& p : hc.points) {
    hd_points[{std::llround(p.x * 1e7), std::llround(p.y * 1e7),
               std::llround(p.z * 1e7)}] = &p;
  }
  for (const LabeledPoint& p : sc.points) {
    const auto it = hd_points.find({std::llround(p.x * 1e7),
                                    std::llround(p.y * 1e7),
                                    std::llround(p.z * 1e7)});
    REQUIRE(it != hd_points.end());
    CHECK(it->second->material == p.material);
    CHECK(it->second->object_id == p.object_id);
  }
}

TEST_CASE("ground_truth_from_hd labels") {
  const GridSpec spec{64, 44, 0.64};

  SUBCASE("empty scene yields Free rings and Unknown elsewhere") {
    const Scene scene;
    LidarConfig hd;
    hd.channels = 64;
    hd.azimuth_step_deg = 0.5;
    hd.noise_sigma = 0.0;
    const LabeledCloud cloud = raycast(scene, hd, 1);
    const GroundTruthGrid truth =
        ground_truth_from_hd(scene, cloud, cloud, spec, 50);
    int free_cells = 0, occupied = 0;
    for (const CellLabel label : truth.cells) {
      free_cells += label == CellLabel::kFree;
      occupied += label == CellLabel::kOccupied;
    }
    CHECK(occupied == 0);
    CHECK(free_cells > 100);
    // Every Free cell must contain at least one ground return.
    std::set<std::pair<int, int>> ground_cells;
    for (const LabeledPoint& p : cloud.points) {
      if (const auto cell = world_to_cell(spec, p.x, p.y)) {
        ground_cells.insert({cell->row, cell->col});
      }
    }
    for (int r = 0; r < spec.rows; ++r) {
      for (int c = 0; c < spec.cols; ++c) {
        if (truth.at(r, c) == CellLabel::kFree) {
          CHECK(ground_cells.count({r, c}) == 1);
        }
      }
    }
  }

  SUBCASE("sensor pose mismatch is rejected") {
    const Scene scene;
    LabeledCloud a, b;
    a.sensor_height = 1.9;
    b.sensor_height = 2.1;
    CHECK_THROWS_AS(ground_truth_from_hd(scene, a, b, spec, 50),
                    std::invalid_argument);
  }
}

TEST_CASE("footprint fill flips exactly at the sparse-hit threshold") {
  const GridSpec spec{128, 88, 0.64};
  Scene scene;
  Obstacle car;
  car.shape = Obstacle::Shape::kBox;
  car.x = 10.0;
  car.y = 0.0;
  car.size_x = 5.0;
  car.size_y = 2.2;
  car.height = 3.0;
  car.material = Material::kVehicle;
  car.object_id = 1;
  scene.obstacles.push_back(car);

  LidarConfig sparse;
  sparse.noise_sigma = 0.0;
  LidarConfig hd = sparse;
  hd.channels = 128;
  hd.azimuth_step_deg = 0.25;

  const LabeledCloud sc = raycast(scene, sparse, 2);
  const LabeledCloud hc = raycast(scene, hd, 2);
  int hits = 0;
  for (const LabeledPoint& p : sc.points) hits += p.object_id == 1;
  REQUIRE(hits >= 2);

  // An interior footprint cell the rays cannot reach (behind the front face).
  const auto interior = world_to_cell(spec, 11.8, 0.0);
  REQUIRE(interior.has_value());

  const GroundTruthGrid filled = ground_truth_from_hd(scene, hc, sc, spec, hits);
  const GroundTruthGrid unfilled =
      ground_truth_from_hd(scene, hc, sc, spec, hits + 1);

  CHECK(filled.at(interior->row, interior->col) == CellLabel::kOccupied);
  CHECK(unfilled.at(interior->row, interior->col) != CellLabel::kOccupied);

  // The fill never downgrades: every Occupied in `unfilled` stays Occupied.
  for (std::size_t i = 0; i < filled.cells.size(); ++i) {
    if (unfilled.cells[i] == CellLabel::kOccupied) {
      CHECK(filled.cells[i] == CellLabel::kOccupied);
    }
  }
  // All filled cells lie under the footprint or carry a direct hit.
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      if (filled.at(r, c) == CellLabel::kOccupied &&
          unfilled.at(r, c) != CellLabel::kOccupied) {
        const auto center = cell_to_world_center(spec, r, c);
        CHECK(car.footprint_contains(center[0], center[1]));
      }
    }
  }
}

TEST_CASE("label consistency against the raw clouds") {
  const GridSpec spec{96, 64, 0.64};
  const Scene scene = generate_scene(17, SceneParams{6, 4, 3, 26.0, 18.0});
  LidarConfig sparse;
  sparse.noise_sigma = 0.0;
  LidarConfig hd = sparse;
  hd.channels = 96;
  hd.azimuth_step_deg = 0.5;
  const LabeledCloud sc = raycast(scene, sparse, 8);
  const LabeledCloud hc = raycast(scene, hd, 8);

  // Disable the footprint fill to audit the per-cell rule exactly.
  const GroundTruthGrid truth =
      ground_truth_from_hd(scene, hc, sc, spec, 1 << 30);

  std::map<std::pair<int, int>, std::pair<int, int>> counts;  // ground, obstacle
  for (const LabeledPoint& p : hc.points) {
    if (const auto cell = world_to_cell(spec, p.x, p.y)) {
      auto& [ground, obstacle] = counts[{cell->row, cell->col}];
      (p.material == Material::kGround ? ground : obstacle) += 1;
    }
  }
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const auto it = counts.find({r, c});
      const int ground = it == counts.end() ? 0 : it->second.first;
      const int obstacle = it == counts.end() ? 0 : it->second.second;
      switch (truth.at(r, c)) {
        case CellLabel::kOccupied:
          CHECK(obstacle >= 1);
          break;
        case CellLabel::kFree:
          CHECK(ground >= 1);
          CHECK(obstacle == 0);
          break;
        case CellLabel::kUnknown:
          CHECK(ground == 0);
          CHECK(obstacle == 0);
          break;
      }
    }
  }
  check_occlusion_soundness(scene, hc, 37);
}

TEST_CASE("generate_dataset writes deterministic pairs and a manifest") {
  DatasetConfig cfg;
  cfg.grid = GridSpec{32, 22, 1.28};
  cfg.scene = SceneParams{2, 1, 1, 14.0, 10.0};
  cfg.sparse_lidar.channels = 8;
  cfg.sparse_lidar.azimuth_step_deg = 4.0;
  cfg.hd_lidar.channels = 24;
  cfg.hd_lidar.azimuth_step_deg = 2.0;

  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "evigrid_dataset_test";
  fs::remove_all(base);

  SUBCASE("single sample") {
    const DatasetManifest m = generate_dataset((base / "one").string(), 1, 7, cfg);
    CHECK(m.samples.size() == 1);
    CHECK(fs::exists(base / "one" / "00000.evpc"));
    CHECK(fs::exists(base / "one" / "00000.evgrid"));
    CHECK(fs::exists(base / "one" / "manifest.json"));
    const DatasetManifest loaded = load_manifest((base / "one" / "manifest.json").string());
    CHECK(loaded.n_samples == 1);
    CHECK(loaded.config.grid == cfg.grid);
    const Sample sample = load_sample(loaded, 0);
    CHECK(sample.truth.spec == cfg.grid);
    CHECK_FALSE(sample.cloud.points.empty());
  }

  SUBCASE("same seed twice is byte-identical, independent of threads") {
    generate_dataset((base / "a").string(), 3, 42, cfg, 1);
    generate_dataset((base / "b").string(), 3, 42, cfg, 2);
    for (const char* name :
         {"manifest.json", "00000.evpc", "00000.evgrid", "00001.evpc",
          "00001.evgrid", "00002.evpc", "00002.evgrid"}) {
      const auto a = read_file((base / "a" / name).string());
      const auto b = read_file((base / "b" / name).string());
      CHECK(a == b);
    }
    const DatasetManifest other = generate_dataset((base / "c").string(), 3, 43, cfg);
    CHECK(read_file((base / "a" / "00000.evpc").string()) !=
          read_file((base / "c" / "00000.evpc").string()));
    CHECK(other.n_samples == 3);
  }
  fs::remove_all(base);
}
