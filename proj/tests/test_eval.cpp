#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "evigrid/eval.hpp"
#include "evigrid/rng.hpp"

using namespace evigrid;

TEST_CASE("truth_to_dirichlet mapping") {
  const GridSpec spec{2, 2, 1.0};
  GroundTruthGrid truth(spec);
  truth.at(0, 0) = CellLabel::kFree;
  truth.at(0, 1) = CellLabel::kOccupied;
  const auto dirichlets = truth_to_dirichlet(truth, TruthDirichletConfig{50.0});
  CHECK(dirichlets[0].alpha_free == 51.0);
  CHECK(dirichlets[0].alpha_occ == 1.0);
  CHECK(dirichlets[1].alpha_free == 1.0);
  CHECK(dirichlets[1].alpha_occ == 51.0);
  CHECK(dirichlets[2].alpha_free == 1.0);
  CHECK(dirichlets[2].alpha_occ == 1.0);

  CHECK_THROWS_AS(truth_to_dirichlet(truth, TruthDirichletConfig{0.0}),
                  std::invalid_argument);
}

TEST_CASE("mean_belief_masses") {
  const GridSpec spec{2, 2, 1.0};
  EvidentialGrid grid(spec);
  SUBCASE("all-zero evidence is total ignorance") {
    const MeanMasses m = mean_belief_masses(grid);
    CHECK(m.m_free == 0.0);
    CHECK(m.m_occ == 0.0);
    CHECK(m.m_unknown == 1.0);
  }
  SUBCASE("half strong-free, half vacuous") {
    grid.at(0, 0) = {18.0, 0.0};
    grid.at(0, 1) = {18.0, 0.0};
    const MeanMasses m = mean_belief_masses(grid);
    CHECK(m.m_free == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(m.m_occ == doctest::Approx(0.0));
    CHECK(m.m_unknown == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(m.m_free + m.m_occ + m.m_unknown == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("mean_kl_to_truth") {
  const GridSpec spec{4, 4, 1.0};
  GroundTruthGrid truth(spec);
  const TruthDirichletConfig cfg{50.0};

  SUBCASE("prediction equal to the truth mapping scores zero") {
    Rng rng(3);
    for (auto& cell : truth.cells) {
      cell = static_cast<CellLabel>(rng.uniform_int(0, 2));
    }
    EvidentialGrid pred(spec);
    for (std::size_t i = 0; i < truth.cells.size(); ++i) {
      switch (truth.cells[i]) {
        case CellLabel::kFree:
          pred.cells[i] = {50.0, 0.0};
          break;
        case CellLabel::kOccupied:
          pred.cells[i] = {0.0, 50.0};
          break;
        case CellLabel::kUnknown:
          pred.cells[i] = {0.0, 0.0};
          break;
      }
    }
    CHECK(mean_kl_to_truth(pred, truth, cfg) == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("all-ignorance prediction vs all-Unknown truth scores zero") {
    const EvidentialGrid pred(spec);
    CHECK(mean_kl_to_truth(pred, truth, cfg) == 0.0);
  }

  SUBCASE("observed_only excludes Unknown-truth cells") {
    truth.at(0, 0) = CellLabel::kFree;
    EvidentialGrid pred(spec);  // vacuous everywhere
    const double all_cells = mean_kl_to_truth(pred, truth, cfg, false);
    const double observed = mean_kl_to_truth(pred, truth, cfg, true);
    const double kl_one = kl_dirichlet({1.0, 1.0}, {51.0, 1.0});
    CHECK(observed == doctest::Approx(kl_one).epsilon(1e-12));
    CHECK(all_cells == doctest::Approx(kl_one / 16.0).epsilon(1e-12));
  }

  SUBCASE("spec mismatch is rejected") {
    EvidentialGrid pred(GridSpec{2, 2, 1.0});
    CHECK_THROWS_AS(mean_kl_to_truth(pred, truth, cfg), std::invalid_argument);
  }
}

TEST_CASE("render_cloud_ppm has one pixel per cell") {
  const GridSpec spec{8, 6, 1.0};
  PointCloud cloud;
  cloud.points.push_back({0.5, 0.5, 0.0, 1.0});
  const auto img = render_cloud_ppm(cloud, spec);
  const std::string header = "P6\n6 8\n255\n";
  CHECK(img.size() == header.size() + spec.num_cells() * 3);
  int lit = 0;
  for (std::size_t i = header.size(); i < img.size(); ++i) lit += img[i] != 0;
  CHECK(lit == 3);  // exactly one gray pixel
}

TEST_CASE("evaluate_run writes reports and returns frame metrics") {
  namespace fs = std::filesystem;
  DatasetConfig data_cfg;
  data_cfg.grid = GridSpec{32, 22, 1.28};
  data_cfg.scene = SceneParams{2, 1, 1, 14.0, 10.0};
  data_cfg.sparse_lidar.channels = 8;
  data_cfg.sparse_lidar.azimuth_step_deg = 4.0;
  data_cfg.hd_lidar.channels = 32;
  data_cfg.hd_lidar.azimuth_step_deg = 1.0;

  const fs::path base = fs::temp_directory_path() / "evigrid_eval_test";
  fs::remove_all(base);
  const DatasetManifest manifest =
      generate_dataset((base / "data").string(), 3, 5, data_cfg);

  ModelConfig model_cfg;
  model_cfg.pillar_feature_dim = 4;
  model_cfg.conv_layers = {{3, 4}};
  model_cfg.grid = data_cfg.grid;
  model_cfg.limits = PillarLimits{512, 16, 9};
  const ModelParams<float> params = init_params<float>(model_cfg);

  EvalOptions options;
  options.threads = 2;
  const EvalReport report =
      evaluate_run(manifest, params, options, (base / "out").string());

  CHECK(report.n_frames == 3);
  REQUIRE(report.geometric.frames.size() == 3);
  REQUIRE(report.deep.frames.size() == 3);
  for (const auto* ism : {&report.geometric, &report.deep}) {
    double mean = 0.0;
    for (const FrameMetrics& f : ism->frames) {
      CHECK(f.masses.m_free + f.masses.m_occ + f.masses.m_unknown ==
            doctest::Approx(1.0).epsilon(1e-9));
      CHECK(f.mean_kl >= 0.0);
      mean += f.mean_kl / 3.0;
    }
    CHECK(ism->mean_kl == doctest::Approx(mean).epsilon(1e-12));
    REQUIRE(ism->kl_at_sensitivity.size() == 3);
  }

  CHECK(fs::exists(base / "out" / "report.csv"));
  CHECK(fs::exists(base / "out" / "report_aggregate.csv"));
  for (int i = 0; i < 3; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "frame_%05d_input.ppm", i);
    CHECK(fs::exists(base / "out" / buf));
    std::snprintf(buf, sizeof(buf), "frame_%05d_geom.ppm", i);
    CHECK(fs::exists(base / "out" / buf));
    std::snprintf(buf, sizeof(buf), "frame_%05d_deep.ppm", i);
    CHECK(fs::exists(base / "out" / buf));
  }

  // 1 header + 3 frames x 2 ISMs rows.
  std::ifstream rows((base / "out" / "report.csv").string());
  int line_count = 0;
  std::string line;
  while (std::getline(rows, line)) ++line_count;
  CHECK(line_count == 7);

  // Empty manifest: reports exist, no frames.
  DatasetManifest empty = manifest;
  empty.samples.clear();
  empty.n_samples = 0;
  const EvalReport empty_report =
      evaluate_run(empty, params, options, (base / "empty").string());
  CHECK(empty_report.n_frames == 0);
  CHECK(fs::exists(base / "empty" / "report.csv"));

  fs::remove_all(base);
}
