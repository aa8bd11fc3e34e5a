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

#include "evigrid/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "evigrid/binary_io.hpp"
#include "evigrid/grid_io.hpp"

namespace evigrid {

namespace fs = std::filesystem;

void TruthDirichletConfig::validate() const {
  if (!(true_evidence > 0.0)) {
    throw std::invalid_argument("TruthDirichletConfig: true_evidence > 0");
  }
}

std::vector<DirichletBinary> truth_to_dirichlet(const GroundTruthGrid& truth,
                                                const TruthDirichletConfig& cfg) {
  cfg.validate();
  std::vector<DirichletBinary> out(truth.cells.size());
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    switch (truth.cells[i]) {
      case CellLabel::kFree:
        out[i] = DirichletBinary{1.0 + cfg.true_evidence, 1.0};
        break;
      case CellLabel::kOccupied:
        out[i] = DirichletBinary{1.0, 1.0 + cfg.true_evidence};
        break;
      case CellLabel::kUnknown:
        out[i] = DirichletBinary{1.0, 1.0};
        break;
    }
  }
  return out;
}

MeanMasses mean_belief_masses(const EvidentialGrid& grid) {
  double f = 0.0, o = 0.0, u = 0.0;
  for (const EvidencePair& e : grid.cells) {
    const SubjectiveOpinion op = dirichlet_to_opinion(evidence_to_dirichlet(e));
    f += op.b_free;
    o += op.b_occ;
    u += op.u;
  }
  const double n = static_cast<double>(grid.cells.size());
  return MeanMasses{f / n, o / n, u / n};
}

double mean_kl_to_truth(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                        const TruthDirichletConfig& cfg, bool observed_only) {
  if (!(pred.spec == truth.spec)) {
    throw std::invalid_argument("mean_kl_to_truth: grids disagree on spec");
  }
  const std::vector<DirichletBinary> target = truth_to_dirichlet(truth, cfg);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.cells.size(); ++i) {
    if (observed_only && truth.cells[i] == CellLabel::kUnknown) continue;
    sum += kl_dirichlet(evidence_to_dirichlet(pred.cells[i]), target[i]);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

FrameMetrics frame_metrics(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                           const TruthDirichletConfig& cfg, bool observed_only) {
  return FrameMetrics{mean_belief_masses(pred),
                      mean_kl_to_truth(pred, truth, cfg, observed_only)};
}

std::vector<std::uint8_t> render_cloud_ppm(const PointCloud& cloud,
                                           const GridSpec& spec) {
  const std::string header = "P6\n" + std::to_string(spec.cols) + " " +
                             std::to_string(spec.rows) + "\n255\n";
  std::vector<std::uint8_t> img(header.size() + spec.num_cells() * 3, 0);
  std::copy(header.begin(), header.end(), img.begin());
  for (const Point& p : cloud.points) {
    const auto cell = world_to_cell(spec, p.x, p.y);
    if (!cell) continue;
    const std::size_t i = static_cast<std::size_t>(spec.rows - 1 - cell->row);
    const std::size_t j = static_cast<std::size_t>(spec.cols - 1 - cell->col);
    const std::size_t off = header.size() + (i * spec.cols + j) * 3;
    const double v = std::clamp(p.intensity, 0.0, 1.0);
    const std::uint8_t gray =
        static_cast<std::uint8_t>(std::floor(64.0 + 191.0 * v));
    img[off] = std::max(img[off], gray);
    img[off + 1] = std::max(img[off + 1], gray);
    img[off + 2] = std::max(img[off + 2], gray);
  }
  return img;
}

namespace {

std::string frame_name(int index, const char* which) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "frame_%05d_%s.ppm", index, which);
  return buf;
}

void finalize(IsmReport& report, const EvalOptions& options,
              const std::vector<std::vector<double>>& kl_sens) {
  const double n = static_cast<double>(report.frames.size());
  if (report.frames.empty()) {
    report.kl_at_sensitivity.assign(options.kl_sensitivity.size(), 0.0);
    return;
  }
  for (const FrameMetrics& f : report.frames) {
    report.mean_masses.m_free += f.masses.m_free / n;
    report.mean_masses.m_occ += f.masses.m_occ / n;
    report.mean_masses.m_unknown += f.masses.m_unknown / n;
    report.mean_kl += f.mean_kl / n;
  }
  for (const std::vector<double>& per_frame : kl_sens) {
    double mean = 0.0;
    for (const double v : per_frame) mean += v / n;
    report.kl_at_sensitivity.push_back(mean);
  }
}

}  // namespace

EvalReport evaluate_run(const DatasetManifest& manifest,
                        const ModelParams<float>& params,
                        const EvalOptions& options, const std::string& out_dir) {
  options.truth.validate();
  options.geometric.validate();
  const int n = static_cast<int>(manifest.samples.size());

  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create eval output directory: " + out_dir);

  EvalReport report;
  report.n_frames = n;
  report.geometric.frames.resize(static_cast<std::size_t>(n));
  report.deep.frames.resize(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> geo_sens(options.kl_sensitivity.size(),
                                            std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> deep_sens(options.kl_sensitivity.size(),
                                             std::vector<double>(n, 0.0));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      if (failed.load()) return;
      try {
        const Sample sample = load_sample(manifest, i);
        const EvidentialGrid geo =
            geometric_ism(sample.cloud, sample.truth.spec, options.geometric);
        const EvidentialGrid deep = predict(params, sample.cloud, sample.truth.spec);

        report.geometric.frames[static_cast<std::size_t>(i)] = frame_metrics(
            geo, sample.truth, options.truth, options.observed_only);
        report.deep.frames[static_cast<std::size_t>(i)] = frame_metrics(
            deep, sample.truth, options.truth, options.observed_only);
        for (std::size_t s = 0; s < options.kl_sensitivity.size(); ++s) {
          const TruthDirichletConfig sens{options.kl_sensitivity[s]};
          geo_sens[s][static_cast<std::size_t>(i)] =
              mean_kl_to_truth(geo, sample.truth, sens, options.observed_only);
          deep_sens[s][static_cast<std::size_t>(i)] =
              mean_kl_to_truth(deep, sample.truth, sens, options.observed_only);
        }
        if (options.render) {
          write_file((dir / frame_name(i, "input")).string(),
                     render_cloud_ppm(normalize_intensity(sample.cloud),
                                      sample.truth.spec));
          write_file((dir / frame_name(i, "geom")).string(), render_ppm(geo));
          write_file((dir / frame_name(i, "deep")).string(), render_ppm(deep));
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure = "frame " + std::to_string(i) + ": " + e.what();
        return;
      }
    }
  };
  const int threads = std::max(1, std::min(options.threads, std::max(1, n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("evaluate_run: " + failure);

  report.geometric.mean_masses = MeanMasses{0.0, 0.0, 0.0};
  report.deep.mean_masses = MeanMasses{0.0, 0.0, 0.0};
  finalize(report.geometric, options, geo_sens);
  finalize(report.deep, options, deep_sens);

  // Per-frame rows for both ISMs.
  std::ofstream rows((dir / "report.csv").string(), std::ios::trunc);
  if (!rows) throw IoError("cannot write report.csv in: " + out_dir);
  rows << "frame,ism,m_free,m_occ,m_unknown,mean_kl\n";
  char line[256];
  for (int i = 0; i < n; ++i) {
    for (const auto& [name, ism] :
         {std::pair{"geometric", &report.geometric}, {"deep", &report.deep}}) {
      const FrameMetrics& f = ism->frames[static_cast<std::size_t>(i)];
      std::snprintf(line, sizeof(line), "%d,%s,%.8g,%.8g,%.8g,%.8g\n", i, name,
                    f.masses.m_free, f.masses.m_occ, f.masses.m_unknown,
                    f.mean_kl);
      rows << line;
    }
  }

  std::ofstream agg((dir / "report_aggregate.csv").string(), std::ios::trunc);
  if (!agg) throw IoError("cannot write report_aggregate.csv in: " + out_dir);
  agg << "ism,frames,m_free,m_occ,m_unknown,mean_kl";
  for (const double s : options.kl_sensitivity) {
    std::snprintf(line, sizeof(line), ",mean_kl_te%g", s);
    agg << line;
  }
  agg << "\n";
  for (const auto& [name, ism] :
       {std::pair{"geometric", &report.geometric}, {"deep", &report.deep}}) {
    std::snprintf(line, sizeof(line), "%s,%d,%.8g,%.8g,%.8g,%.8g", name, n,
                  ism->mean_masses.m_free, ism->mean_masses.m_occ,
                  ism->mean_masses.m_unknown, ism->mean_kl);
    agg << line;
    for (const double v : ism->kl_at_sensitivity) {
      std::snprintf(line, sizeof(line), ",%.8g", v);
      agg << line;
    }
    agg << "\n";
  }
  return report;
}

}  // namespace evigrid
