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

#include <string>
#include <vector>

#include "evigrid/dataset.hpp"
#include "evigrid/evidential.hpp"
#include "evigrid/geometric_ism.hpp"
#include "evigrid/grid.hpp"
#include "evigrid/model.hpp"

namespace evigrid {

// Dirichlet assigned to labeled cells: the true class gets true_evidence,
// Unknown cells stay at the uniform prior. Finite evidence keeps the KL to
// any estimate bounded.
struct TruthDirichletConfig {
  double true_evidence = 50.0;

  void validate() const;
};

std::vector<DirichletBinary> truth_to_dirichlet(const GroundTruthGrid& truth,
                                                const TruthDirichletConfig& cfg);

struct MeanMasses {
  double m_free = 0.0;
  double m_occ = 0.0;
  double m_unknown = 1.0;
};

// Per-cell conversion to belief masses, averaged over all cells.
MeanMasses mean_belief_masses(const EvidentialGrid& grid);

// Mean over cells of KL[Dir(prediction) || Dir(truth)]. With observed_only,
// cells whose true label is Unknown are left out of the average. Throws
// std::invalid_argument on spec mismatch.
double mean_kl_to_truth(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                        const TruthDirichletConfig& cfg,
                        bool observed_only = false);

struct FrameMetrics {
  MeanMasses masses;
  double mean_kl = 0.0;
};

FrameMetrics frame_metrics(const EvidentialGrid& pred, const GroundTruthGrid& truth,
                           const TruthDirichletConfig& cfg,
                           bool observed_only = false);

struct EvalOptions {
  TruthDirichletConfig truth;
  GeometricIsmParams geometric;
  bool observed_only = false;
  // Aggregate KL is re-reported at these true_evidence values.
  std::vector<double> kl_sensitivity{10.0, 50.0, 200.0};
  bool render = true;
  int threads = 1;
};

struct IsmReport {
  std::vector<FrameMetrics> frames;
  MeanMasses mean_masses;          // averaged over frames
  double mean_kl = 0.0;            // averaged over frames
  std::vector<double> kl_at_sensitivity;
};

struct EvalReport {
  IsmReport geometric;
  IsmReport deep;
  int n_frames = 0;
};

// Runs both ISMs over every manifest frame, writes report.csv,
// report_aggregate.csv and per-frame PPM triptychs (input scatter, geometric
// OGM, deep OGM) into out_dir, and returns the metrics.
EvalReport evaluate_run(const DatasetManifest& manifest,
                        const ModelParams<float>& params,
                        const EvalOptions& options, const std::string& out_dir);

// Bird's-eye scatter of a cloud on the grid, intensity-scaled gray pixels.
std::vector<std::uint8_t> render_cloud_ppm(const PointCloud& cloud,
                                           const GridSpec& spec);

}  // namespace evigrid
