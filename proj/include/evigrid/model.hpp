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
#include <vector>

#include "evigrid/dataset.hpp"
#include "evigrid/grid.hpp"
#include "evigrid/loss.hpp"
#include "evigrid/pointcloud.hpp"
#include "evigrid/rng.hpp"

namespace evigrid {

struct ConvLayerSpec {
  int kernel = 3;
  int channels = 16;
};

// Point encoder -> max pool -> scatter -> stride-1 conv stack -> 1x1 head
// with two ReLU evidence channels, one pixel per grid cell.
struct ModelConfig {
  int pillar_feature_dim = 16;
  std::vector<ConvLayerSpec> conv_layers{{3, 16}, {3, 16}};
  GridSpec grid{128, 88, 0.64};
  PillarLimits limits;
  std::uint64_t seed = 0;

  void validate() const;
};

// Flat parameter storage in declaration order: encoder weight [C x 9],
// encoder bias [C], per conv layer weight [OC x IC x K x K] and bias [OC],
// head weight [2 x IC] and bias [2].
struct ParamLayout {
  struct Block {
    std::size_t offset = 0;
    std::size_t count = 0;
  };
  Block encoder_w, encoder_b;
  struct ConvBlock {
    Block w, b;
    int in_ch = 0, out_ch = 0, kernel = 0;
  };
  std::vector<ConvBlock> convs;
  Block head_w, head_b;
  int head_in = 0;
  std::size_t total = 0;
};

ParamLayout make_layout(const ModelConfig& cfg);

template <typename T>
struct ModelParams {
  ModelConfig cfg;
  ParamLayout layout;
  std::vector<T> values;
};

// He-uniform weights, zero biases, drawn from seeded substreams per block.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg);

// Runs the network; evidence is clamped at zero by the head ReLU.
// Throws std::invalid_argument when the pillar grid or feature shape does
// not match the config.
template <typename T>
EvidentialGrid forward(const ModelParams<T>& params, const PillarSet& pillars);

template <typename T>
struct BackwardResult {
  double loss = 0.0;
  double weighted_kl = 0.0;  // occupied-weighted KL sum before the ramp
  std::vector<T> grads;      // same layout as ModelParams::values
};

// Fused forward + loss + reverse pass; gradients are exact for the computed
// loss. Max-pool routes gradient to the first maximal point per channel.
template <typename T>
BackwardResult<T> backward(const ModelParams<T>& params, const PillarSet& pillars,
                           const GroundTruthGrid& truth, int epoch,
                           const LossConfig& loss_cfg);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig cfg;
  std::vector<T> m;
  std::vector<T> v;
  long step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelParams<T>& params, const AdamConfig& cfg);

template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state,
               const std::vector<T>& grads);

struct TrainOptions {
  int epochs = 30;
  int batch_size = 5;
  bool augment = true;
  std::uint64_t seed = 1;
  AdamConfig adam;
};

struct EpochLog {
  int epoch = 0;  // 0-based; lambda_t uses this index directly
  double lambda = 0.0;
  double mean_loss = 0.0;          // mean over samples of the per-sample sum
  double mean_kl = 0.0;            // same for the weighted KL regularizer
  double mean_loss_per_cell = 0.0;
  double mean_kl_per_cell = 0.0;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochLog> log;
};

// Mini-batch Adam over the manifest's samples. With augment, every sample
// draws an independent rotation in [0, 2pi) per epoch, applied to cloud and
// label alike. Deterministic per seed. Throws on spec mismatches and aborts
// with diagnostics if the loss stops being finite.
TrainResult train_model(const DatasetManifest& manifest, const ModelConfig& cfg,
                        const LossConfig& loss_cfg, const TrainOptions& options);

void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

// normalize intensities -> pillarize (seed 0) -> forward. The spec argument
// must match the config grid.
EvidentialGrid predict(const ModelParams<float>& params, const PointCloud& cloud,
                       const GridSpec& spec);

// .evw container: magic "EVWT", version, config echo, then f32 parameters in
// declaration order. Round-trips float parameters bit-exactly.
void save_params(const std::string& path, const ModelParams<float>& params);
ModelParams<float> load_params(const std::string& path);

}  // namespace evigrid

#include "evigrid/model_impl.hpp"
