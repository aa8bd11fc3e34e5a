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

#include "evigrid/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "evigrid/binary_io.hpp"

namespace evigrid {

void ModelConfig::validate() const {
  if (pillar_feature_dim < 1) {
    throw std::invalid_argument("ModelConfig: pillar_feature_dim >= 1");
  }
  if (conv_layers.empty()) {
    throw std::invalid_argument("ModelConfig: need at least one conv layer");
  }
  for (const ConvLayerSpec& layer : conv_layers) {
    if (layer.kernel < 1 || layer.kernel % 2 == 0) {
      throw std::invalid_argument("ModelConfig: conv kernels must be odd");
    }
    if (layer.channels < 1) {
      throw std::invalid_argument("ModelConfig: conv channels >= 1");
    }
  }
  grid.validate();
  if (limits.feature_dim != 9) {
    throw std::invalid_argument("ModelConfig: pillar feature_dim must be 9");
  }
}

ParamLayout make_layout(const ModelConfig& cfg) {
  ParamLayout layout;
  std::size_t offset = 0;
  const auto block = [&offset](std::size_t count) {
    ParamLayout::Block b{offset, count};
    offset += count;
    return b;
  };
  layout.encoder_w = block(static_cast<std::size_t>(cfg.pillar_feature_dim) * 9);
  layout.encoder_b = block(static_cast<std::size_t>(cfg.pillar_feature_dim));
  int in_ch = cfg.pillar_feature_dim;
  for (const ConvLayerSpec& layer : cfg.conv_layers) {
    ParamLayout::ConvBlock conv;
    conv.in_ch = in_ch;
    conv.out_ch = layer.channels;
    conv.kernel = layer.kernel;
    conv.w = block(static_cast<std::size_t>(layer.channels) *
                   static_cast<std::size_t>(in_ch) *
                   static_cast<std::size_t>(layer.kernel) *
                   static_cast<std::size_t>(layer.kernel));
    conv.b = block(static_cast<std::size_t>(layer.channels));
    layout.convs.push_back(conv);
    in_ch = layer.channels;
  }
  layout.head_in = in_ch;
  layout.head_w = block(static_cast<std::size_t>(2) * static_cast<std::size_t>(in_ch));
  layout.head_b = block(2);
  layout.total = offset;
  return layout;
}

TrainResult train_model(const DatasetManifest& manifest, const ModelConfig& cfg,
                        const LossConfig& loss_cfg, const TrainOptions& options) {
  cfg.validate();
  if (options.batch_size < 1) {
    throw std::invalid_argument("train_model: batch_size >= 1");
  }
  const int n = static_cast<int>(manifest.samples.size());

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    samples.push_back(load_sample(manifest, i));
    if (!(samples.back().truth.spec == cfg.grid)) {
      throw std::invalid_argument("train_model: dataset labels do not match the model grid");
    }
  }

  TrainResult result;
  result.params = init_params<float>(cfg);
  if (options.epochs <= 0 || n == 0) return result;

  AdamState<float> adam = make_adam_state(result.params, options.adam);
  const std::size_t n_cells = cfg.grid.num_cells();

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(options.seed, 0x04dull, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0, kl_sum = 0.0;
    std::vector<float> batch_grads(result.params.values.size(), 0.0f);

    for (int start = 0; start < n; start += options.batch_size) {
      const int batch_n = std::min(options.batch_size, n - start);
      std::fill(batch_grads.begin(), batch_grads.end(), 0.0f);

      for (int bi = 0; bi < batch_n; ++bi) {
        const int idx = order[static_cast<std::size_t>(start + bi)];
        const Sample& sample = samples[static_cast<std::size_t>(idx)];

        PointCloud cloud = sample.cloud;
        GroundTruthGrid truth = sample.truth;
        if (options.augment) {
          const double angle =
              Rng::stream(options.seed, 0xa46ull,
                          static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(n) +
                              static_cast<std::uint64_t>(idx))
                  .uniform(0.0, 2.0 * std::numbers::pi);
          cloud = rotate_z(cloud, angle);
          truth = rotate_label_grid(truth, angle);
        }
        cloud = normalize_intensity(cloud);
        const PillarSet pillars =
            pillarize(cloud, cfg.grid, cfg.limits,
                      derive_seed(options.seed, static_cast<std::uint64_t>(epoch),
                                  static_cast<std::uint64_t>(idx)));

        const BackwardResult<float> bw =
            backward(result.params, pillars, truth, epoch, loss_cfg);
        if (!std::isfinite(bw.loss)) {
          throw std::runtime_error(
              "train_model: non-finite loss at epoch " + std::to_string(epoch) +
              ", sample " + std::to_string(idx));
        }
        loss_sum += bw.loss;
        kl_sum += bw.weighted_kl;
        const float scale = 1.0f / static_cast<float>(batch_n);
        for (std::size_t i = 0; i < batch_grads.size(); ++i) {
          batch_grads[i] += scale * bw.grads[i];
        }
      }
      adam_step(result.params, adam, batch_grads);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lambda = lambda_t(epoch, loss_cfg);
    log.mean_loss = loss_sum / n;
    log.mean_kl = kl_sum / n;
    log.mean_loss_per_cell = log.mean_loss / static_cast<double>(n_cells);
    log.mean_kl_per_cell = log.mean_kl / static_cast<double>(n_cells);
    result.log.push_back(log);
  }
  return result;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write training log: " + path);
  out << "epoch,lambda_t,mean_loss,mean_kl,mean_loss_per_cell,mean_kl_per_cell\n";
  char line[256];
  for (const EpochLog& row : log) {
    std::snprintf(line, sizeof(line), "%d,%.6g,%.10g,%.10g,%.10g,%.10g\n",
                  row.epoch, row.lambda, row.mean_loss, row.mean_kl,
                  row.mean_loss_per_cell, row.mean_kl_per_cell);
    out << line;
  }
}

EvidentialGrid predict(const ModelParams<float>& params, const PointCloud& cloud,
                       const GridSpec& spec) {
  if (!(spec == params.cfg.grid)) {
    throw std::invalid_argument("predict: requested spec does not match the model grid");
  }
  const PointCloud normalized = normalize_intensity(cloud);
  const PillarSet pillars = pillarize(normalized, params.cfg.grid,
                                      params.cfg.limits, /*rng_seed=*/0);
  return forward(params, pillars);
}

namespace {

constexpr char kMagic[5] = "EVWT";
constexpr std::uint8_t kVersion = 1;

}  // namespace

void save_params(const std::string& path, const ModelParams<float>& params) {
  ByteWriter w;
  w.magic(kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(params.cfg.pillar_feature_dim));
  w.u32(static_cast<std::uint32_t>(params.cfg.conv_layers.size()));
  for (const ConvLayerSpec& layer : params.cfg.conv_layers) {
    w.u32(static_cast<std::uint32_t>(layer.kernel));
    w.u32(static_cast<std::uint32_t>(layer.channels));
  }
  w.u32(static_cast<std::uint32_t>(params.cfg.grid.rows));
  w.u32(static_cast<std::uint32_t>(params.cfg.grid.cols));
  w.f64(params.cfg.grid.cell_m);
  w.u32(static_cast<std::uint32_t>(params.cfg.limits.max_pillars));
  w.u32(static_cast<std::uint32_t>(params.cfg.limits.max_points));
  w.u32(static_cast<std::uint32_t>(params.cfg.limits.feature_dim));
  w.u64(params.cfg.seed);
  w.u64(params.values.size());
  for (const float v : params.values) w.f32(v);
  write_file(path, w.bytes());
}

ModelParams<float> load_params(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  ByteReader r(bytes);
  r.expect_magic(kMagic, "evw");
  if (r.u8() != kVersion) throw FormatError("evw: unsupported version");

  ModelConfig cfg;
  cfg.pillar_feature_dim = static_cast<int>(r.u32());
  const std::uint32_t n_conv = r.u32();
  if (n_conv > 64) throw FormatError("evw: implausible conv layer count");
  cfg.conv_layers.clear();
  for (std::uint32_t i = 0; i < n_conv; ++i) {
    ConvLayerSpec layer;
    layer.kernel = static_cast<int>(r.u32());
    layer.channels = static_cast<int>(r.u32());
    cfg.conv_layers.push_back(layer);
  }
  cfg.grid.rows = static_cast<int>(r.u32());
  cfg.grid.cols = static_cast<int>(r.u32());
  cfg.grid.cell_m = r.f64();
  cfg.limits.max_pillars = static_cast<int>(r.u32());
  cfg.limits.max_points = static_cast<int>(r.u32());
  cfg.limits.feature_dim = static_cast<int>(r.u32());
  cfg.seed = r.u64();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("evw: invalid config: ") + e.what());
  }

  const std::uint64_t count = r.u64();
  const ParamLayout layout = make_layout(cfg);
  if (count != layout.total) {
    throw DimensionError("evw: parameter count does not match the config");
  }
  if (r.remaining() < count * 4) throw TruncationError("evw: payload truncated");
  if (r.remaining() > count * 4) {
    throw DimensionError("evw: payload length does not match parameter count");
  }
  ModelParams<float> params;
  params.cfg = cfg;
  params.layout = layout;
  params.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) params.values[i] = r.f32();
  return params;
}

}  // namespace evigrid
