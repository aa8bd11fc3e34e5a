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

// Batch frontend: dataset generation, baseline mapping, training, prediction,
// evaluation and rendering. Data goes to files, logs to stderr; stdout stays
// clean for scripting. Exit codes: 0 success, 2 flag errors, 3 unreadable
// files, 4 config errors, 1 anything else.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "evigrid/binary_io.hpp"
#include "evigrid/dataset.hpp"
#include "evigrid/eval.hpp"
#include "evigrid/geometric_ism.hpp"
#include "evigrid/grid_io.hpp"
#include "evigrid/model.hpp"
#include "evigrid/synth.hpp"

namespace {

using namespace evigrid;
using nlohmann::json;

struct RunConfig {
  DatasetConfig dataset;
  GeometricIsmParams geometric;
  LossConfig loss;
  ModelConfig model;  // grid mirrors dataset.grid
  TrainOptions train;
  EvalOptions eval;

  RunConfig() { sync(); }

  void sync() {
    model.grid = dataset.grid;
    eval.geometric = geometric;
  }
};

GeometricIsmParams geometric_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  GeometricIsmParams p;
  p.h_min = r.get("h_min", p.h_min);
  p.h_max = r.get("h_max", p.h_max);
  p.m_hit = r.get("m_hit", p.m_hit);
  p.m_free = r.get("m_free", p.m_free);
  r.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return p;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }

  JsonReader r(doc, "");
  if (r.has("dataset")) {
    cfg.dataset = dataset_config_from_json(r.child("dataset"), "dataset");
  } else {
    r.child("dataset");
  }
  if (r.has("geometric_ism")) {
    cfg.geometric = geometric_from_json(r.child("geometric_ism"), "geometric_ism");
  } else {
    r.child("geometric_ism");
  }
  {
    JsonReader lr(r.child("loss"), "loss");
    cfg.loss.occupied_weight = lr.get("occupied_weight", cfg.loss.occupied_weight);
    cfg.loss.anneal_epochs = lr.get("anneal_epochs", cfg.loss.anneal_epochs);
    lr.finish();
    if (cfg.loss.occupied_weight < 1.0) {
      throw ConfigError("config: loss.occupied_weight must be >= 1");
    }
  }
  {
    JsonReader mr(r.child("model"), "model");
    cfg.model.pillar_feature_dim =
        mr.get("pillar_feature_dim", cfg.model.pillar_feature_dim);
    if (mr.has("conv_layers")) {
      const json layers = mr.child("conv_layers");
      if (!layers.is_array()) {
        throw ConfigError("config: model.conv_layers must be an array of [kernel, channels]");
      }
      cfg.model.conv_layers.clear();
      for (const json& layer : layers) {
        if (!layer.is_array() || layer.size() != 2) {
          throw ConfigError("config: model.conv_layers entries are [kernel, channels]");
        }
        cfg.model.conv_layers.push_back(
            ConvLayerSpec{layer[0].get<int>(), layer[1].get<int>()});
      }
    } else {
      mr.child("conv_layers");
    }
    cfg.model.limits.max_pillars =
        mr.get("max_pillars", cfg.model.limits.max_pillars);
    cfg.model.limits.max_points = mr.get("max_points", cfg.model.limits.max_points);
    cfg.model.seed = mr.get<std::uint64_t>("seed", cfg.model.seed);
    mr.finish();
  }
  {
    JsonReader tr(r.child("train"), "train");
    cfg.train.epochs = tr.get("epochs", cfg.train.epochs);
    cfg.train.batch_size = tr.get("batch_size", cfg.train.batch_size);
    cfg.train.augment = tr.get("augment", cfg.train.augment);
    cfg.train.seed = tr.get<std::uint64_t>("seed", cfg.train.seed);
    cfg.train.adam.learning_rate =
        tr.get("learning_rate", cfg.train.adam.learning_rate);
    tr.finish();
  }
  {
    JsonReader er(r.child("eval"), "eval");
    cfg.eval.truth.true_evidence =
        er.get("true_evidence", cfg.eval.truth.true_evidence);
    cfg.eval.observed_only = er.get("observed_only", cfg.eval.observed_only);
    cfg.eval.render = er.get("render", cfg.eval.render);
    er.finish();
  }
  r.finish();
  cfg.sync();
  try {
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: model: ") + e.what());
  }
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"evidential occupancy grid mapping toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  app.add_option("--config", config_path, "JSON run configuration")
      ->envname("EVIGRID_CONFIG");
  app.add_option("--threads", threads, "worker threads for batch commands");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "synthesize a labeled dataset");
  std::string gen_out;
  int gen_n = 10;
  std::uint64_t gen_seed = 1;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--seed", gen_seed, "dataset seed");

  // geometric
  auto* geo = app.add_subcommand("geometric", "run the geometric baseline");
  std::string geo_cloud, geo_manifest, geo_out;
  geo->add_option("--cloud", geo_cloud, "input .evpc point cloud");
  geo->add_option("--manifest", geo_manifest, "dataset manifest (batch mode)");
  geo->add_option("--out", geo_out, "output .evgrid file or directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train the deep inverse sensor model");
  std::string train_manifest, train_weights, train_log;
  tr->add_option("--manifest", train_manifest, "dataset manifest")->required();
  tr->add_option("--out-weights", train_weights, "output .evw weights")->required();
  tr->add_option("--log", train_log, "training log CSV (default <weights>.log.csv)");
  int train_epochs = -1, train_batch = -1;
  std::int64_t train_seed = -1;
  bool flag_augment = false, flag_no_augment = false;
  tr->add_option("--epochs", train_epochs, "override train.epochs");
  tr->add_option("--batch-size", train_batch, "override train.batch_size");
  tr->add_option("--seed", train_seed, "override train.seed");
  tr->add_flag("--augment", flag_augment, "force rotation augmentation on");
  tr->add_flag("--no-augment", flag_no_augment, "force rotation augmentation off");

  // predict
  auto* pr = app.add_subcommand("predict", "predict an evidential grid from a cloud");
  std::string pred_weights, pred_cloud, pred_out;
  pr->add_option("--weights", pred_weights, "trained .evw weights")->required();
  pr->add_option("--cloud", pred_cloud, "input .evpc point cloud")->required();
  pr->add_option("--out", pred_out, "output .evgrid")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "compare geometric and deep ISMs");
  std::string eval_manifest, eval_weights, eval_out;
  bool eval_no_render = false;
  ev->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  ev->add_option("--weights", eval_weights, "trained .evw weights")->required();
  ev->add_option("--out-dir", eval_out, "report output directory")->required();
  ev->add_flag("--no-render", eval_no_render, "skip PPM rendering");

  // render
  auto* re = app.add_subcommand("render", "render a grid file to PPM");
  std::string render_grid, render_out;
  re->add_option("--grid", render_grid, "input .evgrid")->required();
  re->add_option("--out", render_out, "output .ppm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: cli: " << e.what() << "\n";
    return 2;
  }

  const RunConfig cfg = load_run_config(config_path);

  if (gen->parsed()) {
    const DatasetManifest manifest =
        generate_dataset(gen_out, gen_n, gen_seed, cfg.dataset, threads);
    std::cerr << "generated " << manifest.n_samples << " samples in " << gen_out
              << "\n";
    return 0;
  }

  if (geo->parsed()) {
    if (geo_cloud.empty() == geo_manifest.empty()) {
      std::cerr << "error: cli: geometric needs exactly one of --cloud / --manifest\n";
      return 2;
    }
    if (!geo_cloud.empty()) {
      const PointCloud cloud = load_point_cloud(geo_cloud);
      save_grid(geo_out, geometric_ism(cloud, cfg.dataset.grid, cfg.geometric));
      return 0;
    }
    const DatasetManifest manifest = load_manifest(geo_manifest);
    std::filesystem::create_directories(geo_out);
    for (int i = 0; i < manifest.n_samples; ++i) {
      const Sample sample = load_sample(manifest, i);
      char name[32];
      std::snprintf(name, sizeof(name), "%05d_geom.evgrid", i);
      save_grid((std::filesystem::path(geo_out) / name).string(),
                geometric_ism(sample.cloud, sample.truth.spec, cfg.geometric));
    }
    std::cerr << "wrote " << manifest.n_samples << " baseline grids to " << geo_out
              << "\n";
    return 0;
  }

  if (tr->parsed()) {
    const DatasetManifest manifest = load_manifest(train_manifest);
    ModelConfig model_cfg = cfg.model;
    model_cfg.grid = manifest.config.grid;
    TrainOptions options = cfg.train;
    if (train_epochs >= 0) options.epochs = train_epochs;
    if (train_batch >= 1) options.batch_size = train_batch;
    if (train_seed >= 0) options.seed = static_cast<std::uint64_t>(train_seed);
    if (flag_augment) options.augment = true;
    if (flag_no_augment) options.augment = false;

    const TrainResult result = train_model(manifest, model_cfg, cfg.loss, options);
    save_params(train_weights, result.params);
    const std::string log_path =
        train_log.empty() ? train_weights + ".log.csv" : train_log;
    write_training_log(log_path, result.log);
    if (!result.log.empty()) {
      std::cerr << "trained " << options.epochs << " epochs; first/last mean loss "
                << result.log.front().mean_loss << " / "
                << result.log.back().mean_loss << "\n";
    }
    return 0;
  }

  if (pr->parsed()) {
    const ModelParams<float> params = load_params(pred_weights);
    const PointCloud cloud = load_point_cloud(pred_cloud);
    save_grid(pred_out, predict(params, cloud, params.cfg.grid));
    return 0;
  }

  if (ev->parsed()) {
    const DatasetManifest manifest = load_manifest(eval_manifest);
    const ModelParams<float> params = load_params(eval_weights);
    EvalOptions options = cfg.eval;
    options.threads = threads;
    if (eval_no_render) options.render = false;
    const EvalReport report = evaluate_run(manifest, params, options, eval_out);
    std::cerr << "evaluated " << report.n_frames << " frames; mean KL geometric "
              << report.geometric.mean_kl << ", deep " << report.deep.mean_kl
              << "\n";
    return 0;
  }

  if (re->parsed()) {
    const GridFile grid = load_grid(render_grid);
    std::visit([&](const auto& g) { write_file(render_out, render_ppm(g)); }, grid);
    return 0;
  }

  std::cerr << "error: cli: no subcommand\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
