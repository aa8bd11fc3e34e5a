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

#include "evigrid/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "evigrid/binary_io.hpp"
#include "evigrid/grid_io.hpp"
#include "evigrid/rng.hpp"

namespace evigrid {

namespace fs = std::filesystem;
using nlohmann::json;

JsonReader::JsonReader(const json& j, std::string path)
    : json_(j), path_(std::move(path)) {
  if (!json_.is_object() && !json_.is_null()) {
    throw ConfigError("config: expected an object at " +
                      (path_.empty() ? std::string("<root>") : path_));
  }
  if (!path_.empty()) path_ += ".";
}

bool JsonReader::has(const std::string& key) const { return json_.contains(key); }

json JsonReader::child(const std::string& key) {
  mark(key);
  if (!json_.contains(key)) return json::object();
  return json_.at(key);
}

void JsonReader::finish() const {
  if (json_.is_null()) return;
  for (const auto& [key, value] : json_.items()) {
    (void)value;
    if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
      throw ConfigError("config: unknown key " + path_ + key);
    }
  }
}

json to_json(const GridSpec& spec) {
  return json{{"rows", spec.rows}, {"cols", spec.cols}, {"cell_m", spec.cell_m}};
}

GridSpec grid_spec_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  GridSpec spec{128, 88, 0.64};
  spec.rows = r.get("rows", spec.rows);
  spec.cols = r.get("cols", spec.cols);
  spec.cell_m = r.get("cell_m", spec.cell_m);
  r.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return spec;
}

json to_json(const LidarConfig& cfg) {
  return json{{"channels", cfg.channels},
              {"vfov_min_deg", cfg.vfov_min_deg},
              {"vfov_max_deg", cfg.vfov_max_deg},
              {"azimuth_step_deg", cfg.azimuth_step_deg},
              {"max_range", cfg.max_range},
              {"mount_height", cfg.mount_height},
              {"noise_sigma", cfg.noise_sigma}};
}

LidarConfig lidar_config_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  LidarConfig cfg;
  cfg.channels = r.get("channels", cfg.channels);
  cfg.vfov_min_deg = r.get("vfov_min_deg", cfg.vfov_min_deg);
  cfg.vfov_max_deg = r.get("vfov_max_deg", cfg.vfov_max_deg);
  cfg.azimuth_step_deg = r.get("azimuth_step_deg", cfg.azimuth_step_deg);
  cfg.max_range = r.get("max_range", cfg.max_range);
  cfg.mount_height = r.get("mount_height", cfg.mount_height);
  cfg.noise_sigma = r.get("noise_sigma", cfg.noise_sigma);
  r.finish();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return cfg;
}

json to_json(const SceneParams& params) {
  return json{{"n_vehicles", params.n_vehicles},
              {"n_pedestrians", params.n_pedestrians},
              {"n_static", params.n_static},
              {"extent_x", params.extent_x},
              {"extent_y", params.extent_y},
              {"slope_x", params.slope_x},
              {"slope_y", params.slope_y},
              {"origin_clearance", params.origin_clearance},
              {"max_retries", params.max_retries}};
}

SceneParams scene_params_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  SceneParams params;
  params.n_vehicles = r.get("n_vehicles", params.n_vehicles);
  params.n_pedestrians = r.get("n_pedestrians", params.n_pedestrians);
  params.n_static = r.get("n_static", params.n_static);
  params.extent_x = r.get("extent_x", params.extent_x);
  params.extent_y = r.get("extent_y", params.extent_y);
  params.slope_x = r.get("slope_x", params.slope_x);
  params.slope_y = r.get("slope_y", params.slope_y);
  params.origin_clearance = r.get("origin_clearance", params.origin_clearance);
  params.max_retries = r.get("max_retries", params.max_retries);
  r.finish();
  return params;
}

json to_json(const DatasetConfig& cfg) {
  return json{{"grid", to_json(cfg.grid)},
              {"scene", to_json(cfg.scene)},
              {"sparse_lidar", to_json(cfg.sparse_lidar)},
              {"hd_lidar", to_json(cfg.hd_lidar)},
              {"min_hits", cfg.min_hits}};
}

DatasetConfig dataset_config_from_json(const json& j, const std::string& path) {
  JsonReader r(j, path);
  DatasetConfig cfg;
  const std::string prefix = path.empty() ? "" : path + ".";
  if (r.has("grid")) cfg.grid = grid_spec_from_json(r.child("grid"), prefix + "grid");
  else r.child("grid");
  cfg.scene = scene_params_from_json(r.child("scene"), prefix + "scene");
  if (r.has("sparse_lidar")) {
    cfg.sparse_lidar =
        lidar_config_from_json(r.child("sparse_lidar"), prefix + "sparse_lidar");
  } else {
    r.child("sparse_lidar");
  }
  if (r.has("hd_lidar")) {
    cfg.hd_lidar = lidar_config_from_json(r.child("hd_lidar"), prefix + "hd_lidar");
  } else {
    r.child("hd_lidar");
  }
  cfg.min_hits = r.get("min_hits", cfg.min_hits);
  r.finish();
  return cfg;
}

namespace {

std::string sample_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d%s", index, ext);
  return buf;
}

void generate_one(const DatasetConfig& cfg, std::uint64_t seed, int index,
                  const fs::path& dir) {
  const Scene scene = generate_scene(derive_seed(seed, index, 0), cfg.scene);
  const LabeledCloud sparse =
      raycast(scene, cfg.sparse_lidar, derive_seed(seed, index, 1));
  const LabeledCloud hd = raycast(scene, cfg.hd_lidar, derive_seed(seed, index, 2));
  const GroundTruthGrid truth =
      ground_truth_from_hd(scene, hd, sparse, cfg.grid, cfg.min_hits);
  save_point_cloud((dir / sample_name(index, ".evpc")).string(),
                   sparse.to_point_cloud());
  save_grid((dir / sample_name(index, ".evgrid")).string(), truth);
}

}  // namespace

DatasetManifest generate_dataset(const std::string& out_dir, int n_samples,
                                 std::uint64_t seed, const DatasetConfig& config,
                                 int threads) {
  if (n_samples < 0) throw std::invalid_argument("generate_dataset: n_samples >= 0");
  config.grid.validate();
  config.sparse_lidar.validate();
  config.hd_lidar.validate();

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory: " + out_dir);

  threads = std::max(1, std::min(threads, n_samples == 0 ? 1 : n_samples));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (int i = next.fetch_add(1); i < n_samples; i = next.fetch_add(1)) {
      if (failed.load()) return;
      try {
        generate_one(config, seed, i, dir);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure = "sample " + std::to_string(i) + ": " + e.what();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("generate_dataset: " + failure);

  DatasetManifest manifest;
  manifest.n_samples = n_samples;
  manifest.seed = seed;
  manifest.config = config;
  manifest.directory = dir.string();
  for (int i = 0; i < n_samples; ++i) {
    manifest.samples.push_back(
        SampleRef{sample_name(i, ".evpc"), sample_name(i, ".evgrid")});
  }

  json samples = json::array();
  for (const SampleRef& s : manifest.samples) {
    samples.push_back(json{{"cloud", s.cloud_file}, {"grid", s.grid_file}});
  }
  const json doc{{"format", "evigrid-dataset"},
                 {"version", 1},
                 {"seed", seed},
                 {"n_samples", n_samples},
                 {"config", to_json(config)},
                 {"samples", samples}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in: " + out_dir);
  out << doc.dump(2) << "\n";
  return manifest;
}

DatasetManifest load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("manifest: invalid JSON: " + std::string(e.what()));
  }
  JsonReader r(doc, "");
  if (r.get<std::string>("format", "") != "evigrid-dataset") {
    throw ConfigError("manifest: not an evigrid-dataset file");
  }
  if (r.get("version", 1) != 1) throw ConfigError("manifest: unsupported version");

  DatasetManifest manifest;
  manifest.seed = r.get<std::uint64_t>("seed", 0);
  manifest.n_samples = r.get("n_samples", 0);
  manifest.config = dataset_config_from_json(r.child("config"), "config");
  const json samples = r.child("samples");
  r.finish();
  if (!samples.is_array()) throw ConfigError("manifest: samples must be an array");
  for (const json& s : samples) {
    JsonReader sr(s, "samples[]");
    SampleRef ref;
    ref.cloud_file = sr.get<std::string>("cloud", "");
    ref.grid_file = sr.get<std::string>("grid", "");
    sr.finish();
    if (ref.cloud_file.empty() || ref.grid_file.empty()) {
      throw ConfigError("manifest: sample entry missing cloud/grid");
    }
    manifest.samples.push_back(ref);
  }
  if (static_cast<int>(manifest.samples.size()) != manifest.n_samples) {
    throw ConfigError("manifest: n_samples does not match the sample list");
  }
  manifest.directory = fs::path(manifest_path).parent_path().string();
  return manifest;
}

Sample load_sample(const DatasetManifest& manifest, int index) {
  if (index < 0 || index >= static_cast<int>(manifest.samples.size())) {
    throw std::out_of_range("load_sample: index outside manifest");
  }
  const fs::path dir(manifest.directory);
  const SampleRef& ref = manifest.samples[static_cast<std::size_t>(index)];
  Sample sample;
  sample.cloud = load_point_cloud((dir / ref.cloud_file).string());
  sample.truth = load_label_grid((dir / ref.grid_file).string());
  return sample;
}

}  // namespace evigrid
