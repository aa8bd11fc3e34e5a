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
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evigrid/grid.hpp"
#include "evigrid/pointcloud.hpp"
#include "evigrid/synth.hpp"

namespace evigrid {

// Configuration or manifest JSON that cannot be interpreted; the message
// names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict object reader: every key must be consumed, unknown keys fail with
// their dotted path.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path);
  ~JsonReader() = default;

  bool has(const std::string& key) const;

  template <typename T>
  T get(const std::string& key, T fallback) {
    mark(key);
    if (!json_.contains(key)) return fallback;
    try {
      return json_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: wrong type for " + path_ + key);
    }
  }

  // Descend into a nested object (missing key yields an empty object).
  nlohmann::json child(const std::string& key);

  // Throws ConfigError if any key was not consumed.
  void finish() const;

 private:
  void mark(const std::string& key) { seen_.push_back(key); }

  // Held by value: readers are routinely constructed from temporaries
  // returned by child().
  nlohmann::json json_;
  std::string path_;
  std::vector<std::string> seen_;
};

// JSON mappings for the configuration structs (strict on read).
nlohmann::json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const LidarConfig& cfg);
LidarConfig lidar_config_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const SceneParams& params);
SceneParams scene_params_from_json(const nlohmann::json& j, const std::string& path);

// Everything needed to synthesize one labeled sample.
struct DatasetConfig {
  GridSpec grid{128, 88, 0.64};
  SceneParams scene;
  LidarConfig sparse_lidar;
  LidarConfig hd_lidar{256, -25.0, 15.0, 0.2, 80.0, 1.9, 0.0};
  int min_hits = 50;
};

nlohmann::json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j,
                                       const std::string& path);

struct SampleRef {
  std::string cloud_file;
  std::string grid_file;
};

struct DatasetManifest {
  int n_samples = 0;
  std::uint64_t seed = 0;
  DatasetConfig config;
  std::vector<SampleRef> samples;
  std::string directory;  // set on load; not serialized
};

// Writes NNNNN.evpc / NNNNN.evgrid pairs plus manifest.json into out_dir
// (created if missing). Deterministic per seed: sample i depends only on
// (seed, i), so thread count does not change any byte.
DatasetManifest generate_dataset(const std::string& out_dir, int n_samples,
                                 std::uint64_t seed, const DatasetConfig& config,
                                 int threads = 1);

DatasetManifest load_manifest(const std::string& manifest_path);

struct Sample {
  PointCloud cloud;
  GroundTruthGrid truth;
};

Sample load_sample(const DatasetManifest& manifest, int index);

}  // namespace evigrid
