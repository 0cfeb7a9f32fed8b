#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fusebox/eval.hpp"
#include "fusebox/fusion.hpp"
#include "fusebox/tta.hpp"

namespace fusebox {

struct NamedTransform {
  std::string label;
  TransformSpec spec;
};

struct InputSpec {
  std::string label;
  std::filesystem::path path;
  std::optional<std::string> transform;  // label of a declared transform
};

// Everything one run needs. Relative paths in a config file resolve against the
// file's directory.
//
//   {
//     "fusion": {"metric": "giou", "overlap_threshold": 0.5, "min_score": 0.05, "selection": "max"},
//     "eval": {"iou_thresholds": [0.5, ...], "recall_points": 101, "max_detections_per_image": 100},
//     "transforms": [{"label": "big", "scale_x": 1.1666, "scale_y": 1.25, "hue_shift": 0,
//                     "saturation_gain": 1, "value_gain": 1}],
//     "inputs": [{"label": "light", "path": "light.json", "transform": "big"}],
//     "ground_truth": "gt.json",
//     "categories": [1, 2, 3],
//     "output": "fused.json"
//   }
struct RunConfig {
  FusionConfig fusion;
  EvalConfig eval;
  std::vector<NamedTransform> transforms;
  std::vector<InputSpec> inputs;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::set<int>> categories;
  std::optional<std::filesystem::path> output;

  // Checks every field and cross-reference without touching input files.
  void validate() const;
  const TransformSpec* find_transform(const std::string& label) const;

  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
};

RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const FusionConfig& config);
nlohmann::ordered_json to_json(const EvalConfig& config);
nlohmann::ordered_json to_json(const TransformSpec& spec);
TransformSpec transform_from_json(const nlohmann::json& doc);

}  // namespace fusebox
