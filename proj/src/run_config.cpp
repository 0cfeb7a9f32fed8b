#include "fusebox/run_config.hpp"

#include <algorithm>
#include <set>

#include "fusebox/error.hpp"
#include "fusebox/io.hpp"

namespace fusebox {

using nlohmann::json;

namespace {

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const char* where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string(where) + ": field \"" + key + "\" has the wrong type");
  }
}

const json& object_at(const json& doc, const char* key) {
  static const json kEmpty = json::object();
  const auto it = doc.find(key);
  if (it == doc.end()) return kEmpty;
  if (!it->is_object()) {
    throw ValidationError(std::string("config: \"") + key + "\" must be an object");
  }
  return *it;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

TransformSpec transform_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("transform: expected an object");
  TransformSpec s;
  s.scale_x = field_or(doc, "scale_x", s.scale_x, "transform");
  s.scale_y = field_or(doc, "scale_y", s.scale_y, "transform");
  s.hue_shift = field_or(doc, "hue_shift", s.hue_shift, "transform");
  s.saturation_gain = field_or(doc, "saturation_gain", s.saturation_gain, "transform");
  s.value_gain = field_or(doc, "value_gain", s.value_gain, "transform");
  const bool has_source = doc.contains("source_size");
  if (has_source != doc.contains("target_size")) {
    throw ValidationError("transform: source_size and target_size must be given together");
  }
  if (has_source) {
    const auto from = field_or<std::vector<double>>(doc, "source_size", {}, "transform");
    const auto to = field_or<std::vector<double>>(doc, "target_size", {}, "transform");
    if (from.size() != 2 || to.size() != 2) {
      throw ValidationError("transform: sizes must be [width, height]");
    }
    if (doc.contains("scale_x") || doc.contains("scale_y")) {
      throw ValidationError("transform: give either scale_x/scale_y or source_size/target_size");
    }
    s.scale_x = to[0] / from[0];
    s.scale_y = to[1] / from[1];
    s.frame = ResizeFrame{from[0], from[1], to[0], to[1]};
  }
  return s;
}

nlohmann::ordered_json to_json(const FusionConfig& c) {
  return {{"metric", to_string(c.metric)},
          {"overlap_threshold", c.overlap_threshold},
          {"min_score", c.min_score},
          {"selection", to_string(c.selection)},
          {"clustering", "connected_components"}};
}

nlohmann::ordered_json to_json(const EvalConfig& c) {
  return {{"iou_thresholds", c.iou_thresholds},
          {"recall_points", c.recall_points},
          {"max_detections_per_image", c.max_detections_per_image}};
}

nlohmann::ordered_json to_json(const TransformSpec& s) {
  nlohmann::ordered_json out{{"scale_x", s.scale_x},
                             {"scale_y", s.scale_y},
                             {"hue_shift", s.hue_shift},
                             {"saturation_gain", s.saturation_gain},
                             {"value_gain", s.value_gain}};
  if (s.frame) {
    out["source_size"] = {s.frame->source_width, s.frame->source_height};
    out["target_size"] = {s.frame->target_width, s.frame->target_height};
  }
  return out;
}

RunConfig RunConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  RunConfig rc;

  const json& fusion = object_at(doc, "fusion");
  if (fusion.contains("metric")) {
    rc.fusion.metric = parse_metric(field_or<std::string>(fusion, "metric", "", "fusion"));
  }
  if (fusion.contains("selection")) {
    rc.fusion.selection = parse_selection(field_or<std::string>(fusion, "selection", "", "fusion"));
  }
  rc.fusion.overlap_threshold =
      field_or(fusion, "overlap_threshold", rc.fusion.overlap_threshold, "fusion");
  rc.fusion.min_score = field_or(fusion, "min_score", rc.fusion.min_score, "fusion");

  const json& eval = object_at(doc, "eval");
  rc.eval.iou_thresholds = field_or(eval, "iou_thresholds", rc.eval.iou_thresholds, "eval");
  rc.eval.recall_points = field_or(eval, "recall_points", rc.eval.recall_points, "eval");
  rc.eval.max_detections_per_image =
      field_or(eval, "max_detections_per_image", rc.eval.max_detections_per_image, "eval");

  if (const auto it = doc.find("transforms"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("config: \"transforms\" must be an array");
    for (const json& t : *it) {
      NamedTransform nt;
      nt.label = field_or<std::string>(t, "label", "", "transform");
      nt.spec = transform_from_json(t);
      rc.transforms.push_back(std::move(nt));
    }
  }

  if (const auto it = doc.find("inputs"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("config: \"inputs\" must be an array");
    for (const json& in : *it) {
      if (!in.is_object()) throw ValidationError("config: each input must be an object");
      InputSpec spec;
      spec.label = field_or<std::string>(in, "label", "", "input");
      const std::string path = field_or<std::string>(in, "path", "", "input");
      if (path.empty()) throw ValidationError("config: input '" + spec.label + "' has no path");
      spec.path = resolve(base_dir, path);
      if (in.contains("transform") && !in["transform"].is_null()) {
        spec.transform = field_or<std::string>(in, "transform", "", "input");
      }
      rc.inputs.push_back(std::move(spec));
    }
  }

  if (const auto it = doc.find("ground_truth"); it != doc.end() && !it->is_null()) {
    rc.ground_truth = resolve(base_dir, field_or<std::string>(doc, "ground_truth", "", "config"));
  }
  if (const auto it = doc.find("categories"); it != doc.end() && !it->is_null()) {
    rc.categories = field_or<std::set<int>>(doc, "categories", {}, "config");
  }
  if (const auto it = doc.find("output"); it != doc.end() && !it->is_null()) {
    rc.output = resolve(base_dir, field_or<std::string>(doc, "output", "", "config"));
  }
  return rc;
}

void RunConfig::validate() const {
  fusion.validate();
  eval.validate();

  std::set<std::string> transform_labels;
  for (const NamedTransform& t : transforms) {
    if (t.label.empty()) throw ValidationError("config: transform without a label");
    if (!transform_labels.insert(t.label).second) {
      throw ValidationError("config: duplicate transform label '" + t.label + "'");
    }
    try {
      t.spec.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("config: transform '" + t.label + "': " + e.what());
    }
  }

  std::set<std::string> input_labels;
  for (const InputSpec& in : inputs) {
    if (in.label.empty()) throw ValidationError("config: input without a label");
    if (in.label == "fusion") {
      throw ValidationError("config: input label 'fusion' is reserved");
    }
    if (!input_labels.insert(in.label).second) {
      throw ValidationError("config: duplicate input label '" + in.label + "'");
    }
    if (in.transform && !transform_labels.contains(*in.transform)) {
      throw ValidationError("config: input '" + in.label + "' references undeclared transform '" +
                            *in.transform + "'");
    }
  }
  if (categories && categories->empty()) {
    throw ValidationError("config: \"categories\" must not be empty");
  }
}

const TransformSpec* RunConfig::find_transform(const std::string& label) const {
  const auto it = std::find_if(transforms.begin(), transforms.end(),
                               [&](const NamedTransform& t) { return t.label == label; });
  return it == transforms.end() ? nullptr : &it->spec;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    return RunConfig::from_json(doc, path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace fusebox
