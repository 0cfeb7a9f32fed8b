#include "fusebox/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fusebox/detections.hpp"
#include "fusebox/error.hpp"
#include "fusebox/eval.hpp"
#include "fusebox/fusion.hpp"
#include "fusebox/io.hpp"
#include "fusebox/png_io.hpp"
#include "fusebox/run_config.hpp"
#include "fusebox/tta.hpp"

namespace fusebox {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void init_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("fusebox");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    return true;
  }();
  (void)once;

  const char* env = std::getenv("FUSEBOX_LOG");
  const std::string level = env ? env : "warn";
  if (level == "off") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

// Flags shared by fuse and ablate.
struct FusionFlags {
  std::optional<std::string> config;
  std::optional<std::string> metric;
  std::optional<double> threshold;
  std::optional<double> min_score;
  std::optional<std::string> selection;
  std::optional<std::string> out;
  bool no_timestamp = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "Run configuration (JSON)");
    cmd.add_option("--metric", metric, "Clustering overlap metric: iou or giou");
    cmd.add_option("--threshold", threshold, "Overlap threshold; pairs strictly above it are joined");
    cmd.add_option("--min-score", min_score, "Drop detections scoring below this before clustering");
    cmd.add_option("--selection", selection, "Cluster representative: max or wavg");
    cmd.add_option("--out", out, "Output path");
    cmd.add_flag("--no-timestamp", no_timestamp, "Omit timestamps so outputs are byte-reproducible");
  }

  RunConfig load() const {
    RunConfig rc = config ? load_run_config(*config) : RunConfig{};
    if (metric) rc.fusion.metric = parse_metric(*metric);
    if (threshold) rc.fusion.overlap_threshold = *threshold;
    if (min_score) rc.fusion.min_score = *min_score;
    if (selection) rc.fusion.selection = parse_selection(*selection);
    return rc;
  }
};

struct LoadedInput {
  InputSpec spec;
  std::string sha256;
  PredictionSet set;
};

ParseError in_file(const fs::path& path, const std::exception& e) {
  return ParseError(path.string() + ": " + e.what());
}

GroundTruth load_ground_truth(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_ground_truth(text);
  } catch (const ParseError& e) {
    throw in_file(path, e);
  }
}

// Reads every input, infers the shared category set, parses and maps each back
// to source coordinates.
std::vector<LoadedInput> load_inputs(const RunConfig& rc, const std::optional<GroundTruth>& gt) {
  std::vector<std::string> texts;
  texts.reserve(rc.inputs.size());
  for (const InputSpec& in : rc.inputs) texts.push_back(read_file(in.path));

  std::set<int> categories;
  if (rc.categories) {
    categories = *rc.categories;
  } else if (gt) {
    categories = gt->category_ids();
  } else {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        const std::set<int> found = scan_categories(texts[i]);
        categories.insert(found.begin(), found.end());
      } catch (const ParseError& e) {
        throw in_file(rc.inputs[i].path, e);
      }
    }
  }

  std::vector<LoadedInput> loaded;
  loaded.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const InputSpec& in = rc.inputs[i];
    PredictionSet set;
    try {
      set = parse_predictions(texts[i], categories, in.label);
    } catch (const ParseError& e) {
      throw in_file(in.path, e);
    }
    if (in.transform) {
      set = map_predictions(set, *rc.find_transform(*in.transform));
    }
    spdlog::info("{}: {} detections from {}", in.label, set.size(), in.path.string());
    loaded.push_back({in, sha256_hex(texts[i]), std::move(set)});
  }
  return loaded;
}

ojson describe_inputs(const RunConfig& rc, const std::vector<LoadedInput>& loaded) {
  ojson inputs = ojson::array();
  for (const LoadedInput& in : loaded) {
    ojson entry{{"label", in.spec.label},
                {"path", in.spec.path.generic_string()},
                {"sha256", in.sha256},
                {"detections", in.set.size()}};
    if (in.spec.transform) {
      entry["transform"] = {{"label", *in.spec.transform},
                            {"spec", to_json(*rc.find_transform(*in.spec.transform))}};
    } else {
      entry["transform"] = nullptr;
    }
    inputs.push_back(std::move(entry));
  }
  return inputs;
}

PredictionSet fuse_loaded(const std::vector<LoadedInput>& loaded, const FusionConfig& config) {
  std::vector<PredictionSet> sets;
  sets.reserve(loaded.size());
  for (const LoadedInput& in : loaded) sets.push_back(in.set);
  return fuse(sets, config);
}

// ---------------------------------------------------------------------------

int cmd_fuse(const FusionFlags& flags, const std::vector<std::string>& files, std::ostream& out) {
  RunConfig rc = flags.load();
  for (const std::string& f : files) {
    rc.inputs.push_back({fs::path(f).stem().string(), fs::path(f), std::nullopt});
  }
  if (flags.out) rc.output = fs::path(*flags.out);
  rc.validate();
  if (rc.inputs.empty()) {
    throw ValidationError("fuse: no prediction inputs (use --config or list files)");
  }

  std::optional<GroundTruth> gt;
  if (!rc.categories && rc.ground_truth) gt = load_ground_truth(*rc.ground_truth);
  const std::vector<LoadedInput> loaded = load_inputs(rc, gt);
  const PredictionSet fused = fuse_loaded(loaded, rc.fusion);
  const std::string text = emit_predictions(fused) + "\n";

  std::size_t input_total = 0;
  for (const LoadedInput& in : loaded) input_total += in.set.size();
  spdlog::info("fused {} detections into {}", input_total, fused.size());

  if (!rc.output) {
    out << text;
    return kExitOk;
  }
  write_file(*rc.output, text);

  ojson meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["fusion"] = to_json(rc.fusion);
  meta["categories"] = fused.categories();
  meta["inputs"] = describe_inputs(rc, loaded);
  meta["output"] = {{"path", rc.output->generic_string()},
                    {"detections", fused.size()},
                    {"sha256", sha256_hex(text)}};
  if (!flags.no_timestamp) meta["timestamp"] = utc_timestamp();
  fs::path meta_path = *rc.output;
  meta_path += ".meta.json";
  write_file(meta_path, meta.dump(2) + "\n");
  out << "wrote " << fused.size() << " detections to " << rc.output->string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string predictions;
  std::string ground_truth;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::string> label;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RunConfig rc = a.config ? load_run_config(*a.config) : RunConfig{};
  rc.validate();

  const GroundTruth gt = load_ground_truth(a.ground_truth);
  const std::string text = read_file(a.predictions);
  const std::string label = a.label ? *a.label : fs::path(a.predictions).stem().string();
  PredictionSet preds;
  try {
    preds = parse_predictions(text, gt.category_ids(), label);
  } catch (const ParseError& e) {
    throw in_file(a.predictions, e);
  }
  const EvalReport report = evaluate(preds, gt, rc.eval);

  const std::vector<std::pair<std::string, double>> rows{{label, report.map_overall}};
  out << format_table(rows);
  out << "\nper-class AP (mean over " << report.thresholds.size() << " IoU thresholds):\n";
  for (const auto& [c, aps] : report.per_class_ap) {
    double mean = 0.0;
    for (const double ap : aps) mean += ap;
    mean /= static_cast<double>(aps.size());
    const std::string& name = gt.categories.at(c).name;
    out << fmt::format("  {:>4} {:<16} {:.3f}\n", c, name, mean);
  }
  if (a.out) {
    ojson doc = report_to_json(report);
    doc["eval"] = to_json(rc.eval);
    write_file(*a.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

struct TransformArgs {
  std::string input_dir;
  std::string output_dir;
  std::optional<std::string> config;
  std::optional<std::string> transform_label;
  std::optional<double> scale_x, scale_y, hue_shift, saturation_gain, value_gain;
  std::vector<double> source_size, target_size;
};

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png";
}

int cmd_transform(const TransformArgs& a, std::ostream& out, std::ostream& err) {
  TransformSpec spec;
  if (a.transform_label) {
    if (!a.config) throw ValidationError("transform: --transform requires --config");
    const RunConfig rc = load_run_config(*a.config);
    rc.validate();
    const TransformSpec* found = rc.find_transform(*a.transform_label);
    if (!found) {
      throw ValidationError("transform: undeclared transform '" + *a.transform_label + "'");
    }
    spec = *found;
  }
  if (!a.source_size.empty() || !a.target_size.empty()) {
    if (a.source_size.size() != 2 || a.target_size.size() != 2 || a.scale_x || a.scale_y) {
      throw ValidationError("transform: --source-size and --target-size go together, without --scale-*");
    }
    const TransformSpec sized = TransformSpec::resize(a.source_size[0], a.source_size[1],
                                                      a.target_size[0], a.target_size[1]);
    spec.scale_x = sized.scale_x;
    spec.scale_y = sized.scale_y;
    spec.frame = sized.frame;
  }
  if (a.scale_x || a.scale_y) spec.frame.reset();
  if (a.scale_x) spec.scale_x = *a.scale_x;
  if (a.scale_y) spec.scale_y = *a.scale_y;
  if (a.hue_shift) spec.hue_shift = *a.hue_shift;
  if (a.saturation_gain) spec.saturation_gain = *a.saturation_gain;
  if (a.value_gain) spec.value_gain = *a.value_gain;
  spec.validate();

  const fs::path in_dir(a.input_dir);
  const fs::path out_dir(a.output_dir);
  std::error_code ec;
  if (!fs::is_directory(in_dir, ec)) {
    throw IoError("transform: '" + in_dir.string() + "' is not a directory");
  }
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("transform: cannot create '" + out_dir.string() + "': " + ec.message());
  if (fs::equivalent(in_dir, out_dir, ec)) {
    throw ValidationError("transform: output directory must differ from the input directory");
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (is_png(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  int status = kExitOk;
  ojson manifest = ojson::array();
  for (const fs::path& file : files) {
    const fs::path target = out_dir / file.filename();
    try {
      const std::string bytes = read_file(file);
      const RasterImage img = decode_png(
          {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
      RasterImage result;
      if (spec.identity()) {
        write_file(target, bytes);
        result = img;
      } else {
        result = apply_transform(img, spec);
        write_png(target, result);
      }
      ojson entry{{"file", file.filename().string()}};
      entry.update(to_json(spec));
      entry["interpolation"] = "bilinear_half_pixel";
      entry["source_size"] = {img.width(), img.height()};
      entry["size"] = {result.width(), result.height()};
      manifest.push_back(std::move(entry));
      spdlog::info("{} -> {} ({}x{})", file.string(), target.string(), result.width(),
                   result.height());
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      status = kExitIo;
    } catch (const Error& e) {
      err << "error: " << file.string() << ": " << e.what() << "\n";
      if (status == kExitOk) status = kExitInvalid;
    }
  }
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  out << "transformed " << manifest.size() << " of " << files.size() << " images into "
      << out_dir.string() << "\n";
  return status;
}

int cmd_ablate(const FusionFlags& flags, std::ostream& out) {
  RunConfig rc = flags.load();
  rc.validate();
  if (!rc.ground_truth) {
    throw ValidationError("ablate requires ground_truth in the config");
  }
  if (rc.inputs.empty()) {
    throw ValidationError("ablate: config declares no inputs");
  }

  const GroundTruth gt = load_ground_truth(*rc.ground_truth);
  if (!rc.categories) rc.categories = gt.category_ids();
  const std::vector<LoadedInput> loaded = load_inputs(rc, gt);

  std::vector<std::pair<std::string, double>> rows;
  for (const LoadedInput& in : loaded) {
    rows.emplace_back(in.spec.label, evaluate(in.set, gt, rc.eval).map_overall);
  }
  const PredictionSet fused = fuse_loaded(loaded, rc.fusion);
  rows.emplace_back("fusion", evaluate(fused, gt, rc.eval).map_overall);

  out << format_table(rows);

  if (flags.out) {
    ojson doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    ojson table = ojson::array();
    for (const auto& [label, value] : rows) table.push_back({{"label", label}, {"map", value}});
    doc["rows"] = std::move(table);
    doc["fusion"] = to_json(rc.fusion);
    doc["eval"] = to_json(rc.eval);
    doc["ground_truth"] = {{"path", rc.ground_truth->generic_string()},
                           {"sha256", sha256_hex(read_file(*rc.ground_truth))}};
    doc["inputs"] = describe_inputs(rc, loaded);
    if (!flags.no_timestamp) doc["timestamp"] = utc_timestamp();
    write_file(*flags.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();

  CLI::App app{"Detection ensemble post-processing: fuse, map, transform and evaluate.", kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  FusionFlags fuse_flags;
  std::vector<std::string> fuse_files;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "Fuse prediction files into one set");
  fuse_flags.attach(*fuse_cmd);
  fuse_cmd->add_option("files", fuse_files, "Extra prediction files (label = file stem)");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("predictions", eval_args.predictions, "COCO results JSON")->required();
  eval_cmd->add_option("ground_truth", eval_args.ground_truth, "COCO annotation JSON")->required();
  eval_cmd->add_option("--config", eval_args.config, "Run configuration (JSON)");
  eval_cmd->add_option("--out", eval_args.out, "Write the JSON report here");
  eval_cmd->add_option("--label", eval_args.label, "Method label for the table");

  TransformArgs tr_args;
  CLI::App* tr_cmd = app.add_subcommand("transform", "Resize and HSV-adjust a directory of PNGs");
  tr_cmd->add_option("input_dir", tr_args.input_dir, "Directory of source PNG images")->required();
  tr_cmd->add_option("output_dir", tr_args.output_dir, "Destination directory")->required();
  tr_cmd->add_option("--config", tr_args.config, "Run configuration (JSON)");
  tr_cmd->add_option("--transform", tr_args.transform_label, "Transform label from the config");
  tr_cmd->add_option("--scale-x", tr_args.scale_x, "Target width / source width");
  tr_cmd->add_option("--scale-y", tr_args.scale_y, "Target height / source height");
  tr_cmd->add_option("--source-size", tr_args.source_size, "Source WIDTH HEIGHT (exact resize)")
      ->expected(2);
  tr_cmd->add_option("--target-size", tr_args.target_size, "Target WIDTH HEIGHT (exact resize)")
      ->expected(2);
  tr_cmd->add_option("--hue-shift", tr_args.hue_shift, "Hue rotation in degrees");
  tr_cmd->add_option("--saturation-gain", tr_args.saturation_gain, "Saturation multiplier");
  tr_cmd->add_option("--value-gain", tr_args.value_gain, "Value (brightness) multiplier");

  FusionFlags ablate_flags;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Score each input and their fusion");
  ablate_flags.attach(*ablate_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*fuse_cmd) return cmd_fuse(fuse_flags, fuse_files, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*tr_cmd) return cmd_transform(tr_args, out, err);
    if (*ablate_cmd) return cmd_ablate(ablate_flags, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace fusebox
