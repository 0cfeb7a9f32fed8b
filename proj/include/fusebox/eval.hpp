#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fusebox/detections.hpp"

namespace fusebox {

// COCO-style protocol: mAP@[.50:.05:.95], 101-point interpolation, 100 detections per image.
struct EvalConfig {
  std::vector<double> iou_thresholds = coco_thresholds();
  int recall_points = 101;
  int max_detections_per_image = 100;

  // Thresholds strictly increasing within (0,1]; recall_points >= 2; max detections >= 1.
  void validate() const;

  static std::vector<double> coco_thresholds();
};

struct MatchResult {
  Detection detection;
  bool matched = false;
  std::optional<std::size_t> gt_index;
};

// Greedy one-to-one matching for one (image, category). `preds` must be sorted by
// descending score; each takes the unmatched ground truth with the highest
// IoU >= iou_threshold (lowest index on ties).
std::vector<MatchResult> match_detections(std::span<const Detection> preds,
                                          std::span<const BBox> gts, double iou_threshold);

struct ScoredMatch {
  double score = 0.0;
  bool matched = false;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Cumulative PR curve over matches pooled across images, sorted by descending
// score (stable). Empty when total_gt == 0.
std::vector<PrPoint> precision_recall(std::span<const ScoredMatch> matches, std::size_t total_gt);

// Mean interpolated precision over an evenly spaced recall grid of `recall_points`.
double average_precision(std::span<const PrPoint> curve, int recall_points);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalReport {
  std::vector<double> thresholds;
  // Per category, one AP per threshold. Categories without ground truth are absent.
  std::map<int, std::vector<double>> per_class_ap;
  // Every ground-truth category, one entry per threshold.
  std::map<int, std::vector<MatchCounts>> counts;
  std::map<int, std::size_t> gt_per_class;
  double map_overall = 0.0;

  std::optional<double> ap(int category, double threshold) const;
};

EvalReport evaluate(const PredictionSet& preds, const GroundTruth& gt, const EvalConfig& config);

// "0.50", "0.55", ... (at least two decimals, more when needed to be exact).
std::string threshold_key(double threshold);

nlohmann::ordered_json report_to_json(const EvalReport& report);

// Plain-text two-column table: method label and result to three decimals.
std::string format_table(std::span<const std::pair<std::string, double>> rows);

}  // namespace fusebox
