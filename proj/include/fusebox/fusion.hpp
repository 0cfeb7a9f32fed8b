#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fusebox/detections.hpp"

namespace fusebox {

enum class OverlapMetric { IoU, GIoU };

enum class Selection {
  MaxConfidence,
  // Score-weighted mean of member corners. Opt-in extension; not idempotent.
  WeightedAverage,
};

std::string_view to_string(OverlapMetric metric);
std::string_view to_string(Selection selection);
// Accepts "iou"/"giou" and "max"/"wavg" (case-insensitive); throws ValidationError otherwise.
OverlapMetric parse_metric(std::string_view text);
Selection parse_selection(std::string_view text);

struct FusionConfig {
  OverlapMetric metric = OverlapMetric::GIoU;
  double overlap_threshold = 0.5;
  double min_score = 0.05;
  Selection selection = Selection::MaxConfidence;

  // Threshold in [0,1] for IoU, (-1,1] for GIoU; min_score in [0,1].
  void validate() const;
};

struct Cluster {
  std::vector<Detection> members;  // input order
  Detection representative;
};

// True when the pair is joined by an edge: metric(a, b) > threshold.
// Two zero-area boxes are never joined under either metric.
bool overlaps(const BBox& a, const BBox& b, const FusionConfig& config);

// Keeps detections with score >= min_score.
PredictionSet prefilter(const PredictionSet& set, double min_score);

// Connected components of the above-threshold overlap graph. Clusters are ordered
// by descending representative score, then ascending representative area, then
// the representative's input position.
std::vector<Cluster> build_clusters(std::span<const Detection> group, const FusionConfig& config);

// MaxConfidence: highest score, ties to the larger box, then the earlier member.
Detection select_representative(std::span<const Detection> members, const FusionConfig& config);

// merge -> prefilter -> per (image, category) clustering -> one representative per
// cluster. Output is ordered by image, category, descending score.
PredictionSet fuse(std::span<const PredictionSet> sets, const FusionConfig& config);

}  // namespace fusebox
