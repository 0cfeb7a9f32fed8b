#include "fusebox/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "fusebox/error.hpp"
#include "fusebox/geometry.hpp"

namespace fusebox {

std::vector<double> EvalConfig::coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) {
    t.push_back((50.0 + 5.0 * i) / 100.0);
  }
  return t;
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) {
    throw ValidationError("eval: at least one IoU threshold is required");
  }
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("eval: IoU thresholds must lie in (0,1]");
    }
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw ValidationError("eval: IoU thresholds must be strictly increasing");
    }
  }
  if (recall_points < 2) {
    throw ValidationError("eval: recall_points must be >= 2");
  }
  if (max_detections_per_image < 1) {
    throw ValidationError("eval: max_detections_per_image must be >= 1");
  }
}

std::vector<MatchResult> match_detections(std::span<const Detection> preds,
                                          std::span<const BBox> gts, double iou_threshold) {
  for (std::size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].score > preds[i - 1].score) {
      throw ValidationError("match_detections: predictions must be sorted by descending score");
    }
  }
  std::vector<bool> taken(gts.size(), false);
  std::vector<MatchResult> out;
  out.reserve(preds.size());
  for (const Detection& d : preds) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(d.box, gts[g]);
      if (v >= iou_threshold && v > best_iou) {
        best = g;
        best_iou = v;
      }
    }
    if (best) taken[*best] = true;
    out.push_back({d, best.has_value(), best});
  }
  return out;
}

std::vector<PrPoint> precision_recall(std::span<const ScoredMatch> matches, std::size_t total_gt) {
  if (total_gt == 0) {
    return {};
  }
  std::vector<ScoredMatch> sorted(matches.begin(), matches.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  std::vector<PrPoint> curve;
  curve.reserve(sorted.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const ScoredMatch& m : sorted) {
    (m.matched ? tp : fp) += 1;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(total_gt),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve, int recall_points) {
  if (curve.empty() || recall_points < 2) {
    return 0.0;
  }
  // Precision envelope: best precision at this recall or any later point.
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }
  const int steps = recall_points - 1;
  double sum = 0.0;
  std::size_t cursor = 0;
  for (int k = 0; k <= steps; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(steps);
    while (cursor < curve.size() && curve[cursor].recall < r) ++cursor;
    if (cursor == curve.size()) break;
    sum += envelope[cursor];
  }
  return sum / static_cast<double>(recall_points);
}

std::optional<double> EvalReport::ap(int category, double threshold) const {
  const auto it = per_class_ap.find(category);
  if (it == per_class_ap.end()) return std::nullopt;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] == threshold) return it->second[i];
  }
  return std::nullopt;
}

EvalReport evaluate(const PredictionSet& preds, const GroundTruth& gt, const EvalConfig& config) {
  config.validate();
  const std::set<int> gt_categories = gt.category_ids();
  for (const int c : preds.categories()) {
    if (!gt_categories.contains(c)) {
      throw ValidationError("evaluate: prediction category " + std::to_string(c) +
                            " is not declared in the ground truth");
    }
  }

  const auto dets = preds.detections();

  // Per-image cap on detections, highest scores first (input order on ties).
  std::map<ImageId, std::vector<std::size_t>> per_image;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!gt.images.contains(dets[i].image_id)) {
      throw ValidationError("evaluate: prediction " + std::to_string(i) + " references image " +
                            dets[i].image_id.key() + " absent from the ground truth");
    }
    per_image[dets[i].image_id].push_back(i);
  }
  // Kept detections grouped by (image, category), sorted by score.
  std::map<GroupKey, std::vector<std::size_t>> kept;
  const auto cap = static_cast<std::size_t>(config.max_detections_per_image);
  for (auto& [image, idx] : per_image) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    if (idx.size() > cap) idx.resize(cap);
    for (const std::size_t i : idx) kept[{image, dets[i].category_id}].push_back(i);
  }

  std::map<GroupKey, std::vector<BBox>> gt_boxes;
  EvalReport report;
  report.thresholds = config.iou_thresholds;
  for (const int c : gt_categories) report.gt_per_class[c] = 0;
  for (const Annotation& a : gt.annotations) {
    gt_boxes[{a.image_id, a.category_id}].push_back(a.box);
    ++report.gt_per_class[a.category_id];
  }

  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (const int c : gt_categories) {
    const std::size_t total_gt = report.gt_per_class[c];
    auto& counts = report.counts[c];
    std::vector<double> aps;
    for (const double t : config.iou_thresholds) {
      // (input index, match) pooled over images, then restored to input order.
      std::vector<std::pair<std::size_t, ScoredMatch>> pooled;
      for (const auto& [image, _] : gt.images) {
        const GroupKey key{image, c};
        const auto pit = kept.find(key);
        if (pit == kept.end()) continue;
        std::vector<Detection> group;
        group.reserve(pit->second.size());
        for (const std::size_t i : pit->second) group.push_back(dets[i]);
        const auto git = gt_boxes.find(key);
        const std::span<const BBox> boxes =
            git == gt_boxes.end() ? std::span<const BBox>{} : std::span<const BBox>(git->second);
        const auto matches = match_detections(group, boxes, t);
        for (std::size_t k = 0; k < matches.size(); ++k) {
          pooled.push_back({pit->second[k], {matches[k].detection.score, matches[k].matched}});
        }
      }
      std::sort(pooled.begin(), pooled.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::vector<ScoredMatch> flat;
      flat.reserve(pooled.size());
      MatchCounts mc;
      for (const auto& [_, m] : pooled) {
        flat.push_back(m);
        (m.matched ? mc.tp : mc.fp) += 1;
      }
      mc.fn = total_gt - mc.tp;
      counts.push_back(mc);
      if (total_gt > 0) {
        aps.push_back(average_precision(precision_recall(flat, total_gt), config.recall_points));
      }
    }
    if (total_gt > 0) {
      for (const double ap : aps) ap_sum += ap;
      ap_count += aps.size();
      report.per_class_ap[c] = std::move(aps);
    }
  }
  report.map_overall = ap_count > 0 ? ap_sum / static_cast<double>(ap_count) : 0.0;
  return report;
}

std::string threshold_key(double threshold) {
  std::string s = fmt::format("{}", threshold);
  const auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += ".00";
  } else if (s.size() - dot < 3) {
    s.append(3 - (s.size() - dot), '0');
  }
  return s;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json out;
  out["map"] = report.map_overall;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [c, aps] : report.per_class_ap) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < aps.size(); ++i) row[threshold_key(report.thresholds[i])] = aps[i];
    per_class[std::to_string(c)] = std::move(row);
  }
  out["per_class"] = std::move(per_class);
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [c, rows] : report.counts) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    row["gt"] = report.gt_per_class.at(c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      row[threshold_key(report.thresholds[i])] = {
          {"tp", rows[i].tp}, {"fp", rows[i].fp}, {"fn", rows[i].fn}};
    }
    counts[std::to_string(c)] = std::move(row);
  }
  out["counts"] = std::move(counts);
  return out;
}

std::string format_table(std::span<const std::pair<std::string, double>> rows) {
  std::size_t width = std::string_view("method").size();
  for (const auto& [label, _] : rows) width = std::max(width, label.size());
  std::ostringstream out;
  out << fmt::format("{:<{}}  {}\n", "method", width, "result");
  out << std::string(width + 8, '-') << "\n";
  for (const auto& [label, value] : rows) {
    out << fmt::format("{:<{}}  {:.3f}\n", label, width, value);
  }
  return out.str();
}

}  // namespace fusebox
