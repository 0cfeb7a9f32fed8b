#include "fusebox/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>
#include <tuple>

#include "fusebox/error.hpp"

namespace fusebox {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Strict preference under MaxConfidence: score, then area, then smaller corners.
// Members that tie on all of these are identical, so the earliest one wins.
bool preferred(const Detection& c, const Detection& b) {
  if (c.score != b.score) return c.score > b.score;
  const double ac = area(c.box);
  const double ab = area(b.box);
  if (ac != ab) return ac > ab;
  return std::tie(c.box.x_min, c.box.y_min, c.box.x_max, c.box.y_max) <
         std::tie(b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max);
}

std::size_t best_member(std::span<const Detection> members) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (preferred(members[i], members[best])) best = i;
  }
  return best;
}

}  // namespace

std::string_view to_string(OverlapMetric metric) {
  return metric == OverlapMetric::IoU ? "iou" : "giou";
}

std::string_view to_string(Selection selection) {
  return selection == Selection::MaxConfidence ? "max" : "wavg";
}

OverlapMetric parse_metric(std::string_view text) {
  const std::string s = lowercase(text);
  if (s == "iou") return OverlapMetric::IoU;
  if (s == "giou") return OverlapMetric::GIoU;
  throw ValidationError("unknown metric '" + std::string(text) + "' (expected iou or giou)");
}

Selection parse_selection(std::string_view text) {
  const std::string s = lowercase(text);
  if (s == "max" || s == "maxconfidence") return Selection::MaxConfidence;
  if (s == "wavg" || s == "weightedaverage") return Selection::WeightedAverage;
  throw ValidationError("unknown selection '" + std::string(text) + "' (expected max or wavg)");
}

void FusionConfig::validate() const {
  const double t = overlap_threshold;
  if (metric == OverlapMetric::IoU && !(t >= 0.0 && t <= 1.0)) {
    throw ValidationError("overlap_threshold must be in [0,1] for iou, got " + std::to_string(t));
  }
  if (metric == OverlapMetric::GIoU && !(t > -1.0 && t <= 1.0)) {
    throw ValidationError("overlap_threshold must be in (-1,1] for giou, got " + std::to_string(t));
  }
  if (!(min_score >= 0.0 && min_score <= 1.0)) {
    throw ValidationError("min_score must be in [0,1], got " + std::to_string(min_score));
  }
}

bool overlaps(const BBox& a, const BBox& b, const FusionConfig& config) {
  if (area(a) <= 0.0 && area(b) <= 0.0) {
    return false;
  }
  const double m = config.metric == OverlapMetric::IoU ? iou(a, b) : giou(a, b);
  return m > config.overlap_threshold;
}

PredictionSet prefilter(const PredictionSet& set, double min_score) {
  std::vector<Detection> kept;
  kept.reserve(set.size());
  std::copy_if(set.detections().begin(), set.detections().end(), std::back_inserter(kept),
               [min_score](const Detection& d) { return d.score >= min_score; });
  return PredictionSet(set.source_label(), set.categories(), std::move(kept));
}

Detection select_representative(std::span<const Detection> members, const FusionConfig& config) {
  if (members.empty()) {
    throw ValidationError("select_representative: empty cluster");
  }
  const Detection& top = members[best_member(members)];
  if (config.selection == Selection::MaxConfidence || members.size() == 1) {
    return top;
  }

  // Fixed summation order keeps the result independent of member order.
  std::vector<Detection> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end(), preferred);

  double weight = 0.0;
  for (const Detection& d : sorted) weight += d.score;
  const bool uniform = weight <= 0.0;
  if (uniform) weight = static_cast<double>(sorted.size());

  BBox mean{};
  for (const Detection& d : sorted) {
    const double w = uniform ? 1.0 : d.score;
    mean.x_min += w * d.box.x_min;
    mean.y_min += w * d.box.y_min;
    mean.x_max += w * d.box.x_max;
    mean.y_max += w * d.box.y_max;
  }
  mean.x_min /= weight;
  mean.y_min /= weight;
  mean.x_max /= weight;
  mean.y_max /= weight;
  // Rounding may cross corners on near-degenerate members.
  mean.x_max = std::max(mean.x_max, mean.x_min);
  mean.y_max = std::max(mean.y_max, mean.y_min);

  Detection out = top;
  out.box = mean;
  return out;
}

std::vector<Cluster> build_clusters(std::span<const Detection> group, const FusionConfig& config) {
  const std::size_t n = group.size();
  DisjointSet components(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (overlaps(group[i].box, group[j].box, config)) {
        components.unite(i, j);
      }
    }
  }

  // Members per root, in input order; roots listed by first appearance.
  std::vector<std::size_t> slot(n, n);
  std::vector<std::vector<std::size_t>> member_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = components.find(i);
    if (slot[root] == n) {
      slot[root] = member_idx.size();
      member_idx.emplace_back();
    }
    member_idx[slot[root]].push_back(i);
  }

  struct Ranked {
    Cluster cluster;
    std::size_t rep_index;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(member_idx.size());
  for (const auto& idx : member_idx) {
    Ranked r;
    r.cluster.members.reserve(idx.size());
    for (const std::size_t i : idx) r.cluster.members.push_back(group[i]);
    r.rep_index = idx[best_member(r.cluster.members)];
    r.cluster.representative = select_representative(r.cluster.members, config);
    ranked.push_back(std::move(r));
  }

  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    const Detection& ra = a.cluster.representative;
    const Detection& rb = b.cluster.representative;
    if (ra.score != rb.score) return ra.score > rb.score;
    const double aa = area(ra.box);
    const double ab = area(rb.box);
    if (aa != ab) return aa < ab;
    return a.rep_index < b.rep_index;
  });

  std::vector<Cluster> clusters;
  clusters.reserve(ranked.size());
  for (auto& r : ranked) clusters.push_back(std::move(r.cluster));
  return clusters;
}

PredictionSet fuse(std::span<const PredictionSet> sets, const FusionConfig& config) {
  config.validate();
  const PredictionSet pooled = prefilter(merge_sets(sets), config.min_score);

  std::vector<Detection> fused;
  for (const auto& [key, _] : pooled.groups()) {
    const std::vector<Detection> group = pooled.group(key);
    for (const Cluster& c : build_clusters(group, config)) {
      fused.push_back(c.representative);
    }
  }
  return PredictionSet("fusion(" + pooled.source_label() + ")", pooled.categories(),
                       std::move(fused));
}

}  // namespace fusebox
