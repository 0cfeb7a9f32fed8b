#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace fusebox::testing {

double oracle_area(const BBox& b) { return (b.x_max - b.x_min) * (b.y_max - b.y_min); }

namespace {

double overlap_len(double a0, double a1, double b0, double b1) {
  const double len = std::min(a1, b1) - std::max(a0, b0);
  return len > 0.0 ? len : 0.0;
}

}  // namespace

double oracle_iou(const BBox& a, const BBox& b) {
  const double inter = overlap_len(a.x_min, a.x_max, b.x_min, b.x_max) *
                       overlap_len(a.y_min, a.y_max, b.y_min, b.y_max);
  const double uni = oracle_area(a) + oracle_area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double oracle_giou(const BBox& a, const BBox& b) {
  const double inter = overlap_len(a.x_min, a.x_max, b.x_min, b.x_max) *
                       overlap_len(a.y_min, a.y_max, b.y_min, b.y_max);
  const double uni = oracle_area(a) + oracle_area(b) - inter;
  const double hull = (std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min)) *
                      (std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min));
  const double ratio = uni > 0.0 ? inter / uni : 0.0;
  return ratio - (hull - uni) / hull;
}

MonteCarloIou monte_carlo_iou(const BBox& a, const BBox& b, std::size_t samples,
                              std::mt19937_64& rng) {
  const double x0 = std::min(a.x_min, b.x_min);
  const double x1 = std::max(a.x_max, b.x_max);
  const double y0 = std::min(a.y_min, b.y_min);
  const double y1 = std::max(a.y_max, b.y_max);
  std::uniform_real_distribution<double> ux(x0, x1);
  std::uniform_real_distribution<double> uy(y0, y1);
  const auto inside = [](const BBox& r, double x, double y) {
    return x >= r.x_min && x < r.x_max && y >= r.y_min && y < r.y_max;
  };
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const bool ia = inside(a, x, y);
    const bool ib = inside(b, x, y);
    both += (ia && ib) ? 1 : 0;
    either += (ia || ib) ? 1 : 0;
  }
  MonteCarloIou r;
  r.in_either = either;
  if (either == 0) return r;
  const double p = static_cast<double>(both) / static_cast<double>(either);
  r.estimate = p;
  r.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(either));
  return r;
}

OraclePartition oracle_clusters(const std::vector<Detection>& group, OracleMetric metric,
                                double threshold) {
  const std::size_t n = group.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const BBox& a = group[i].box;
      const BBox& b = group[j].box;
      if (oracle_area(a) <= 0.0 && oracle_area(b) <= 0.0) continue;
      const double m = metric == OracleMetric::IoU ? oracle_iou(a, b) : oracle_giou(a, b);
      if (m > threshold) reach[i][j] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;

  OraclePartition out;
  std::vector<bool> assigned(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> comp;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) {
        comp.push_back(j);
        assigned[j] = true;
      }
    }
    std::vector<std::size_t> order = comp;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const Detection& a = group[x];
      const Detection& b = group[y];
      const auto key = [](const Detection& d, std::size_t idx) {
        return std::make_tuple(-d.score, -oracle_area(d.box), d.box.x_min, d.box.y_min,
                               d.box.x_max, d.box.y_max, idx);
      };
      return key(a, x) < key(b, y);
    });
    out.representatives.push_back(order.front());
    out.components.push_back(std::move(comp));
  }
  return out;
}

OracleEval oracle_evaluate(const std::vector<Detection>& preds, const std::vector<OracleGt>& gts,
                           const std::set<int>& categories, const std::vector<double>& thresholds,
                           int recall_points, std::size_t max_per_image) {
  // Per image keep the top max_per_image predictions (stable on score ties).
  std::vector<bool> keep(preds.size(), false);
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < preds.size(); ++i) by_image[preds[i].image_id.key()].push_back(i);
  for (auto& [_, idx] : by_image) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    for (std::size_t k = 0; k < idx.size() && k < max_per_image; ++k) keep[idx[k]] = true;
  }

  OracleEval out;
  double total = 0.0;
  std::size_t terms = 0;
  for (const int c : categories) {
    std::size_t n_gt = 0;
    for (const OracleGt& g : gts) n_gt += g.category == c ? 1 : 0;
    if (n_gt == 0) continue;

    std::vector<double> aps;
    for (const double t : thresholds) {
      // flag per prediction index: 1 = TP, 0 = FP, -1 = not considered
      std::vector<int> flag(preds.size(), -1);
      std::map<std::string, std::vector<std::size_t>> pred_img;
      for (std::size_t i = 0; i < preds.size(); ++i)
        if (keep[i] && preds[i].category_id == c) pred_img[preds[i].image_id.key()].push_back(i);
      for (auto& [img, idx] : pred_img) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return preds[a].score > preds[b].score;
        });
        std::vector<std::size_t> gi;
        for (std::size_t g = 0; g < gts.size(); ++g)
          if (gts[g].category == c && gts[g].image.key() == img) gi.push_back(g);
        std::vector<bool> used(gi.size(), false);
        for (const std::size_t p : idx) {
          int best = -1;
          double best_v = -1.0;
          for (std::size_t k = 0; k < gi.size(); ++k) {
            if (used[k]) continue;
            const double v = oracle_iou(preds[p].box, gts[gi[k]].box);
            if (v >= t && v > best_v) {
              best_v = v;
              best = static_cast<int>(k);
            }
          }
          if (best >= 0) used[static_cast<std::size_t>(best)] = true;
          flag[p] = best >= 0 ? 1 : 0;
        }
      }
      std::vector<std::size_t> order;
      for (std::size_t i = 0; i < preds.size(); ++i)
        if (flag[i] >= 0) order.push_back(i);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].score > preds[b].score;
      });
      std::vector<double> rec, prec;
      int tp = 0, fp = 0;
      for (const std::size_t i : order) {
        if (flag[i] == 1) ++tp; else ++fp;
        rec.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
        prec.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      }
      double sum = 0.0;
      for (int k = 0; k < recall_points; ++k) {
        const double r = static_cast<double>(k) / static_cast<double>(recall_points - 1);
        double best = 0.0;
        for (std::size_t j = 0; j < rec.size(); ++j)
          if (rec[j] >= r) best = std::max(best, prec[j]);
        sum += best;
      }
      aps.push_back(sum / recall_points);
    }
    for (const double ap : aps) total += ap;
    terms += aps.size();
    out.per_class.emplace_back(c, std::move(aps));
  }
  out.map = terms > 0 ? total / static_cast<double>(terms) : 0.0;
  return out;
}

}  // namespace fusebox::testing
