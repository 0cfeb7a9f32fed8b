#include "fusebox/detections.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fusebox/error.hpp"

namespace fusebox {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ImageId

ImageId ImageId::from_int(std::int64_t value) {
  ImageId id;
  id.key_ = std::to_string(value);
  id.value_ = value;
  id.numeric_ = true;
  id.json_integer_ = true;
  return id;
}

ImageId ImageId::from_string(std::string value) {
  ImageId id;
  std::int64_t parsed = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, parsed);
  if (ec == std::errc{} && ptr == last && std::to_string(parsed) == value) {
    id.value_ = parsed;
    id.numeric_ = true;
  }
  id.key_ = std::move(value);
  return id;
}

std::strong_ordering operator<=>(const ImageId& a, const ImageId& b) noexcept {
  if (a.numeric_ != b.numeric_) {
    return a.numeric_ ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (a.numeric_) {
    return a.value_ <=> b.value_;
  }
  return a.key_ <=> b.key_;
}

// ---------------------------------------------------------------------------
// PredictionSet

PredictionSet::PredictionSet(std::string source_label, std::set<int> categories,
                             std::vector<Detection> detections)
    : source_label_(std::move(source_label)),
      categories_(std::move(categories)),
      detections_(std::move(detections)) {
  for (std::size_t i = 0; i < detections_.size(); ++i) {
    const Detection& d = detections_[i];
    if (!d.box.valid()) {
      throw ValidationError("detection " + std::to_string(i) + ": invalid box");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError("detection " + std::to_string(i) + ": score outside [0,1]");
    }
    if (!categories_.contains(d.category_id)) {
      throw ValidationError("detection " + std::to_string(i) + ": unknown category_id " +
                            std::to_string(d.category_id));
    }
    groups_[{d.image_id, d.category_id}].push_back(i);
  }
}

std::vector<Detection> PredictionSet::group(const GroupKey& key) const {
  std::vector<Detection> out;
  if (const auto it = groups_.find(key); it != groups_.end()) {
    out.reserve(it->second.size());
    for (const std::size_t i : it->second) {
      out.push_back(detections_[i]);
    }
  }
  return out;
}

std::set<int> GroundTruth::category_ids() const {
  std::set<int> ids;
  for (const auto& [id, _] : categories) {
    ids.insert(id);
  }
  return ids;
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

[[noreturn]] void record_error(std::string_view where, std::size_t index, std::string_view field,
                               std::string_view what) {
  std::ostringstream msg;
  msg << where << " " << index;
  if (!field.empty()) {
    msg << ": field \"" << field << "\"";
  }
  msg << ": " << what;
  throw ParseError(msg.str());
}

const json& require(const json& record, std::string_view where, std::size_t index,
                    const char* field) {
  const auto it = record.find(field);
  if (it == record.end()) {
    record_error(where, index, field, "missing");
  }
  return *it;
}

ImageId read_image_id(const json& v, std::string_view where, std::size_t index, const char* field) {
  if (v.is_number_integer()) {
    return ImageId::from_int(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    return ImageId::from_string(v.get<std::string>());
  }
  record_error(where, index, field, "expected integer or string");
}

int read_category(const json& v, std::string_view where, std::size_t index) {
  if (!v.is_number_integer()) {
    record_error(where, index, "category_id", "expected integer");
  }
  const auto id = v.get<std::int64_t>();
  if (id < std::numeric_limits<int>::min() || id > std::numeric_limits<int>::max()) {
    record_error(where, index, "category_id", "out of range");
  }
  return static_cast<int>(id);
}

double read_number(const json& v, std::string_view where, std::size_t index, const char* field) {
  if (!v.is_number()) {
    record_error(where, index, field, "expected number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    record_error(where, index, field, "not finite");
  }
  return x;
}

struct Xywh {
  double x, y, w, h;
};

Xywh read_bbox(const json& v, std::string_view where, std::size_t index) {
  if (!v.is_array() || v.size() != 4) {
    record_error(where, index, "bbox", "expected [x, y, width, height]");
  }
  Xywh r{read_number(v[0], where, index, "bbox"), read_number(v[1], where, index, "bbox"),
         read_number(v[2], where, index, "bbox"), read_number(v[3], where, index, "bbox")};
  if (r.w < 0.0 || r.h < 0.0) {
    record_error(where, index, "bbox", "negative width/height");
  }
  if (!std::isfinite(r.x + r.w) || !std::isfinite(r.y + r.h)) {
    record_error(where, index, "bbox", "not finite");
  }
  return r;
}

json image_id_json(const ImageId& id) {
  if (id.json_integer()) {
    return id.as_int();
  }
  return id.key();
}

}  // namespace

// ---------------------------------------------------------------------------
// Predictions

PredictionSet parse_predictions(std::string_view text, const std::set<int>& categories,
                                std::string source_label) {
  const json doc = parse_document(text);
  if (!doc.is_array()) {
    throw ParseError("predictions: expected a JSON array of records");
  }
  constexpr std::string_view where = "record";
  std::vector<Detection> detections;
  detections.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    if (!rec.is_object()) {
      record_error(where, i, {}, "expected an object");
    }
    Detection d;
    d.image_id = read_image_id(require(rec, where, i, "image_id"), where, i, "image_id");
    d.category_id = read_category(require(rec, where, i, "category_id"), where, i);
    const Xywh b = read_bbox(require(rec, where, i, "bbox"), where, i);
    d.box = BBox{b.x, b.y, b.x + b.w, b.y + b.h};
    d.score = read_number(require(rec, where, i, "score"), where, i, "score");
    if (d.score < 0.0 || d.score > 1.0) {
      record_error(where, i, "score", "outside [0,1]");
    }
    if (!categories.contains(d.category_id)) {
      record_error(where, i, "category_id", "unknown category " + std::to_string(d.category_id));
    }
    detections.push_back(std::move(d));
  }
  return PredictionSet(std::move(source_label), categories, std::move(detections));
}

std::set<int> scan_categories(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_array()) {
    throw ParseError("predictions: expected a JSON array of records");
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (!doc[i].is_object()) {
      record_error("record", i, {}, "expected an object");
    }
    ids.insert(read_category(require(doc[i], "record", i, "category_id"), "record", i));
  }
  return ids;
}

double roundtrip_extent(double lo, double hi) {
  const double width = hi - lo;
  if (lo + width == hi) {
    return width;
  }
  // Nudge by a few ulps; one of the neighbours reproduces hi exactly.
  double down = width;
  double up = width;
  for (int step = 0; step < 8; ++step) {
    down = std::nextafter(down, -1.0);
    up = std::nextafter(up, std::numeric_limits<double>::infinity());
    if (down >= 0.0 && lo + down == hi) {
      return down;
    }
    if (lo + up == hi) {
      return up;
    }
  }
  return width;
}

std::string emit_predictions(const PredictionSet& set) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const Detection& d : set.detections()) {
    nlohmann::ordered_json rec;
    rec["image_id"] = image_id_json(d.image_id);
    rec["category_id"] = d.category_id;
    rec["bbox"] = {d.box.x_min, d.box.y_min, roundtrip_extent(d.box.x_min, d.box.x_max),
                   roundtrip_extent(d.box.y_min, d.box.y_max)};
    rec["score"] = d.score;
    out.push_back(std::move(rec));
  }
  return out.dump();
}

PredictionSet merge_sets(std::span<const PredictionSet> sets) {
  if (sets.empty()) {
    throw ValidationError("merge_sets: no prediction sets given");
  }
  const std::set<int>& categories = sets.front().categories();
  std::string label;
  std::size_t total = 0;
  for (const PredictionSet& s : sets) {
    if (s.categories() != categories) {
      throw ValidationError("merge_sets: category set of '" + s.source_label() +
                            "' differs from '" + sets.front().source_label() + "'");
    }
    if (!label.empty()) {
      label += "+";
    }
    label += s.source_label();
    total += s.size();
  }
  std::vector<Detection> all;
  all.reserve(total);
  for (const PredictionSet& s : sets) {
    all.insert(all.end(), s.detections().begin(), s.detections().end());
  }
  return PredictionSet(std::move(label), categories, std::move(all));
}

bool canonical_less(const Detection& a, const Detection& b) {
  if (const auto c = a.image_id <=> b.image_id; c != 0) {
    return c < 0;
  }
  return std::make_tuple(a.category_id, -a.score, a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max) <
         std::make_tuple(b.category_id, -b.score, b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max);
}

bool same_detections(const PredictionSet& a, const PredictionSet& b) {
  if (a.size() != b.size()) {
    return false;
  }
  std::vector<Detection> x(a.detections().begin(), a.detections().end());
  std::vector<Detection> y(b.detections().begin(), b.detections().end());
  std::sort(x.begin(), x.end(), canonical_less);
  std::sort(y.begin(), y.end(), canonical_less);
  return x == y;
}

// ---------------------------------------------------------------------------
// Ground truth

GroundTruth parse_ground_truth(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) {
    throw ParseError("ground truth: expected a JSON object");
  }
  for (const char* key : {"images", "annotations", "categories"}) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) {
      throw ParseError(std::string("ground truth: missing array \"") + key + "\"");
    }
  }

  GroundTruth gt;
  const json& images = doc["images"];
  for (std::size_t i = 0; i < images.size(); ++i) {
    const json& rec = images[i];
    constexpr std::string_view where = "images entry";
    if (!rec.is_object()) {
      record_error(where, i, {}, "expected an object");
    }
    ImageInfo info;
    info.id = read_image_id(require(rec, where, i, "id"), where, i, "id");
    info.width = read_number(require(rec, where, i, "width"), where, i, "width");
    info.height = read_number(require(rec, where, i, "height"), where, i, "height");
    if (info.width <= 0.0 || info.height <= 0.0) {
      record_error(where, i, "width", "image dimensions must be positive");
    }
    if (const auto it = rec.find("file_name"); it != rec.end() && it->is_string()) {
      info.file_name = it->get<std::string>();
    }
    const ImageId id = info.id;
    if (!gt.images.emplace(id, std::move(info)).second) {
      record_error(where, i, "id", "duplicate image id " + id.key());
    }
  }

  const json& categories = doc["categories"];
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const json& rec = categories[i];
    constexpr std::string_view where = "categories entry";
    if (!rec.is_object()) {
      record_error(where, i, {}, "expected an object");
    }
    Category c;
    const json& idv = require(rec, where, i, "id");
    if (!idv.is_number_integer()) {
      record_error(where, i, "id", "expected integer");
    }
    c.id = idv.get<int>();
    if (const auto it = rec.find("name"); it != rec.end() && it->is_string()) {
      c.name = it->get<std::string>();
    }
    if (!gt.categories.emplace(c.id, c).second) {
      record_error(where, i, "id", "duplicate category id " + std::to_string(c.id));
    }
  }

  const json& annotations = doc["annotations"];
  gt.annotations.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const json& rec = annotations[i];
    constexpr std::string_view where = "annotation";
    if (!rec.is_object()) {
      record_error(where, i, {}, "expected an object");
    }
    Annotation a;
    if (const auto it = rec.find("id"); it != rec.end() && it->is_number_integer()) {
      a.id = it->get<std::int64_t>();
    } else {
      a.id = static_cast<std::int64_t>(i) + 1;
    }
    a.image_id = read_image_id(require(rec, where, i, "image_id"), where, i, "image_id");
    a.category_id = read_category(require(rec, where, i, "category_id"), where, i);
    const auto img = gt.images.find(a.image_id);
    if (img == gt.images.end()) {
      record_error(where, i, "image_id", "unknown image " + a.image_id.key());
    }
    if (!gt.categories.contains(a.category_id)) {
      record_error(where, i, "category_id", "unknown category " + std::to_string(a.category_id));
    }
    const Xywh b = read_bbox(require(rec, where, i, "bbox"), where, i);
    const BBox raw{b.x, b.y, b.x + b.w, b.y + b.h};
    const double w = img->second.width;
    const double h = img->second.height;
    a.box = BBox{std::clamp(raw.x_min, 0.0, w), std::clamp(raw.y_min, 0.0, h),
                 std::clamp(raw.x_max, 0.0, w), std::clamp(raw.y_max, 0.0, h)};
    if (a.box != raw) {
      ++gt.clamped;
      spdlog::warn("annotation {}: box clamped to image {} bounds", i, a.image_id.key());
    }
    if (const auto it = rec.find("iscrowd"); it != rec.end() && it->is_number_integer()) {
      a.iscrowd = it->get<int>() != 0;
    }
    gt.annotations.push_back(std::move(a));
  }
  return gt;
}

}  // namespace fusebox
