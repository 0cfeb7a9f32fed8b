#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fusebox/geometry.hpp"

namespace fusebox {

// Opaque image identifier. Integers and strings are both accepted; a string
// holding a canonical decimal integer ("17") is the same id as the integer 17.
// Numeric ids order numerically and before non-numeric ids.
class ImageId {
 public:
  ImageId() = default;
  static ImageId from_int(std::int64_t value);
  static ImageId from_string(std::string value);

  const std::string& key() const noexcept { return key_; }
  bool numeric() const noexcept { return numeric_; }
  // True when the id was read from (or should be written as) a JSON integer.
  bool json_integer() const noexcept { return json_integer_; }
  std::int64_t as_int() const noexcept { return value_; }

  friend bool operator==(const ImageId& a, const ImageId& b) noexcept { return a.key_ == b.key_; }
  friend std::strong_ordering operator<=>(const ImageId& a, const ImageId& b) noexcept;

 private:
  std::string key_;
  std::int64_t value_ = 0;
  bool numeric_ = false;
  bool json_integer_ = false;
};

struct Detection {
  ImageId image_id;
  int category_id = 0;
  BBox box;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using GroupKey = std::pair<ImageId, int>;

// All detections of one model run. Immutable after construction; the
// (image, category) grouping index always describes the flat list.
class PredictionSet {
 public:
  PredictionSet() = default;
  // Throws ValidationError if a detection is invalid or its category is not declared.
  PredictionSet(std::string source_label, std::set<int> categories, std::vector<Detection> detections);

  const std::string& source_label() const noexcept { return source_label_; }
  const std::set<int>& categories() const noexcept { return categories_; }
  std::span<const Detection> detections() const noexcept { return detections_; }
  std::size_t size() const noexcept { return detections_.size(); }
  bool empty() const noexcept { return detections_.empty(); }

  // Indices into detections(), in input order, per (image, category).
  const std::map<GroupKey, std::vector<std::size_t>>& groups() const noexcept { return groups_; }
  std::vector<Detection> group(const GroupKey& key) const;

 private:
  std::string source_label_;
  std::set<int> categories_;
  std::vector<Detection> detections_;
  std::map<GroupKey, std::vector<std::size_t>> groups_;
};

struct ImageInfo {
  ImageId id;
  double width = 0.0;
  double height = 0.0;
  std::string file_name;
};

struct Category {
  int id = 0;
  std::string name;
};

struct Annotation {
  std::int64_t id = 0;
  ImageId image_id;
  int category_id = 0;
  BBox box;
  bool iscrowd = false;
};

struct GroundTruth {
  std::map<ImageId, ImageInfo> images;
  std::map<int, Category> categories;
  std::vector<Annotation> annotations;
  // Number of annotation boxes that had to be clamped to their image.
  std::size_t clamped = 0;

  std::set<int> category_ids() const;
};

// Strict parse of a COCO results array. Every record must use a category in
// `categories`. Errors name the record index and field.
PredictionSet parse_predictions(std::string_view json, const std::set<int>& categories,
                                std::string source_label = {});

// Category ids referenced by a COCO results array, without further validation.
std::set<int> scan_categories(std::string_view json);

GroundTruth parse_ground_truth(std::string_view json);

// COCO results array; parse_predictions(emit_predictions(s)) reproduces s.
std::string emit_predictions(const PredictionSet& set);

// Concatenates detections; all sets must declare the same categories.
PredictionSet merge_sets(std::span<const PredictionSet> sets);

// Total order used for canonical sorting: image, category, descending score, box.
bool canonical_less(const Detection& a, const Detection& b);

// Multiset equality of the detections of two sets.
bool same_detections(const PredictionSet& a, const PredictionSet& b);

// Width w with lo + w == hi, for lossless xywh emission. Such a width exists for
// every box that came from an [x, y, w, h] record; otherwise hi - lo is returned.
double roundtrip_extent(double lo, double hi);

}  // namespace fusebox
