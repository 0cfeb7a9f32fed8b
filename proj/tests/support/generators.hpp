#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fusebox/detections.hpp"

namespace fusebox::testing {

// Box with corners in [0, extent); integer corners when `quantized`, which
// produces exact ties and nested/touching boxes.
BBox random_box(std::mt19937_64& rng, double extent, bool quantized);

// Detections of one (image, category) group packed into a small canvas so
// overlaps are common. Scores drawn from a coarse grid to create ties.
std::vector<Detection> random_group(std::mt19937_64& rng, std::size_t max_boxes,
                                    const ImageId& image, int category);

// Random prediction set over a few images and categories.
PredictionSet random_prediction_set(std::mt19937_64& rng, const std::set<int>& categories,
                                    std::size_t images, std::size_t max_per_group,
                                    const std::string& label);

struct AblationFixture {
  std::filesystem::path dir;
  std::filesystem::path config;
  std::filesystem::path ground_truth;
  std::vector<std::filesystem::path> models;
};

// Synthetic 20-image, 8-class dataset with three "model" prediction files. Each
// model finds a private quarter of the ground truth exactly, and all three find
// a shared quarter (one exact copy, two shifted by a pixel).
AblationFixture write_ablation_fixture(const std::filesystem::path& dir);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fusebox::testing
