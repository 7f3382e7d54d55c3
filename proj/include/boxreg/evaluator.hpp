// SPDX-License-Identifier: Apache-2.0
//
// COCO-style detection evaluation: AP at thresholds 0.50:0.05:0.95 with
// 101-point interpolation, AP75 and AR@100, with the box match metric
// switchable between IoU and MPDIoU. MPDIoU reuses the IoU threshold list;
// since MPDIoU <= IoU pointwise it is a strictly harsher criterion.

#ifndef BOXREG_EVALUATOR_HPP_
#define BOXREG_EVALUATOR_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxreg/geometry.hpp"
#include "boxreg/metrics.hpp"

namespace boxreg {

inline constexpr std::size_t kMaxDetectionsPerImage = 100;

struct GroundTruth {
  BBox box;
  std::string category;
};

struct ImageRecord {
  std::string image_id;
  ImageDims dims;
  std::vector<GroundTruth> gt;
};

struct Detection {
  std::string image_id;
  BBox box;
  std::string category;
  double score;
};

struct DetectionDataset {
  std::vector<ImageRecord> images;     // sorted by image_id
  std::vector<Detection> detections;   // sorted by image_id, then input order

  /// Sorted union of ground-truth and detection categories.
  std::vector<std::string> categories() const;
};

/// Validates and normalizes (canonicalizes boxes, orders images and
/// detections). Throws SchemaError with a JSON pointer, or
/// DegenerateGroundTruth naming the image.
DetectionDataset parse_dataset(const nlohmann::json& doc);
/// Throws IoFailure if the file cannot be read, SchemaError on bad JSON.
DetectionDataset load_dataset(const std::filesystem::path& path);

/// A detection ranked for the precision/recall curve.
struct RankedMatch {
  double score;
  bool true_positive;
};

struct CategoryMatches {
  /// Every detection of the category, in dataset order.
  std::vector<RankedMatch> detections;
  std::size_t n_gt = 0;
  std::size_t true_positives = 0;
  std::size_t missed_gt = 0;
};

/// Greedy per-image matching: detections in descending score order (ties
/// by input order) take the unmatched ground truth with the highest metric
/// value >= threshold (ties to the earlier ground truth). Only the top
/// kMaxDetectionsPerImage detections of each image (across categories)
/// take part. kind must be IoU or MPDIoU. Threshold must lie in (0, 1] for
/// IoU and be finite and < 1 for MPDIoU. Throws UnknownCategory or
/// InvalidArgument.
CategoryMatches match_detections(const DetectionDataset& ds, const std::string& category,
                                 double threshold, MetricKind kind);

/// 101-point interpolated AP over matches ranked by descending score (ties
/// keep input order). nullopt when n_gt == 0 and there are no detections;
/// 0 when n_gt == 0 and detections exist.
std::optional<double> average_precision(std::span<const RankedMatch> matches, std::size_t n_gt);

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

struct CategorySummary {
  std::size_t n_gt = 0;
  std::vector<std::optional<double>> ap;      // per threshold
  std::vector<std::optional<double>> recall;  // per threshold; nullopt when n_gt == 0
  std::vector<std::size_t> true_positives;    // per threshold
};

struct EvalSummary {
  MetricKind kind = MetricKind::kIoU;
  std::vector<double> thresholds;
  std::map<std::string, CategorySummary> per_category;
  /// Mean AP over categories with a defined AP, per threshold.
  std::vector<std::optional<double>> mean_ap;
  std::optional<double> map;    // mean over thresholds
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ar100;  // mean recall over thresholds and categories with gt
};

EvalSummary summarize(const DetectionDataset& ds, MetricKind kind);

nlohmann::json to_json(const EvalSummary& s);
/// One row per (category, threshold), then category "all" rows holding the
/// per-threshold means, then a "0.50:0.95" row with mAP and AR@100.
std::string to_csv(const EvalSummary& s);

}  // namespace boxreg

#endif  // BOXREG_EVALUATOR_HPP_
