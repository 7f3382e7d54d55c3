// SPDX-License-Identifier: Apache-2.0
//
// IoU-family similarity metrics between a ground-truth box and a prediction.
// Every metric requires a ground truth with positive area, which keeps the
// union strictly positive; no epsilon is added to any denominator.

#ifndef BOXREG_METRICS_HPP_
#define BOXREG_METRICS_HPP_

#include <optional>
#include <string_view>

#include "boxreg/geometry.hpp"

namespace boxreg {

enum class MetricKind { kIoU, kGIoU, kDIoU, kCIoU, kEIoU, kMPDIoU };

inline constexpr MetricKind kAllMetricKinds[] = {MetricKind::kIoU,  MetricKind::kGIoU,
                                                 MetricKind::kDIoU, MetricKind::kCIoU,
                                                 MetricKind::kEIoU, MetricKind::kMPDIoU};

/// Lower-case name: "iou", "giou", "diou", "ciou", "eiou", "mpdiou".
std::string_view to_string(MetricKind kind);
/// Case-insensitive inverse of to_string; nullopt for unknown names.
std::optional<MetricKind> parse_metric_kind(std::string_view name);

inline constexpr bool requires_image(MetricKind kind) { return kind == MetricKind::kMPDIoU; }

/// Intermediate quantities. Only the terms a metric actually uses are set.
struct MetricTerms {
  std::optional<double> intersection;    // I
  std::optional<double> union_area;      // U
  std::optional<double> enclosing_area;  // |C|
  std::optional<double> enclosing_w;     // w^c
  std::optional<double> enclosing_h;     // h^c
  std::optional<double> center_dist_sq;  // rho^2 between centers
  std::optional<double> diag_sq;         // squared diagonal of C
  std::optional<double> aspect_v;        // V
  std::optional<double> alpha;           // alpha = V / (1 - IoU + V)
  std::optional<double> width_penalty;   // (w_prd - w_gt)^2 / (w^c)^2
  std::optional<double> height_penalty;  // (h_prd - h_gt)^2 / (h^c)^2
  std::optional<double> d1_sq;           // squared top-left corner distance
  std::optional<double> d2_sq;           // squared bottom-right corner distance
  std::optional<double> normalizer;      // w^2 + h^2 of the image

  /// Calls fn(name, value) for every populated term, in declaration order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    auto emit = [&](std::string_view name, const std::optional<double>& v) {
      if (v) fn(name, *v);
    };
    emit("I", intersection);
    emit("U", union_area);
    emit("C", enclosing_area);
    emit("wc", enclosing_w);
    emit("hc", enclosing_h);
    emit("rho2", center_dist_sq);
    emit("c2", diag_sq);
    emit("V", aspect_v);
    emit("alpha", alpha);
    emit("width_penalty", width_penalty);
    emit("height_penalty", height_penalty);
    emit("d1_sq", d1_sq);
    emit("d2_sq", d2_sq);
    emit("normalizer", normalizer);
  }
};

struct MetricResult {
  MetricKind kind;
  double value;
  MetricTerms terms;
};

// All of the following throw DegenerateGroundTruth if area(gt) == 0.

MetricResult iou(const BBox& gt, const BBox& prd);
MetricResult giou(const BBox& gt, const BBox& prd);
/// Also throws DegenerateEnclosure if the enclosing diagonal is zero.
MetricResult diou(const BBox& gt, const BBox& prd);
/// Also throws DegenerateAspect if either box has zero width or height.
MetricResult ciou(const BBox& gt, const BBox& prd);
/// Also throws DegenerateEnclosure if the enclosing width or height is zero.
MetricResult eiou(const BBox& gt, const BBox& prd);
/// IoU minus the top-left and bottom-right squared corner distances, each
/// normalized by the image's squared diagonal. Boxes may extend past the
/// image; the (-2, 1] range only holds for in-image boxes.
MetricResult mpdiou(const BBox& gt, const BBox& prd, const ImageDims& img);

/// Dispatches on kind. `img` is required for MPDIoU (InvalidArgument if
/// missing) and ignored by the others.
MetricResult evaluate(MetricKind kind, const BBox& gt, const BBox& prd,
                      const std::optional<ImageDims>& img = std::nullopt);

/// CIoU's aspect-ratio consistency term V for two boxes with positive sides.
double aspect_consistency(const BBox& gt, const BBox& prd);

}  // namespace boxreg

#endif  // BOXREG_METRICS_HPP_
