// SPDX-License-Identifier: Apache-2.0

#include "boxreg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "boxreg/error.hpp"

namespace boxreg {

namespace {

void require_gt_area(const BBox& gt) {
  if (!(area(gt) > 0.0)) {
    throw Error(ErrorCode::kDegenerateGroundTruth, "ground-truth box has zero area");
  }
}

struct Overlap {
  double intersection;
  double union_area;
  double iou;
};

Overlap overlap(const BBox& gt, const BBox& prd) {
  require_gt_area(gt);
  const double inter = intersection_area(gt, prd);
  const double uni = area(gt) + area(prd) - inter;
  return {inter, uni, inter / uni};
}

struct CenterDistance {
  double rho_sq;
  double diag_sq;
  double enclosing_w;
  double enclosing_h;
};

CenterDistance center_distance(const BBox& gt, const BBox& prd) {
  const CenterForm g = to_center_form(gt);
  const CenterForm p = to_center_form(prd);
  const BBox c = enclosing_box(gt, prd);
  const double dx = p.xc - g.xc;
  const double dy = p.yc - g.yc;
  return {dx * dx + dy * dy, c.width() * c.width() + c.height() * c.height(), c.width(),
          c.height()};
}

}  // namespace

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kIoU: return "iou";
    case MetricKind::kGIoU: return "giou";
    case MetricKind::kDIoU: return "diou";
    case MetricKind::kCIoU: return "ciou";
    case MetricKind::kEIoU: return "eiou";
    case MetricKind::kMPDIoU: return "mpdiou";
  }
  return "unknown";
}

std::optional<MetricKind> parse_metric_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (MetricKind kind : kAllMetricKinds) {
    if (to_string(kind) == lower) return kind;
  }
  return std::nullopt;
}

MetricResult iou(const BBox& gt, const BBox& prd) {
  const Overlap o = overlap(gt, prd);
  MetricResult r{MetricKind::kIoU, o.iou, {}};
  r.terms.intersection = o.intersection;
  r.terms.union_area = o.union_area;
  return r;
}

MetricResult giou(const BBox& gt, const BBox& prd) {
  const Overlap o = overlap(gt, prd);
  const double c = area(enclosing_box(gt, prd));
  // C >= U exactly; rounding can make the difference slightly negative.
  MetricResult r{MetricKind::kGIoU, o.iou - std::max(c - o.union_area, 0.0) / c, {}};
  r.terms.intersection = o.intersection;
  r.terms.union_area = o.union_area;
  r.terms.enclosing_area = c;
  return r;
}

MetricResult diou(const BBox& gt, const BBox& prd) {
  const Overlap o = overlap(gt, prd);
  const CenterDistance cd = center_distance(gt, prd);
  if (!(cd.diag_sq > 0.0)) {
    throw Error(ErrorCode::kDegenerateEnclosure, "enclosing box has zero diagonal");
  }
  MetricResult r{MetricKind::kDIoU, o.iou - cd.rho_sq / cd.diag_sq, {}};
  r.terms.intersection = o.intersection;
  r.terms.union_area = o.union_area;
  r.terms.center_dist_sq = cd.rho_sq;
  r.terms.diag_sq = cd.diag_sq;
  return r;
}

double aspect_consistency(const BBox& gt, const BBox& prd) {
  if (!(gt.width() > 0.0 && gt.height() > 0.0 && prd.width() > 0.0 && prd.height() > 0.0)) {
    throw Error(ErrorCode::kDegenerateAspect, "aspect ratio needs positive width and height");
  }
  const double d = std::atan(gt.width() / gt.height()) - std::atan(prd.width() / prd.height());
  return 4.0 / (std::numbers::pi * std::numbers::pi) * d * d;
}

MetricResult ciou(const BBox& gt, const BBox& prd) {
  MetricResult r = diou(gt, prd);
  const double v = aspect_consistency(gt, prd);
  const double iou_value = *r.terms.intersection / *r.terms.union_area;
  // V == 0 covers identical boxes, where 1 - IoU + V would also be 0.
  const double alpha = v > 0.0 ? v / (1.0 - iou_value + v) : 0.0;
  r.kind = MetricKind::kCIoU;
  r.value -= alpha * v;
  r.terms.aspect_v = v;
  r.terms.alpha = alpha;
  return r;
}

MetricResult eiou(const BBox& gt, const BBox& prd) {
  MetricResult r = diou(gt, prd);
  const BBox c = enclosing_box(gt, prd);
  if (!(c.width() > 0.0 && c.height() > 0.0)) {
    throw Error(ErrorCode::kDegenerateEnclosure, "enclosing box has zero width or height");
  }
  const double dw = prd.width() - gt.width();
  const double dh = prd.height() - gt.height();
  const double wpen = dw * dw / (c.width() * c.width());
  const double hpen = dh * dh / (c.height() * c.height());
  r.kind = MetricKind::kEIoU;
  r.value -= wpen + hpen;
  r.terms.enclosing_w = c.width();
  r.terms.enclosing_h = c.height();
  r.terms.width_penalty = wpen;
  r.terms.height_penalty = hpen;
  return r;
}

MetricResult mpdiou(const BBox& gt, const BBox& prd, const ImageDims& img) {
  const Overlap o = overlap(gt, prd);
  const double dx1 = prd.x1() - gt.x1();
  const double dy1 = prd.y1() - gt.y1();
  const double dx2 = prd.x2() - gt.x2();
  const double dy2 = prd.y2() - gt.y2();
  const double d1_sq = dx1 * dx1 + dy1 * dy1;
  const double d2_sq = dx2 * dx2 + dy2 * dy2;
  const double norm = img.diag_sq();
  MetricResult r{MetricKind::kMPDIoU, o.iou - d1_sq / norm - d2_sq / norm, {}};
  r.terms.intersection = o.intersection;
  r.terms.union_area = o.union_area;
  r.terms.d1_sq = d1_sq;
  r.terms.d2_sq = d2_sq;
  r.terms.normalizer = norm;
  return r;
}

MetricResult evaluate(MetricKind kind, const BBox& gt, const BBox& prd,
                      const std::optional<ImageDims>& img) {
  switch (kind) {
    case MetricKind::kIoU: return iou(gt, prd);
    case MetricKind::kGIoU: return giou(gt, prd);
    case MetricKind::kDIoU: return diou(gt, prd);
    case MetricKind::kCIoU: return ciou(gt, prd);
    case MetricKind::kEIoU: return eiou(gt, prd);
    case MetricKind::kMPDIoU:
      if (!img) {
        throw Error(ErrorCode::kInvalidArgument, "mpdiou requires image dimensions");
      }
      return mpdiou(gt, prd, *img);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown metric kind");
}

}  // namespace boxreg
