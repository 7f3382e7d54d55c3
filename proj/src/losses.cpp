// SPDX-License-Identifier: Apache-2.0

#include "boxreg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "boxreg/error.hpp"

namespace boxreg {

namespace {

using Vec4 = std::array<double, 4>;

constexpr const char* kCoordNames[4] = {"x1", "y1", "x2", "y2"};

Vec4 operator+(const Vec4& a, const Vec4& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }
Vec4 operator-(const Vec4& a, const Vec4& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }
Vec4 operator*(double s, const Vec4& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

bool uses_enclosure(MetricKind kind) {
  return kind == MetricKind::kGIoU || kind == MetricKind::kDIoU || kind == MetricKind::kCIoU ||
         kind == MetricKind::kEIoU;
}

[[noreturn]] void throw_tie(int coord, const std::string& what) {
  throw NonSmoothPointError(coord, std::string("tie at predicted ") + kCoordNames[coord] + ": " + what);
}

// Which argument of each min/max the prediction controls. Ties resolve
// toward the prediction.
struct ActiveSet {
  bool overlap = false;           // intersection treated as non-empty
  std::array<bool, 4> inter{};    // prd coordinate selected by the intersection
  std::array<bool, 4> enclose{};  // prd coordinate selected by the enclosure
};

ActiveSet resolve(MetricKind kind, const Vec4& p, const Vec4& g, TiePolicy policy) {
  const double tol = kTieTolerance;
  const double iw = std::min(p[2], g[2]) - std::max(p[0], g[0]);
  const double ih = std::min(p[3], g[3]) - std::max(p[1], g[1]);
  const bool overlap_zero_nearby = iw < -tol || ih < -tol;

  if (policy == TiePolicy::kReport) {
    if (!overlap_zero_nearby) {
      if (std::abs(iw) <= tol) {
        throw_tie(std::abs(p[0] - g[2]) <= tol ? 0 : 2, "intersection width is zero");
      }
      if (std::abs(ih) <= tol) {
        throw_tie(std::abs(p[1] - g[3]) <= tol ? 1 : 3, "intersection height is zero");
      }
      for (int i = 0; i < 4; ++i) {
        if (std::abs(p[i] - g[i]) <= tol) throw_tie(i, "intersection corner selection");
      }
    }
    if (uses_enclosure(kind)) {
      for (int i = 0; i < 4; ++i) {
        if (std::abs(p[i] - g[i]) <= tol) throw_tie(i, "enclosing box corner selection");
      }
    }
  }

  ActiveSet a;
  a.overlap = !overlap_zero_nearby;
  a.inter = {p[0] >= g[0] - tol, p[1] >= g[1] - tol, p[2] <= g[2] + tol, p[3] <= g[3] + tol};
  a.enclose = {p[0] <= g[0] + tol, p[1] <= g[1] + tol, p[2] >= g[2] - tol, p[3] >= g[3] - tol};
  return a;
}

double ind(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

LossSpec::LossSpec(MetricKind kind, std::optional<ImageDims> img) : kind_(kind), img_(std::move(img)) {
  if (requires_image(kind) != img_.has_value()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("image dims must be given exactly for mpdiou (kind ") +
                    std::string(to_string(kind)) + ")");
  }
}

double loss(const LossSpec& spec, const BBox& gt, const BBox& prd) {
  return 1.0 - evaluate(spec.kind(), gt, prd, spec.img()).value;
}

LossGradient corner_penalty_gradient(const BBox& gt, const BBox& prd, const ImageDims& img) {
  const double norm = img.diag_sq();
  return {2.0 * (prd.x1() - gt.x1()) / norm, 2.0 * (prd.y1() - gt.y1()) / norm,
          2.0 * (prd.x2() - gt.x2()) / norm, 2.0 * (prd.y2() - gt.y2()) / norm};
}

LossGradient gradient(const LossSpec& spec, const BBox& gt, const BBox& prd, TiePolicy policy) {
  const MetricKind kind = spec.kind();
  // Evaluating the metric first enforces its preconditions and yields alpha.
  const MetricResult metric = evaluate(kind, gt, prd, spec.img());

  const Vec4 p = prd.coords();
  const Vec4 g = gt.coords();
  const ActiveSet act = resolve(kind, p, g, policy);

  const double wp = prd.width();
  const double hp = prd.height();

  // Intersection, union and IoU.
  const double inter = intersection_area(gt, prd);
  const double uni = area(gt) + area(prd) - inter;
  Vec4 d_inter{};
  if (act.overlap) {
    const double iw = std::max(0.0, std::min(p[2], g[2]) - std::max(p[0], g[0]));
    const double ih = std::max(0.0, std::min(p[3], g[3]) - std::max(p[1], g[1]));
    d_inter = {-ih * ind(act.inter[0]), -iw * ind(act.inter[1]), ih * ind(act.inter[2]),
               iw * ind(act.inter[3])};
  }
  const Vec4 d_area{-hp, -wp, hp, wp};
  const Vec4 d_union = d_area - d_inter;
  const Vec4 d_iou = (1.0 / (uni * uni)) * (uni * d_inter - inter * d_union);

  // Enclosing box extents.
  const BBox c = enclosing_box(gt, prd);
  const double cw = c.width();
  const double ch = c.height();
  const Vec4 d_cw{-ind(act.enclose[0]), 0.0, ind(act.enclose[2]), 0.0};
  const Vec4 d_ch{0.0, -ind(act.enclose[1]), 0.0, ind(act.enclose[3])};

  // Center-distance term rho^2 / c^2 shared by DIoU, CIoU and EIoU.
  auto d_center_term = [&]() {
    const CenterForm gc = to_center_form(gt);
    const CenterForm pc = to_center_form(prd);
    const double dx = pc.xc - gc.xc;
    const double dy = pc.yc - gc.yc;
    const double rho_sq = dx * dx + dy * dy;
    const double c_sq = cw * cw + ch * ch;
    const Vec4 d_rho{dx, dy, dx, dy};
    const Vec4 d_csq = (2.0 * cw) * d_cw + (2.0 * ch) * d_ch;
    return (1.0 / (c_sq * c_sq)) * (c_sq * d_rho - rho_sq * d_csq);
  };

  Vec4 d_metric{};
  switch (kind) {
    case MetricKind::kIoU:
      d_metric = d_iou;
      break;
    case MetricKind::kGIoU: {
      const double c_area = cw * ch;
      const Vec4 d_carea = ch * d_cw + cw * d_ch;
      d_metric = d_iou + (1.0 / (c_area * c_area)) * (c_area * d_union - uni * d_carea);
      break;
    }
    case MetricKind::kDIoU:
      d_metric = d_iou - d_center_term();
      break;
    case MetricKind::kCIoU: {
      const double alpha = *metric.terms.alpha;
      const double delta = std::atan(gt.width() / gt.height()) - std::atan(wp / hp);
      const double k = 8.0 / (std::numbers::pi * std::numbers::pi) * delta / (wp * wp + hp * hp);
      // dV/dw_prd = -k h_prd, dV/dh_prd = k w_prd.
      const Vec4 d_v{k * hp, -k * wp, -k * hp, k * wp};
      d_metric = d_iou - d_center_term() - alpha * d_v;
      break;
    }
    case MetricKind::kEIoU: {
      const double dw = wp - gt.width();
      const double dh = hp - gt.height();
      const Vec4 d_wp{-1.0, 0.0, 1.0, 0.0};
      const Vec4 d_hp{0.0, -1.0, 0.0, 1.0};
      const Vec4 d_wpen = (2.0 * dw / (cw * cw)) * d_wp - (2.0 * dw * dw / (cw * cw * cw)) * d_cw;
      const Vec4 d_hpen = (2.0 * dh / (ch * ch)) * d_hp - (2.0 * dh * dh / (ch * ch * ch)) * d_ch;
      d_metric = d_iou - d_center_term() - d_wpen - d_hpen;
      break;
    }
    case MetricKind::kMPDIoU:
      d_metric = d_iou - corner_penalty_gradient(gt, prd, *spec.img()).as_array();
      break;
  }
  return LossGradient::from_array(-1.0 * d_metric);
}

LossGradient fd_gradient(const LossSpec& spec, const BBox& gt, const BBox& prd, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be positive");
  }
  std::optional<double> frozen_alpha;
  if (spec.kind() == MetricKind::kCIoU) {
    frozen_alpha = *ciou(gt, prd).terms.alpha;
  }
  auto eval = [&](const Vec4& coords) {
    const BBox b = canonicalize({coords[0], coords[1], coords[2], coords[3]});
    if (frozen_alpha) {
      return 1.0 - (diou(gt, b).value - *frozen_alpha * aspect_consistency(gt, b));
    }
    return loss(spec, gt, b);
  };
  const Vec4 base = prd.coords();
  Vec4 out{};
  for (int i = 0; i < 4; ++i) {
    Vec4 hi = base;
    Vec4 lo = base;
    hi[i] += step;
    lo[i] -= step;
    out[i] = (eval(hi) - eval(lo)) / (2.0 * step);
  }
  return LossGradient::from_array(out);
}

}  // namespace boxreg
