// SPDX-License-Identifier: Apache-2.0
//
// Regression losses L = 1 - metric and their gradients with respect to the
// predicted corners (x1, y1, x2, y2).
//
// Conventions for the analytic gradient:
//  * CIoU treats alpha as a constant while differentiating.
//  * A "tie" is a predicted coordinate within kTieTolerance of the matching
//    ground-truth coordinate in a min/max selection that influences the loss,
//    or an intersection extent within kTieTolerance of zero. With
//    TiePolicy::kReport (the default) gradient() throws NonSmoothPointError
//    there; with TiePolicy::kOneSided the prediction's coordinate is taken as
//    the active argument of every tied min/max and the overlap is taken as
//    active at its boundary.
//
// Finite differences: the default step of 1e-6 suits pixel-scale coordinates
// (magnitudes 1..1e4). For coordinates of magnitude s, a step near 1e-6 * s
// keeps truncation and round-off error balanced.

#ifndef BOXREG_LOSSES_HPP_
#define BOXREG_LOSSES_HPP_

#include <array>
#include <optional>

#include "boxreg/geometry.hpp"
#include "boxreg/metrics.hpp"

namespace boxreg {

inline constexpr double kTieTolerance = 1e-9;
inline constexpr double kDefaultFdStep = 1e-6;

struct LossGradient {
  double d_x1 = 0.0;
  double d_y1 = 0.0;
  double d_x2 = 0.0;
  double d_y2 = 0.0;

  std::array<double, 4> as_array() const noexcept { return {d_x1, d_y1, d_x2, d_y2}; }
  static LossGradient from_array(const std::array<double, 4>& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }
  friend bool operator==(const LossGradient&, const LossGradient&) = default;
};

/// Which loss to use; carries the image dims exactly when the kind needs them.
class LossSpec {
 public:
  /// Throws InvalidArgument if `img` is present iff not required by `kind`.
  LossSpec(MetricKind kind, std::optional<ImageDims> img = std::nullopt);

  MetricKind kind() const noexcept { return kind_; }
  const std::optional<ImageDims>& img() const noexcept { return img_; }

 private:
  MetricKind kind_;
  std::optional<ImageDims> img_;
};

enum class TiePolicy { kReport, kOneSided };

double loss(const LossSpec& spec, const BBox& gt, const BBox& prd);

LossGradient gradient(const LossSpec& spec, const BBox& gt, const BBox& prd,
                      TiePolicy policy = TiePolicy::kReport);

/// Gradient of the MPDIoU corner penalty (d1^2 + d2^2) / (w^2 + h^2) alone:
/// 2 (p - g) / (w^2 + h^2) per coordinate.
LossGradient corner_penalty_gradient(const BBox& gt, const BBox& prd, const ImageDims& img);

/// Central differences of loss() per coordinate. Perturbed predictions are
/// canonicalized. For CIoU, alpha is frozen at its value at `prd` so the
/// result is comparable with gradient(). Throws InvalidArgument if step <= 0.
LossGradient fd_gradient(const LossSpec& spec, const BBox& gt, const BBox& prd,
                         double step = kDefaultFdStep);

}  // namespace boxreg

#endif  // BOXREG_LOSSES_HPP_
