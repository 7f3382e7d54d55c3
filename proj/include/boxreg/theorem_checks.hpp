// SPDX-License-Identifier: Apache-2.0
//
// Machine checks for the concentric same-aspect-ratio construction: a ground
// truth box, an outer prediction scaled by k and an inner prediction scaled
// by 1/k, all sharing one center. On such instances GIoU, DIoU, CIoU and EIoU
// take identical values for the two predictions while MPDIoU strictly
// prefers the inner one. Also checks the bounds of the MPDIoU loss on random
// in-image pairs.

#ifndef BOXREG_THEOREM_CHECKS_HPP_
#define BOXREG_THEOREM_CHECKS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxreg/geometry.hpp"

namespace boxreg {

/// Closed forms and metric evaluations must agree to this absolute tolerance.
inline constexpr double kClosedFormTolerance = 1e-12;

struct TheoremInstance {
  BBox gt;
  BBox prd_outer;
  BBox prd_inner;
  double k;
  ImageDims img;
};

/// Throws BadScale unless k > 1, InvalidArgument for non-positive sizes and
/// OutOfImage when the outer prediction does not fit inside the image.
TheoremInstance build_instance(double center_x, double center_y, double gt_width,
                               double gt_height, double k, const ImageDims& img);

/// Reference geometry for the k = 2 illustration:
/// 100x100 image, square ground truth of side sqrt(800) centered at (50, 50),
/// k = 2, so (w_gt^2 + h_gt^2) / (w^2 + h^2) = 0.08.
TheoremInstance reference_instance();

struct Check {
  std::string name;
  double actual = 0.0;
  double expected = 0.0;
  double residual = 0.0;  // violation amount; <= tolerance means pass
  double tolerance = 0.0;
  bool passed = true;
};

struct VerificationReport {
  std::string suite;
  std::size_t instances = 0;
  std::size_t failed_instances = 0;
  /// One entry per named check. For multi-instance suites this is the worst
  /// (largest residual) occurrence across all instances.
  std::vector<Check> checks;
  /// First failing instance with its offending checks; null when passed.
  nlohmann::json counterexample;

  bool passed() const noexcept { return failed_instances == 0; }
  /// Throws AssertionFailure carrying the counterexample.
  void throw_if_failed() const;
  /// Folds a single-instance report into this aggregate.
  /// `context` describes the instance and is only invoked on failure.
  void merge(const VerificationReport& instance_report,
             const std::function<nlohmann::json()>& context);
};

nlohmann::json to_json(const VerificationReport& report);
nlohmann::json to_json(const TheoremInstance& inst);

/// Pairwise equalities (GIoU, DIoU, CIoU, EIoU of outer vs inner) within
/// `tol`; IoU = 1/k^2 and EIoU = (4k - 2k^2 - 1)/k^2 on both pairs, and
/// GIoU = DIoU = CIoU = IoU, within kClosedFormTolerance.
VerificationReport verify_equalities(const TheoremInstance& inst, double tol);

/// MPDIoU(gt, inner) > MPDIoU(gt, outer), plus the two closed forms
/// 1/k^2 - (k-1)^2 (w_gt^2+h_gt^2) / (2 (w^2+h^2)) and
/// 1/k^2 - (1-1/k)^2 (w_gt^2+h_gt^2) / (2 (w^2+h^2)).
VerificationReport verify_discrimination(const TheoremInstance& inst);

/// 1000-style randomized run of both checks with k uniform in (1, k_max].
VerificationReport run_theorem_suite(std::size_t samples, std::uint64_t seed, double tol = 1e-9,
                                     double k_max = 10.0);

/// Random canonical in-image pairs: 0 <= L_MPDIoU < 3,
/// 0 <= (d1^2 + d2^2)/(w^2 + h^2) < 2 and MPDIoU <= IoU. Two deterministic
/// probes run first: gt == prd (lower bound attained) and degenerate boxes
/// at opposite image corners (supremum approached). Throws InvalidArgument
/// when samples == 0.
VerificationReport verify_bounds(std::size_t samples, const ImageDims& img, std::uint64_t seed);

}  // namespace boxreg

#endif  // BOXREG_THEOREM_CHECKS_HPP_
