// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "boxreg/error.hpp"
#include "boxreg/losses.hpp"
#include "boxreg/metrics.hpp"
#include "boxreg/theorem_checks.hpp"

namespace boxreg {
namespace {

const Check& find_check(const VerificationReport& r, const std::string& name) {
  for (const Check& c : r.checks) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("missing check " + name);
}

TEST(BuildInstance, ReferenceGeometry) {
  const TheoremInstance inst = reference_instance();
  const double side = std::sqrt(800.0);
  EXPECT_NEAR(inst.gt.width(), side, 1e-12);
  EXPECT_NEAR(inst.prd_outer.width(), 2 * side, 1e-12);
  EXPECT_NEAR(inst.prd_inner.width(), side / 2, 1e-12);
  const double ratio = (inst.gt.width() * inst.gt.width() + inst.gt.height() * inst.gt.height()) /
                       inst.img.diag_sq();
  EXPECT_NEAR(ratio, 0.08, 1e-12);
}

TEST(BuildInstance, DirectScaling) {
  const TheoremInstance inst = build_instance(50, 50, 10, 20, 1.5, ImageDims(100, 100));
  EXPECT_NEAR(inst.prd_outer.width(), 15.0, 1e-12);
  EXPECT_NEAR(inst.prd_outer.height(), 30.0, 1e-12);
  EXPECT_NEAR(inst.prd_inner.width(), 20.0 / 3.0, 1e-12);
  EXPECT_NEAR(inst.prd_inner.height(), 40.0 / 3.0, 1e-12);
  for (const BBox& b : {inst.gt, inst.prd_outer, inst.prd_inner}) {
    EXPECT_NEAR((b.x1() + b.x2()) / 2, 50.0, 1e-12);
    EXPECT_NEAR((b.y1() + b.y2()) / 2, 50.0, 1e-12);
  }
}

TEST(BuildInstance, LimitCase) {
  const TheoremInstance inst = build_instance(50, 50, 10, 20, 1.0 + 1e-9, ImageDims(100, 100));
  for (MetricKind kind : kAllMetricKinds) {
    EXPECT_NEAR(evaluate(kind, inst.gt, inst.prd_outer, inst.img).value, 1.0, 1e-7);
    EXPECT_NEAR(evaluate(kind, inst.gt, inst.prd_inner, inst.img).value, 1.0, 1e-7);
  }
}

TEST(BuildInstance, Errors) {
  const ImageDims img(100, 100);
  for (double k : {1.0, 0.5, -2.0, std::nan("")}) {
    try {
      build_instance(50, 50, 10, 10, k, img);
      FAIL() << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadScale);
    }
  }
  try {
    build_instance(50, 50, 40, 40, 3.0, img);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfImage);
  }
  EXPECT_THROW(build_instance(50, 50, 0, 10, 2.0, img), Error);
}

TEST(VerifyEqualities, KEqualsTwo) {
  const TheoremInstance inst = build_instance(50, 50, 20, 10, 2.0, ImageDims(100, 100));
  const VerificationReport r = verify_equalities(inst, 1e-9);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(iou(inst.gt, inst.prd_outer).value, 0.25, 1e-15);
  EXPECT_NEAR(iou(inst.gt, inst.prd_inner).value, 0.25, 1e-15);
  EXPECT_NEAR(eiou(inst.gt, inst.prd_outer).value, -0.25, 1e-15);
  EXPECT_NEAR(eiou(inst.gt, inst.prd_inner).value, -0.25, 1e-15);
}

TEST(VerifyEqualities, KEqualsThree) {
  const TheoremInstance inst = build_instance(50, 50, 12, 9, 3.0, ImageDims(100, 100));
  EXPECT_TRUE(verify_equalities(inst, 1e-9).passed());
  EXPECT_NEAR(iou(inst.gt, inst.prd_outer).value, 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(eiou(inst.gt, inst.prd_outer).value, -7.0 / 9.0, 1e-14);
  EXPECT_NEAR(eiou(inst.gt, inst.prd_inner).value, -7.0 / 9.0, 1e-14);
}

TEST(VerifyEqualities, CiouEqualsDiou) {
  for (double k : {1.2, 2.0, 3.7}) {
    const TheoremInstance inst = build_instance(60, 40, 13, 7, k, ImageDims(120, 80));
    EXPECT_EQ(ciou(inst.gt, inst.prd_outer).value, diou(inst.gt, inst.prd_outer).value);
    EXPECT_EQ(ciou(inst.gt, inst.prd_inner).value, diou(inst.gt, inst.prd_inner).value);
  }
}

TEST(VerifyEqualities, FailureCarriesCounterexample) {
  // A non-concentric "instance" breaks the equalities.
  TheoremInstance inst = build_instance(50, 50, 20, 10, 2.0, ImageDims(100, 100));
  inst.prd_outer = BBox(0, 0, 40, 20);
  const VerificationReport r = verify_equalities(inst, 1e-9);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.counterexample.is_null());
  try {
    r.throw_if_failed();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAssertionFailure);
  }
}

TEST(VerifyDiscrimination, ReferenceInstance) {
  const TheoremInstance inst = reference_instance();
  const VerificationReport r = verify_discrimination(inst);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(mpdiou(inst.gt, inst.prd_inner, inst.img).value, 0.24, 1e-12);
  EXPECT_NEAR(mpdiou(inst.gt, inst.prd_outer, inst.img).value, 0.21, 1e-12);
}

TEST(VerifyDiscrimination, KEqualsFourClosedForm) {
  const TheoremInstance inst = build_instance(50, 50, 20, 20, 4.0, ImageDims(100, 100));
  EXPECT_TRUE(verify_discrimination(inst).passed());
  const double diff = mpdiou(inst.gt, inst.prd_inner, inst.img).value -
                      mpdiou(inst.gt, inst.prd_outer, inst.img).value;
  EXPECT_NEAR(diff, 0.16875, 1e-12);
}

// The gap shrinks like (k - 1)^2 and falls below double resolution near
// k = 1, so only its vanishing is checked there.
TEST(VerifyDiscrimination, LimitDifferenceVanishes) {
  double previous = INFINITY;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const TheoremInstance inst = build_instance(50, 50, 20, 20, 1.0 + eps, ImageDims(100, 100));
    EXPECT_TRUE(verify_discrimination(inst).passed()) << eps;
    const double diff = mpdiou(inst.gt, inst.prd_inner, inst.img).value -
                        mpdiou(inst.gt, inst.prd_outer, inst.img).value;
    EXPECT_GT(diff, 0.0);
    EXPECT_LT(diff, previous);
    previous = diff;
  }
  const TheoremInstance inst = build_instance(50, 50, 20, 20, 1.0 + 1e-9, ImageDims(100, 100));
  const double diff = mpdiou(inst.gt, inst.prd_inner, inst.img).value -
                      mpdiou(inst.gt, inst.prd_outer, inst.img).value;
  EXPECT_NEAR(diff, 0.0, 1e-15);
}

TEST(VerifyDiscrimination, BaselineLossesCannotTell) {
  const TheoremInstance inst = reference_instance();
  for (MetricKind kind : {MetricKind::kGIoU, MetricKind::kDIoU, MetricKind::kCIoU, MetricKind::kEIoU}) {
    EXPECT_NEAR(evaluate(kind, inst.gt, inst.prd_outer).value,
                evaluate(kind, inst.gt, inst.prd_inner).value, 1e-12)
        << to_string(kind);
  }
}

TEST(TheoremSuite, ThousandInstancesPass) {
  const VerificationReport r = run_theorem_suite(1000, 1, 1e-9);
  EXPECT_TRUE(r.passed()) << to_json(r).dump();
  EXPECT_EQ(r.instances, 1000u);
  EXPECT_EQ(r.failed_instances, 0u);
  EXPECT_LE(find_check(r, "iou_outer_eq_inv_k2").residual, kClosedFormTolerance);
  EXPECT_LE(find_check(r, "mpdiou_inner_closed_form").residual, kClosedFormTolerance);
  EXPECT_LT(find_check(r, "mpdiou_outer_lt_inner").residual, 0.0);
}

TEST(TheoremSuite, Deterministic) {
  EXPECT_EQ(to_json(run_theorem_suite(50, 9)).dump(), to_json(run_theorem_suite(50, 9)).dump());
}

TEST(TheoremSuite, RejectsZeroSamples) {
  EXPECT_THROW(run_theorem_suite(0, 1), Error);
  EXPECT_THROW(verify_bounds(0, ImageDims(640, 480), 1), Error);
}

TEST(Bounds, HundredThousandSamplesPass) {
  const VerificationReport r = verify_bounds(100000, ImageDims(640, 480), 42);
  EXPECT_TRUE(r.passed()) << to_json(r).dump();
  EXPECT_GE(r.instances, 100000u);
  EXPECT_LT(find_check(r, "loss_lt_3").actual, 3.0);
  EXPECT_LT(find_check(r, "penalty_lt_2").actual, 2.0);
  EXPECT_GE(find_check(r, "loss_ge_0").actual, 0.0);
}

TEST(Bounds, LowerBoundAttained) {
  const ImageDims img(640, 480);
  const BBox b(10, 20, 30, 50);
  EXPECT_EQ(loss(LossSpec(MetricKind::kMPDIoU, img), b, b), 0.0);
}

TEST(Bounds, CornerProbeApproachesThree) {
  const ImageDims img(640, 480);
  const LossSpec spec(MetricKind::kMPDIoU, img);
  double previous = 0.0;
  for (double eps : {10.0, 1.0, 0.1, 1e-3}) {
    const double l = loss(spec, BBox(0, 0, eps, eps), BBox(640 - eps, 480 - eps, 640, 480));
    EXPECT_LT(l, 3.0);
    EXPECT_GT(l, previous);
    previous = l;
  }
  EXPECT_GT(previous, 3.0 - 1e-4);
}

TEST(ReportJson, Shape) {
  const nlohmann::json j = to_json(verify_discrimination(reference_instance()));
  EXPECT_EQ(j["suite"], "discrimination");
  EXPECT_EQ(j["passed"], true);
  EXPECT_EQ(j["checks"].size(), 3u);
  EXPECT_TRUE(j["counterexample"].is_null());
}

}  // namespace
}  // namespace boxreg
