// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "boxreg/error.hpp"
#include "boxreg/metrics.hpp"
#include "boxreg/theorem_checks.hpp"
#include "pixel_oracle.hpp"

namespace boxreg {
namespace {

const BBox kUnit(0, 0, 10, 10);

TEST(Iou, Examples) {
  EXPECT_EQ(iou(kUnit, kUnit).value, 1.0);
  EXPECT_EQ(iou(kUnit, BBox(20, 20, 30, 30)).value, 0.0);
  // 5x5 overlap counted on the pixel grid: 25 shared, 175 covered.
  const int a[4] = {0, 0, 10, 10};
  const int b[4] = {5, 5, 15, 15};
  const auto [inter, uni] = testing_oracle::pixel_iou_counts(a, b);
  EXPECT_EQ(iou(kUnit, BBox(5, 5, 15, 15)).value, double(inter) / double(uni));
  EXPECT_NEAR(iou(kUnit, BBox(5, 5, 15, 15)).value, 0.142857142857, 1e-12);
}

TEST(Iou, DegenerateGroundTruthRejected) {
  try {
    iou(BBox(0, 0, 0, 5), kUnit);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGroundTruth);
  }
}

TEST(Iou, DegeneratePredictionAllowed) {
  EXPECT_EQ(iou(kUnit, BBox(5, 0, 5, 8)).value, 0.0);
}

TEST(Giou, Examples) {
  EXPECT_EQ(giou(kUnit, kUnit).value, 1.0);
  const MetricResult concentric = giou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100));
  EXPECT_NEAR(concentric.value, 0.25, 1e-15);
  EXPECT_NEAR(1.0 - concentric.value, 0.75, 1e-15);
  // Adjacent boxes: the enclosure equals the union exactly.
  EXPECT_EQ(giou(kUnit, BBox(10, 0, 20, 10)).value, 0.0);
}

TEST(Diou, Examples) {
  EXPECT_EQ(diou(kUnit, kUnit).value, 1.0);
  EXPECT_NEAR(diou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value, 0.25, 1e-15);
  // Centers (5,5) and (15,5), enclosure (0,0,20,10).
  const MetricResult r = diou(kUnit, BBox(10, 0, 20, 10));
  EXPECT_EQ(*r.terms.center_dist_sq, 100.0);
  EXPECT_EQ(*r.terms.diag_sq, 500.0);
  EXPECT_NEAR(r.value, -0.2, 1e-15);
}

TEST(Ciou, Examples) {
  EXPECT_NEAR(ciou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value, 0.25, 1e-15);
  const BBox a(10, 10, 30, 20);
  const BBox b(12, 9, 52, 29);
  EXPECT_EQ(*ciou(a, b).terms.aspect_v, 0.0);
  EXPECT_EQ(ciou(a, b).value, diou(a, b).value);

  // Long-double evaluation of the defining formula for (0,0,10,10) vs (0,0,20,10).
  const long double pi = std::numbers::pi_v<long double>;
  const long double v = 4.0L / (pi * pi) * std::pow(std::atan(1.0L) - std::atan(2.0L), 2.0L);
  const long double alpha = v / (1.0L - 0.5L + v);
  const long double expected = 0.5L - 25.0L / 500.0L - alpha * v;
  const MetricResult r = ciou(kUnit, BBox(0, 0, 20, 10));
  EXPECT_NEAR(*r.terms.aspect_v, double(v), 1e-15);
  EXPECT_NEAR(*r.terms.alpha, double(alpha), 1e-15);
  EXPECT_NEAR(r.value, double(expected), 1e-14);
  EXPECT_NEAR(r.value, 0.446752, 5e-7);
  EXPECT_NEAR(*r.terms.aspect_v, 0.041957, 1e-6);
  EXPECT_NEAR(*r.terms.alpha, 0.077417, 5e-7);
}

TEST(Ciou, DegeneratePredictionAspectRejected) {
  try {
    ciou(kUnit, BBox(2, 2, 8, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateAspect);
  }
}

TEST(Eiou, Examples) {
  EXPECT_EQ(eiou(kUnit, kUnit).value, 1.0);
  EXPECT_NEAR(eiou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value, -0.25, 1e-15);
  // 0.5 - 25/500 - 100/400 - 0.
  const MetricResult r = eiou(kUnit, BBox(0, 0, 20, 10));
  EXPECT_NEAR(r.value, 0.2, 1e-15);
  EXPECT_EQ(*r.terms.height_penalty, 0.0);
}

TEST(Mpdiou, Examples) {
  EXPECT_EQ(mpdiou(kUnit, kUnit, ImageDims(640, 480)).value, 1.0);
  const MetricResult r = mpdiou(kUnit, BBox(5, 5, 15, 15), ImageDims(20, 20));
  EXPECT_EQ(*r.terms.d1_sq, 50.0);
  EXPECT_EQ(*r.terms.d2_sq, 50.0);
  EXPECT_EQ(*r.terms.normalizer, 800.0);
  EXPECT_NEAR(r.value, 1.0 / 7.0 - 0.125, 1e-15);
  EXPECT_NEAR(r.value, 0.017857, 5e-7);
}

TEST(Mpdiou, ReferenceInstanceLosses) {
  const TheoremInstance inst = reference_instance();
  EXPECT_NEAR(1.0 - mpdiou(inst.gt, inst.prd_outer, inst.img).value, 0.79, 5e-3);
  EXPECT_NEAR(1.0 - mpdiou(inst.gt, inst.prd_inner, inst.img).value, 0.76, 5e-3);
  // The reconstruction gives these values exactly, up to rounding.
  EXPECT_NEAR(1.0 - mpdiou(inst.gt, inst.prd_outer, inst.img).value, 0.79, 1e-12);
  EXPECT_NEAR(1.0 - mpdiou(inst.gt, inst.prd_inner, inst.img).value, 0.76, 1e-12);
}

TEST(Evaluate, Dispatch) {
  const BBox p(1, 2, 13, 9);
  EXPECT_EQ(evaluate(MetricKind::kIoU, kUnit, p).value, iou(kUnit, p).value);
  EXPECT_EQ(evaluate(MetricKind::kEIoU, kUnit, p).value, eiou(kUnit, p).value);
  EXPECT_EQ(evaluate(MetricKind::kMPDIoU, kUnit, p, ImageDims(50, 50)).value,
            mpdiou(kUnit, p, ImageDims(50, 50)).value);
  EXPECT_THROW(evaluate(MetricKind::kMPDIoU, kUnit, p), Error);
}

TEST(MetricKindNames, RoundTrip) {
  for (MetricKind k : kAllMetricKinds) EXPECT_EQ(parse_metric_kind(to_string(k)), k);
  EXPECT_EQ(parse_metric_kind("MPDIoU"), MetricKind::kMPDIoU);
  EXPECT_FALSE(parse_metric_kind("siou").has_value());
  EXPECT_TRUE(requires_image(MetricKind::kMPDIoU));
  EXPECT_FALSE(requires_image(MetricKind::kCIoU));
}

// Property tests.

class MetricProperties : public ::testing::Test {
 protected:
  const ImageDims img_{640, 480};
  std::mt19937_64 rng_{11};

  BBox in_image_box() {
    std::uniform_real_distribution<double> ux(0, img_.width());
    std::uniform_real_distribution<double> uy(0, img_.height());
    for (;;) {
      const BBox b = canonicalize({ux(rng_), uy(rng_), ux(rng_), uy(rng_)});
      if (b.width() > 1e-3 && b.height() > 1e-3) return b;
    }
  }

  // Biased toward overlap so every ordering is exercised in both regimes.
  BBox near(const BBox& b) {
    std::normal_distribution<double> n(0.0, 0.3);
    for (;;) {
      const double w = b.width();
      const double h = b.height();
      const BBox p = canonicalize({b.x1() + n(rng_) * w, b.y1() + n(rng_) * h, b.x2() + n(rng_) * w,
                                   b.y2() + n(rng_) * h});
      if (img_.contains(p) && p.width() > 1e-3 && p.height() > 1e-3) return p;
    }
  }

  std::pair<BBox, BBox> sample(int i) {
    const BBox gt = in_image_box();
    return {gt, i % 2 ? near(gt) : in_image_box()};
  }
};

TEST_F(MetricProperties, SymmetricUnderSwap) {
  for (int i = 0; i < 2000; ++i) {
    const auto [a, b] = sample(i);
    for (MetricKind k : kAllMetricKinds) {
      const double ab = evaluate(k, a, b, img_).value;
      const double ba = evaluate(k, b, a, img_).value;
      ASSERT_NEAR(ab, ba, 1e-12) << to_string(k);
    }
  }
}

TEST_F(MetricProperties, Ranges) {
  for (int i = 0; i < 5000; ++i) {
    const auto [gt, prd] = sample(i);
    const double v_iou = iou(gt, prd).value;
    EXPECT_GE(v_iou, 0.0);
    EXPECT_LE(v_iou, 1.0);
    for (MetricKind k : {MetricKind::kGIoU, MetricKind::kDIoU}) {
      const double v = evaluate(k, gt, prd).value;
      EXPECT_GT(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    const double v = mpdiou(gt, prd, img_).value;
    EXPECT_GT(v, -2.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(MetricProperties, OneOnlyAtIdentity) {
  for (int i = 0; i < 2000; ++i) {
    const auto [gt, prd] = sample(i);
    for (MetricKind k : kAllMetricKinds) {
      ASSERT_EQ(evaluate(k, gt, gt, img_).value, 1.0) << to_string(k);
      if (!(gt == prd)) ASSERT_LT(evaluate(k, gt, prd, img_).value, 1.0) << to_string(k);
    }
  }
}

TEST_F(MetricProperties, PointwiseOrdering) {
  for (int i = 0; i < 5000; ++i) {
    const auto [gt, prd] = sample(i);
    const double v_iou = iou(gt, prd).value;
    const double v_diou = diou(gt, prd).value;
    EXPECT_LE(giou(gt, prd).value, v_iou);
    EXPECT_LE(v_diou, v_iou);
    EXPECT_LE(ciou(gt, prd).value, v_diou);
    EXPECT_LE(eiou(gt, prd).value, v_diou);
    EXPECT_LE(mpdiou(gt, prd, img_).value, v_iou);
  }
}

TEST_F(MetricProperties, JointTranslationInvariance) {
  std::uniform_real_distribution<double> shift(-200, 200);
  for (int i = 0; i < 2000; ++i) {
    const auto [gt, prd] = sample(i);
    const double dx = shift(rng_);
    const double dy = shift(rng_);
    const BBox gt2(gt.x1() + dx, gt.y1() + dy, gt.x2() + dx, gt.y2() + dy);
    const BBox prd2(prd.x1() + dx, prd.y1() + dy, prd.x2() + dx, prd.y2() + dy);
    for (MetricKind k : kAllMetricKinds) {
      ASSERT_NEAR(evaluate(k, gt, prd, img_).value, evaluate(k, gt2, prd2, img_).value, 1e-9)
          << to_string(k);
    }
  }
}

TEST_F(MetricProperties, ScaleInvariance) {
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const auto [gt, prd] = sample(i);
    const double s = scale(rng_);
    const BBox gt2(gt.x1() * s, gt.y1() * s, gt.x2() * s, gt.y2() * s);
    const BBox prd2(prd.x1() * s, prd.y1() * s, prd.x2() * s, prd.y2() * s);
    const ImageDims img2(img_.width() * s, img_.height() * s);
    for (MetricKind k : {MetricKind::kIoU, MetricKind::kGIoU, MetricKind::kDIoU, MetricKind::kCIoU,
                         MetricKind::kEIoU}) {
      ASSERT_NEAR(evaluate(k, gt, prd).value, evaluate(k, gt2, prd2).value, 1e-12) << to_string(k);
    }
    ASSERT_NEAR(mpdiou(gt, prd, img_).value, mpdiou(gt2, prd2, img2).value, 1e-12);
  }
}

TEST_F(MetricProperties, ConcentricSameAspectCollapsesToIou) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = 1.0 + 5.0 * (1.0 - u(rng_));
    const double w = 5.0 + 50.0 * u(rng_);
    const double h = 5.0 + 50.0 * u(rng_);
    const TheoremInstance inst = build_instance(320, 240, w, h, k, img_);
    for (const BBox& prd : {inst.prd_outer, inst.prd_inner}) {
      const double v = iou(inst.gt, prd).value;
      ASSERT_NEAR(giou(inst.gt, prd).value, v, 4e-16);
      ASSERT_NEAR(diou(inst.gt, prd).value, v, 4e-16);
      ASSERT_NEAR(ciou(inst.gt, prd).value, v, 4e-16);
    }
  }
}

// With coordinates on a coarse dyadic grid no step rounds and the identity is exact.
TEST_F(MetricProperties, ConcentricSameAspectExactOnDyadicGrid) {
  std::uniform_int_distribution<int> u(1, 64);
  for (int i = 0; i < 1000; ++i) {
    const double w = u(rng_) / 4.0;
    const double h = u(rng_) / 4.0;
    const double k = (i % 2) ? 2.0 : 4.0;
    const TheoremInstance inst = build_instance(256, 128, w, h, k, img_);
    for (const BBox& prd : {inst.prd_outer, inst.prd_inner}) {
      const double v = iou(inst.gt, prd).value;
      ASSERT_EQ(giou(inst.gt, prd).value, v);
      ASSERT_EQ(diou(inst.gt, prd).value, v);
      ASSERT_EQ(ciou(inst.gt, prd).value, v);
    }
  }
}

TEST_F(MetricProperties, DisjointMpdiouLoss) {
  int checked = 0;
  while (checked < 1000) {
    const auto [gt, prd] = sample(0);
    if (intersection_area(gt, prd) > 0.0) continue;
    ++checked;
    const MetricResult r = mpdiou(gt, prd, img_);
    const double pen = (*r.terms.d1_sq + *r.terms.d2_sq) / img_.diag_sq();
    EXPECT_NEAR(1.0 - r.value, 1.0 + pen, 1e-12);
    EXPECT_GE(pen, 0.0);
    EXPECT_LT(pen, 2.0);
  }
}

TEST_F(MetricProperties, ValueMatchesTerms) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int i = 0; i < 2000; ++i) {
    const auto [gt, prd] = sample(i);
    const MetricResult ri = iou(gt, prd);
    const double v_iou = *ri.terms.intersection / *ri.terms.union_area;
    EXPECT_NEAR(ri.value, v_iou, 1e-12);
    const MetricResult rg = giou(gt, prd);
    EXPECT_NEAR(rg.value, v_iou - (*rg.terms.enclosing_area - *rg.terms.union_area) / *rg.terms.enclosing_area,
                1e-12);
    const MetricResult rd = diou(gt, prd);
    const double v_diou = v_iou - *rd.terms.center_dist_sq / *rd.terms.diag_sq;
    EXPECT_NEAR(rd.value, v_diou, 1e-12);
    const MetricResult rc = ciou(gt, prd);
    const double dv = std::atan(gt.width() / gt.height()) - std::atan(prd.width() / prd.height());
    EXPECT_NEAR(*rc.terms.aspect_v, 4.0 / pi2 * dv * dv, 1e-12);
    EXPECT_NEAR(rc.value, v_diou - *rc.terms.alpha * *rc.terms.aspect_v, 1e-12);
    const MetricResult re = eiou(gt, prd);
    EXPECT_NEAR(re.value, v_diou - *re.terms.width_penalty - *re.terms.height_penalty, 1e-12);
    const MetricResult rm = mpdiou(gt, prd, img_);
    EXPECT_NEAR(rm.value, v_iou - (*rm.terms.d1_sq + *rm.terms.d2_sq) / *rm.terms.normalizer, 1e-12);
    EXPECT_GT(*ri.terms.union_area, 0.0);
  }
}

}  // namespace
}  // namespace boxreg
