// SPDX-License-Identifier: Apache-2.0

#include "boxreg/theorem_checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "boxreg/error.hpp"
#include "boxreg/metrics.hpp"

namespace boxreg {

namespace {

Check equality(std::string name, double actual, double expected, double tol) {
  const double residual = std::abs(actual - expected);
  return {std::move(name), actual, expected, residual, tol, residual <= tol};
}

// residual is the signed amount by which `actual` exceeds `bound`.
Check upper_bound(std::string name, double actual, double bound, bool strict) {
  const double residual = actual - bound;
  return {std::move(name), actual, bound, residual, 0.0, strict ? residual < 0.0 : residual <= 0.0};
}

Check lower_bound(std::string name, double actual, double bound) {
  const double residual = bound - actual;
  return {std::move(name), actual, bound, residual, 0.0, residual <= 0.0};
}

nlohmann::json box_json(const BBox& b) { return {b.x1(), b.y1(), b.x2(), b.y2()}; }

nlohmann::json check_json(const Check& c) {
  return {{"name", c.name},           {"actual", c.actual},       {"expected", c.expected},
          {"residual", c.residual},   {"tolerance", c.tolerance}, {"passed", c.passed}};
}

VerificationReport single(std::string suite, std::vector<Check> checks) {
  VerificationReport r;
  r.suite = std::move(suite);
  r.instances = 1;
  r.checks = std::move(checks);
  const bool ok = std::all_of(r.checks.begin(), r.checks.end(), [](const Check& c) { return c.passed; });
  r.failed_instances = ok ? 0 : 1;
  if (!ok) {
    nlohmann::json failing = nlohmann::json::array();
    for (const Check& c : r.checks) {
      if (!c.passed) failing.push_back(check_json(c));
    }
    r.counterexample = {{"failed_checks", failing}};
  }
  return r;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

void VerificationReport::throw_if_failed() const {
  if (!passed()) {
    throw Error(ErrorCode::kAssertionFailure,
                suite + " failed on " + std::to_string(failed_instances) + " of " +
                    std::to_string(instances) + " instances; first: " + counterexample.dump());
  }
}

void VerificationReport::merge(const VerificationReport& other,
                               const std::function<nlohmann::json()>& context) {
  instances += other.instances;
  failed_instances += other.failed_instances;
  for (const Check& c : other.checks) {
    auto it = std::find_if(checks.begin(), checks.end(),
                           [&](const Check& mine) { return mine.name == c.name; });
    if (it == checks.end()) {
      checks.push_back(c);
    } else if (c.residual > it->residual || (!c.passed && it->passed)) {
      *it = c;
    }
  }
  if (!other.passed() && counterexample.is_null()) {
    counterexample = other.counterexample;
    counterexample["context"] = context();
  }
}

nlohmann::json to_json(const VerificationReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const Check& c : report.checks) checks.push_back(check_json(c));
  return {{"suite", report.suite},
          {"passed", report.passed()},
          {"instances", report.instances},
          {"failed_instances", report.failed_instances},
          {"checks", checks},
          {"counterexample", report.counterexample}};
}

nlohmann::json to_json(const TheoremInstance& inst) {
  return {{"gt", box_json(inst.gt)},
          {"prd_outer", box_json(inst.prd_outer)},
          {"prd_inner", box_json(inst.prd_inner)},
          {"k", inst.k},
          {"img", {inst.img.width(), inst.img.height()}}};
}

TheoremInstance build_instance(double center_x, double center_y, double gt_width,
                               double gt_height, double k, const ImageDims& img) {
  if (!(std::isfinite(k) && k > 1.0)) {
    throw Error(ErrorCode::kBadScale, "scale k must be a finite real > 1, got " + std::to_string(k));
  }
  if (!(std::isfinite(gt_width) && std::isfinite(gt_height) && gt_width > 0.0 && gt_height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ground-truth size must be positive");
  }
  auto centered = [&](double w, double h) {
    return canonicalize({center_x - w / 2.0, center_y - h / 2.0, center_x + w / 2.0, center_y + h / 2.0});
  };
  TheoremInstance inst{centered(gt_width, gt_height), centered(k * gt_width, k * gt_height),
                       centered(gt_width / k, gt_height / k), k, img};
  if (!img.contains(inst.prd_outer)) {
    throw Error(ErrorCode::kOutOfImage, "outer prediction does not fit inside the image");
  }
  return inst;
}

TheoremInstance reference_instance() {
  const double side = std::sqrt(800.0);
  return build_instance(50.0, 50.0, side, side, 2.0, ImageDims(100.0, 100.0));
}

VerificationReport verify_equalities(const TheoremInstance& inst, double tol) {
  const double k = inst.k;
  const double iou_closed = 1.0 / (k * k);
  const double eiou_closed = (4.0 * k - 2.0 * k * k - 1.0) / (k * k);
  const double ct = kClosedFormTolerance;

  std::vector<Check> checks;
  const struct {
    const char* tag;
    const BBox& prd;
  } pairs[] = {{"outer", inst.prd_outer}, {"inner", inst.prd_inner}};

  double values[2][4];  // giou, diou, ciou, eiou per pair
  for (int i = 0; i < 2; ++i) {
    const std::string tag = pairs[i].tag;
    const double v_iou = iou(inst.gt, pairs[i].prd).value;
    const double v_giou = giou(inst.gt, pairs[i].prd).value;
    const double v_diou = diou(inst.gt, pairs[i].prd).value;
    const double v_ciou = ciou(inst.gt, pairs[i].prd).value;
    const double v_eiou = eiou(inst.gt, pairs[i].prd).value;
    values[i][0] = v_giou;
    values[i][1] = v_diou;
    values[i][2] = v_ciou;
    values[i][3] = v_eiou;
    checks.push_back(equality("iou_" + tag + "_eq_inv_k2", v_iou, iou_closed, ct));
    checks.push_back(equality("giou_" + tag + "_eq_iou", v_giou, v_iou, ct));
    checks.push_back(equality("diou_" + tag + "_eq_iou", v_diou, v_iou, ct));
    checks.push_back(equality("ciou_" + tag + "_eq_iou", v_ciou, v_iou, ct));
    checks.push_back(equality("eiou_" + tag + "_closed_form", v_eiou, eiou_closed, ct));
  }
  const char* names[4] = {"giou", "diou", "ciou", "eiou"};
  for (int m = 0; m < 4; ++m) {
    checks.push_back(equality(std::string(names[m]) + "_outer_eq_inner", values[0][m], values[1][m], tol));
  }
  return single("equalities", std::move(checks));
}

VerificationReport verify_discrimination(const TheoremInstance& inst) {
  const double k = inst.k;
  const double ratio = (inst.gt.width() * inst.gt.width() + inst.gt.height() * inst.gt.height()) /
                       inst.img.diag_sq();
  const double outer_closed = 1.0 / (k * k) - (k - 1.0) * (k - 1.0) * ratio / 2.0;
  const double inner_closed = 1.0 / (k * k) - (1.0 - 1.0 / k) * (1.0 - 1.0 / k) * ratio / 2.0;

  const double outer = mpdiou(inst.gt, inst.prd_outer, inst.img).value;
  const double inner = mpdiou(inst.gt, inst.prd_inner, inst.img).value;

  std::vector<Check> checks;
  // inner must be strictly larger: outer - inner < 0.
  checks.push_back(upper_bound("mpdiou_outer_lt_inner", outer - inner, 0.0, true));
  checks.push_back(equality("mpdiou_outer_closed_form", outer, outer_closed, kClosedFormTolerance));
  checks.push_back(equality("mpdiou_inner_closed_form", inner, inner_closed, kClosedFormTolerance));
  return single("discrimination", std::move(checks));
}

VerificationReport run_theorem_suite(std::size_t samples, std::uint64_t seed, double tol, double k_max) {
  if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "samples must be positive");
  if (!(k_max > 1.0)) throw Error(ErrorCode::kBadScale, "k_max must exceed 1");
  std::mt19937_64 rng(seed);
  VerificationReport total;
  total.suite = "theorem";
  for (std::size_t i = 0; i < samples; ++i) {
    const ImageDims img(uniform(rng, 64.0, 2048.0), uniform(rng, 64.0, 2048.0));
    // 1 - u maps [0, 1) onto (0, 1], so k lands in (1, k_max].
    const double k = 1.0 + (k_max - 1.0) * (1.0 - uniform(rng, 0.0, 1.0));
    const double w = uniform(rng, 0.05, 0.95) * img.width() / k;
    const double h = uniform(rng, 0.05, 0.95) * img.height() / k;
    const double cx = uniform(rng, k * w / 2.0, img.width() - k * w / 2.0);
    const double cy = uniform(rng, k * h / 2.0, img.height() - k * h / 2.0);
    const TheoremInstance inst = build_instance(cx, cy, w, h, k, img);
    std::vector<Check> checks = verify_equalities(inst, tol).checks;
    for (Check& c : verify_discrimination(inst).checks) checks.push_back(std::move(c));
    total.merge(single("theorem", std::move(checks)), [&] { return to_json(inst); });
  }
  return total;
}

VerificationReport verify_bounds(std::size_t samples, const ImageDims& img, std::uint64_t seed) {
  if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "samples must be positive");
  const double w = img.width();
  const double h = img.height();
  const double norm = img.diag_sq();

  auto check_pair = [&](const BBox& gt, const BBox& prd) {
    const MetricResult m = mpdiou(gt, prd, img);
    const double l = 1.0 - m.value;
    const double pen = (*m.terms.d1_sq + *m.terms.d2_sq) / norm;
    const double v_iou = iou(gt, prd).value;
    return single("bounds", {lower_bound("loss_ge_0", l, 0.0), upper_bound("loss_lt_3", l, 3.0, true),
                             lower_bound("penalty_ge_0", pen, 0.0),
                             upper_bound("penalty_lt_2", pen, 2.0, true),
                             upper_bound("mpdiou_le_iou", m.value - v_iou, 0.0, false)});
  };
  auto context = [](const BBox& gt, const BBox& prd) {
    return [gt, prd] { return nlohmann::json{{"gt", box_json(gt)}, {"prd", box_json(prd)}}; };
  };

  VerificationReport total;
  total.suite = "bounds";

  // Lower bound attained at gt == prd.
  const BBox same(0.25 * w, 0.25 * h, 0.75 * w, 0.75 * h);
  VerificationReport identical = check_pair(same, same);
  identical.checks.push_back(equality("identical_loss_is_0", 1.0 - mpdiou(same, same, img).value, 0.0, 0.0));
  total.merge(identical, context(same, same));

  // Supremum probe: tiny boxes in opposite corners push L toward 3.
  const double eps = 1e-6 * std::min(w, h);
  const BBox corner_gt(0.0, 0.0, eps, eps);
  const BBox corner_prd(w - eps, h - eps, w, h);
  VerificationReport probe = check_pair(corner_gt, corner_prd);
  const double probe_loss = 1.0 - mpdiou(corner_gt, corner_prd, img).value;
  probe.checks.push_back(lower_bound("corner_probe_loss_near_3", probe_loss, 3.0 - 1e-4));
  total.merge(probe, context(corner_gt, corner_prd));

  std::mt19937_64 rng(seed);
  auto sorted_pair = [&](double lo, double hi) -> std::pair<double, double> {
    const double a = uniform(rng, lo, hi);
    const double b = uniform(rng, lo, hi);
    return {std::min(a, b), std::max(a, b)};
  };
  for (std::size_t i = 0; i < samples; ++i) {
    BBox gt, prd;
    if (i % 2 == 0) {
      // Anywhere in the image.
      do {
        const auto [gx1, gx2] = sorted_pair(0.0, w);
        const auto [gy1, gy2] = sorted_pair(0.0, h);
        gt = BBox(gx1, gy1, gx2, gy2);
      } while (!(area(gt) > 0.0));
      const auto [px1, px2] = sorted_pair(0.0, w);
      const auto [py1, py2] = sorted_pair(0.0, h);
      prd = BBox(px1, py1, px2, py2);
    } else {
      // Small boxes hugging opposite corners, where the penalty is largest.
      do {
        const auto [gx1, gx2] = sorted_pair(0.0, 0.1 * w);
        const auto [gy1, gy2] = sorted_pair(0.0, 0.1 * h);
        gt = BBox(gx1, gy1, gx2, gy2);
      } while (!(area(gt) > 0.0));
      const auto [px1, px2] = sorted_pair(0.9 * w, w);
      const auto [py1, py2] = sorted_pair(0.9 * h, h);
      prd = BBox(px1, py1, px2, py2);
    }
    total.merge(check_pair(gt, prd), context(gt, prd));
  }
  return total;
}

}  // namespace boxreg
