// SPDX-License-Identifier: Apache-2.0

#include "boxreg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "boxreg/error.hpp"
#include "boxreg/losses.hpp"
#include "boxreg/text.hpp"

namespace boxreg {

namespace {

constexpr double kTiePerturbation = 1e-7;
constexpr int kMaxTieRetries = 16;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  // Box of the given size placed uniformly inside the image.
  BBox place(double w, double h, const ImageDims& img) {
    const double x1 = uniform(0.0, img.width() - w);
    const double y1 = uniform(0.0, img.height() - h);
    return BBox(x1, y1, x1 + w, y1 + h);
  }

  BBox sized_box(double lo_frac, double hi_frac, const ImageDims& img) {
    return place(uniform(lo_frac, hi_frac) * img.width(), uniform(lo_frac, hi_frac) * img.height(), img);
  }

 private:
  std::mt19937_64 rng_;
};

// Shift a box back inside the image without resizing it.
BBox clamp_into(const BBox& b, const ImageDims& img) {
  const double dx = std::max(0.0, -b.x1()) - std::max(0.0, b.x2() - img.width());
  const double dy = std::max(0.0, -b.y1()) - std::max(0.0, b.y2() - img.height());
  return BBox(b.x1() + dx, b.y1() + dy, b.x2() + dx, b.y2() + dy);
}

ScenarioCase overlapping_case(Sampler& s, const ImageDims& img) {
  for (;;) {
    const BBox gt = s.sized_box(0.15, 0.35, img);
    const double w = gt.width() * s.uniform(0.6, 1.5);
    const double h = gt.height() * s.uniform(0.6, 1.5);
    const double cx = (gt.x1() + gt.x2()) / 2.0 + s.uniform(-0.3, 0.3) * gt.width();
    const double cy = (gt.y1() + gt.y2()) / 2.0 + s.uniform(-0.3, 0.3) * gt.height();
    const BBox prd = clamp_into(BBox(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0), img);
    if (img.contains(prd) && intersection_area(gt, prd) > 0.0 && !(prd == gt)) return {gt, prd};
  }
}

ScenarioCase nonoverlapping_case(Sampler& s, const ImageDims& img) {
  const double gap_x = 0.02 * img.width();
  const double gap_y = 0.02 * img.height();
  for (;;) {
    const BBox gt = s.sized_box(0.1, 0.3, img);
    const BBox prd = s.sized_box(0.1, 0.3, img);
    const bool apart = prd.x1() > gt.x2() + gap_x || prd.x2() < gt.x1() - gap_x ||
                       prd.y1() > gt.y2() + gap_y || prd.y2() < gt.y1() - gap_y;
    if (apart) return {gt, prd};
  }
}

ScenarioCase contained_case(Sampler& s, const ImageDims& img, bool outer) {
  // 1 - u maps [0, 1) onto (0, 1], so k lands in (1, 4].
  const double k = 1.0 + 3.0 * (1.0 - s.uniform(0.0, 1.0));
  const double w = s.uniform(0.1, 0.24) * img.width();
  const double h = s.uniform(0.1, 0.24) * img.height();
  const double cx = s.uniform(k * w / 2.0, img.width() - k * w / 2.0);
  const double cy = s.uniform(k * h / 2.0, img.height() - k * h / 2.0);
  auto centered = [&](double bw, double bh) {
    return BBox(cx - bw / 2.0, cy - bh / 2.0, cx + bw / 2.0, cy + bh / 2.0);
  };
  const double scale = outer ? k : 1.0 / k;
  return {centered(w, h), centered(scale * w, scale * h)};
}

ScenarioCase random_case(Sampler& s, const ImageDims& img) {
  return {s.sized_box(0.05, 0.5, img), s.sized_box(0.05, 0.5, img)};
}

}  // namespace

std::string_view to_string(ScenarioFamily family) {
  switch (family) {
    case ScenarioFamily::kOverlapping: return "overlapping";
    case ScenarioFamily::kNonOverlapping: return "nonoverlapping";
    case ScenarioFamily::kContainedSameAspect: return "contained-same-aspect";
    case ScenarioFamily::kRandom: return "random";
  }
  return "unknown";
}

std::optional<ScenarioFamily> parse_scenario_family(std::string_view name) {
  for (ScenarioFamily f : {ScenarioFamily::kOverlapping, ScenarioFamily::kNonOverlapping,
                           ScenarioFamily::kContainedSameAspect, ScenarioFamily::kRandom}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kLossThreshold: return "loss_threshold";
    case StopReason::kIouThreshold: return "iou_threshold";
    case StopReason::kStalled: return "stalled";
    case StopReason::kMaxIters: return "max_iters";
    case StopReason::kDiverged: return "diverged";
  }
  return "unknown";
}

ScenarioSuite generate_suite(ScenarioFamily family, std::size_t n_cases, const ImageDims& img,
                             std::uint64_t seed) {
  if (n_cases == 0) throw Error(ErrorCode::kInvalidArgument, "n_cases must be positive");
  Sampler s(seed);
  ScenarioSuite suite{family, img, {}};
  suite.cases.reserve(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) {
    switch (family) {
      case ScenarioFamily::kOverlapping: suite.cases.push_back(overlapping_case(s, img)); break;
      case ScenarioFamily::kNonOverlapping: suite.cases.push_back(nonoverlapping_case(s, img)); break;
      case ScenarioFamily::kContainedSameAspect:
        suite.cases.push_back(contained_case(s, img, i % 2 == 0));
        break;
      case ScenarioFamily::kRandom: suite.cases.push_back(random_case(s, img)); break;
    }
  }
  return suite;
}

void RunConfig::validate() const {
  if (!(std::isfinite(step_size) && step_size > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step_size must be positive");
  }
  if (max_iters <= 0) throw Error(ErrorCode::kInvalidArgument, "max_iters must be positive");
}

std::vector<ConvergenceRecord> run_regression(const ScenarioSuite& suite, const RunConfig& cfg) {
  cfg.validate();
  const LossSpec spec(cfg.kind, requires_image(cfg.kind) ? std::optional<ImageDims>(suite.img)
                                                          : std::nullopt);
  const double learning_rate = cfg.step_size * suite.img.diag_sq();

  std::vector<ConvergenceRecord> records;
  records.reserve(suite.cases.size());
  for (std::size_t id = 0; id < suite.cases.size(); ++id) {
    const BBox& gt = suite.cases[id].gt;
    std::mt19937_64 tie_rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (id + 1)));

    ConvergenceRecord rec;
    rec.case_id = id;
    rec.kind = cfg.kind;
    BBox prd = suite.cases[id].prd0;
    try {
      for (int it = 0;; ++it) {
        const double l = loss(spec, gt, prd);
        const double v_iou = iou(gt, prd).value;
        if (!std::isfinite(l)) {
          rec.stop_reason = StopReason::kDiverged;
          rec.divergence = "DivergenceDetected: non-finite loss at iteration " + std::to_string(it);
          break;
        }
        rec.trajectory.push_back({it, l, v_iou, prd});
        if (v_iou >= cfg.stop_iou && !rec.iters_to_iou) rec.iters_to_iou = it;
        if (l <= cfg.stop_loss) {
          rec.stop_reason = StopReason::kLossThreshold;
          rec.iters_to_threshold = it;
          break;
        }
        if (v_iou >= cfg.stop_iou) {
          rec.stop_reason = StopReason::kIouThreshold;
          rec.iters_to_threshold = it;
          break;
        }
        if (it == cfg.max_iters) {
          rec.stop_reason = StopReason::kMaxIters;
          break;
        }

        LossGradient g;
        for (int attempt = 0;; ++attempt) {
          try {
            g = gradient(spec, gt, prd,
                         attempt < kMaxTieRetries ? TiePolicy::kReport : TiePolicy::kOneSided);
            break;
          } catch (const NonSmoothPointError& e) {
            auto c = prd.coords();
            const double sign = (tie_rng() & 1U) ? 1.0 : -1.0;
            c[static_cast<std::size_t>(e.coordinate())] += sign * kTiePerturbation;
            prd = canonicalize({c[0], c[1], c[2], c[3]});
            ++rec.tie_perturbations;
          }
        }
        if (g == LossGradient{}) {
          rec.stop_reason = StopReason::kStalled;
          break;
        }
        prd = canonicalize({prd.x1() - learning_rate * g.d_x1, prd.y1() - learning_rate * g.d_y1,
                            prd.x2() - learning_rate * g.d_x2, prd.y2() - learning_rate * g.d_y2});
      }
    } catch (const Error& e) {
      rec.stop_reason = StopReason::kDiverged;
      rec.divergence = std::string("DivergenceDetected: ") + e.what();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string records_to_csv(const std::vector<ConvergenceRecord>& records) {
  std::ostringstream os;
  os << "case_id,kind,iter,loss,iou,x1,y1,x2,y2\n";
  for (const ConvergenceRecord& rec : records) {
    for (const TrajectoryPoint& pt : rec.trajectory) {
      os << rec.case_id << ',' << to_string(rec.kind) << ',' << pt.iter << ',' << format_double(pt.loss)
         << ',' << format_double(pt.iou) << ',' << format_double(pt.box.x1()) << ','
         << format_double(pt.box.y1()) << ',' << format_double(pt.box.x2()) << ','
         << format_double(pt.box.y2()) << '\n';
    }
  }
  return os.str();
}

void export_records(const std::vector<ConvergenceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out << records_to_csv(records);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "failed writing " + path.string());
}

}  // namespace boxreg
