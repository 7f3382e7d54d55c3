// SPDX-License-Identifier: Apache-2.0
//
// Synthetic bounding-box regression: plain gradient descent applied directly
// to the predicted corner coordinates, one independent trajectory per case.
//
// Step size convention: RunConfig::step_size is dimensionless. The pixel
// learning rate is step_size * (w^2 + h^2), which makes the MPDIoU corner
// penalty contract by a factor (1 - 2 * step_size) per iteration regardless
// of image size. The default 5e-4 equals a learning rate of 10 px^2 on a
// 100x100 image.

#ifndef BOXREG_SIMULATOR_HPP_
#define BOXREG_SIMULATOR_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boxreg/geometry.hpp"
#include "boxreg/metrics.hpp"

namespace boxreg {

enum class ScenarioFamily { kOverlapping, kNonOverlapping, kContainedSameAspect, kRandom };

/// "overlapping", "nonoverlapping", "contained-same-aspect", "random".
std::string_view to_string(ScenarioFamily family);
std::optional<ScenarioFamily> parse_scenario_family(std::string_view name);

struct ScenarioCase {
  BBox gt;
  BBox prd0;
};

struct ScenarioSuite {
  ScenarioFamily family;
  ImageDims img;
  std::vector<ScenarioCase> cases;
};

/// Deterministic in seed. Boxes lie inside the image and gt areas are
/// positive. nonoverlapping cases have zero intersection with a strict gap;
/// contained-same-aspect cases are concentric with prd0 scaled by k in
/// (1, 4], alternating outer (even case ids) and inner (odd case ids).
/// Throws InvalidArgument when n_cases == 0.
ScenarioSuite generate_suite(ScenarioFamily family, std::size_t n_cases, const ImageDims& img,
                             std::uint64_t seed);

struct RunConfig {
  MetricKind kind = MetricKind::kMPDIoU;
  double step_size = 5e-4;
  int max_iters = 5000;
  double stop_loss = 0.01;
  double stop_iou = 0.9;
  /// Seeds the tie-breaking perturbation direction; trajectories are
  /// otherwise fully determined by the suite.
  std::uint64_t seed = 0;

  /// Throws InvalidArgument unless step_size > 0 and max_iters > 0.
  void validate() const;
};

enum class StopReason { kLossThreshold, kIouThreshold, kStalled, kMaxIters, kDiverged };
std::string_view to_string(StopReason reason);

struct TrajectoryPoint {
  int iter;
  double loss;
  double iou;
  BBox box;
};

struct ConvergenceRecord {
  std::size_t case_id = 0;
  MetricKind kind = MetricKind::kMPDIoU;
  std::vector<TrajectoryPoint> trajectory;  // iteration 0 is the initial box
  StopReason stop_reason = StopReason::kMaxIters;
  /// First iteration at which a stop threshold held; nullopt if never.
  std::optional<int> iters_to_threshold;
  /// First iteration with IoU >= stop_iou; nullopt if never.
  std::optional<int> iters_to_iou;
  /// Number of tie perturbations applied along the trajectory.
  int tie_perturbations = 0;
  /// Set when the loss became non-finite.
  std::optional<std::string> divergence;

  const TrajectoryPoint& final_point() const { return trajectory.back(); }
};

/// Runs every case in the suite. A non-finite loss ends that case with
/// StopReason::kDiverged and a message; remaining cases still run.
std::vector<ConvergenceRecord> run_regression(const ScenarioSuite& suite, const RunConfig& cfg);

/// Header: case_id,kind,iter,loss,iou,x1,y1,x2,y2. Numbers use the shortest
/// round-trip representation, so output is byte-stable. Throws IoFailure.
void export_records(const std::vector<ConvergenceRecord>& records, const std::filesystem::path& path);
std::string records_to_csv(const std::vector<ConvergenceRecord>& records);

}  // namespace boxreg

#endif  // BOXREG_SIMULATOR_HPP_
