// SPDX-License-Identifier: Apache-2.0

#include "boxreg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "boxreg/error.hpp"
#include "boxreg/evaluator.hpp"
#include "boxreg/geometry.hpp"
#include "boxreg/losses.hpp"
#include "boxreg/metrics.hpp"
#include "boxreg/simulator.hpp"
#include "boxreg/theorem_checks.hpp"

namespace boxreg {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a finite number");
    }
    values.push_back(v);
  }
  if (values.size() != expected) {
    throw UsageError(std::string(flag) + " expects " + std::to_string(expected) +
                     " comma-separated numbers, got '" + text + "'");
  }
  return values;
}

BBox parse_box_flag(const std::string& text, const char* flag) {
  const auto v = parse_numbers(text, 4, flag);
  try {
    return canonicalize({v[0], v[1], v[2], v[3]});
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::optional<ImageDims> parse_img_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto v = parse_numbers(text, 2, "--img");
  try {
    return ImageDims(v[0], v[1]);
  } catch (const Error& e) {
    throw UsageError(std::string("--img: ") + e.what());
  }
}

MetricKind parse_kind_flag(const std::string& text) {
  const auto kind = parse_metric_kind(text);
  if (!kind) throw UsageError("--kind: unknown metric '" + text + "'");
  return *kind;
}

// Validates --img presence against the kind.
LossSpec make_spec(MetricKind kind, const std::string& img_text) {
  std::optional<ImageDims> img = parse_img_flag(img_text);
  if (requires_image(kind) && !img) throw UsageError("--img w,h is required for --kind mpdiou");
  if (!requires_image(kind) && img) {
    throw UsageError("--img is only accepted with --kind mpdiou");
  }
  return LossSpec(kind, img);
}

nlohmann::json terms_json(const MetricTerms& terms) {
  nlohmann::json j = nlohmann::json::object();
  terms.for_each([&](std::string_view name, double v) { j[std::string(name)] = v; });
  return j;
}

nlohmann::json gradient_json(const LossGradient& g) {
  return {{"d_x1", g.d_x1}, {"d_y1", g.d_y1}, {"d_x2", g.d_x2}, {"d_y2", g.d_y2}};
}

// ---- simulate -------------------------------------------------------------

template <typename T>
T config_value(const nlohmann::json& obj, const char* key, const std::string& ptr, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if constexpr (std::is_same_v<T, double>) {
    if (!it->is_number()) throw SchemaError(ptr + "/" + key, "expected a number");
  } else {
    if (!it->is_number_integer()) throw SchemaError(ptr + "/" + key, "expected an integer");
  }
  return it->get<T>();
}

struct FamilySpec {
  ScenarioFamily family;
  std::size_t n_cases;
  std::uint64_t seed;
};

nlohmann::json kind_stats(const std::vector<ConvergenceRecord>& records) {
  std::vector<int> iters;
  double final_iou = 0.0;
  double final_loss = 0.0;
  std::size_t diverged = 0;
  std::size_t stalled = 0;
  std::size_t tie_perturbations = 0;
  for (const ConvergenceRecord& r : records) {
    if (r.iters_to_iou) iters.push_back(*r.iters_to_iou);
    if (r.stop_reason == StopReason::kDiverged) ++diverged;
    if (r.stop_reason == StopReason::kStalled) ++stalled;
    tie_perturbations += static_cast<std::size_t>(r.tie_perturbations);
    if (!r.trajectory.empty()) {
      final_iou += r.final_point().iou;
      final_loss += r.final_point().loss;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(records.size(), 1));
  nlohmann::json j = {{"cases", records.size()},
                      {"reached_iou_threshold", iters.size()},
                      {"diverged", diverged},
                      {"stalled", stalled},
                      {"tie_perturbations", tie_perturbations},
                      {"mean_final_iou", final_iou / n},
                      {"mean_final_loss", final_loss / n}};
  if (iters.empty()) {
    j["mean_iters_to_iou"] = nullptr;
    j["median_iters_to_iou"] = nullptr;
    j["max_iters_to_iou"] = nullptr;
  } else {
    std::sort(iters.begin(), iters.end());
    double sum = 0.0;
    for (int v : iters) sum += v;
    j["mean_iters_to_iou"] = sum / static_cast<double>(iters.size());
    const std::size_t m = iters.size();
    j["median_iters_to_iou"] = m % 2 ? double(iters[m / 2]) : (iters[m / 2 - 1] + iters[m / 2]) / 2.0;
    j["max_iters_to_iou"] = iters.back();
  }
  return j;
}

}  // namespace

nlohmann::json run_simulation_config(const nlohmann::json& config, const std::string& out_dir) {
  if (!config.is_object()) throw SchemaError("", "config must be an object");

  ImageDims img(100.0, 100.0);
  if (auto it = config.find("image"); it != config.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw SchemaError("/image", "expected [width, height]");
    }
    try {
      img = ImageDims((*it)[0].get<double>(), (*it)[1].get<double>());
    } catch (const Error& e) {
      throw SchemaError("/image", e.what());
    }
  }

  auto fams = config.find("families");
  if (fams == config.end() || !fams->is_array() || fams->empty()) {
    throw SchemaError("/families", "expected a non-empty array");
  }
  std::vector<FamilySpec> families;
  for (std::size_t i = 0; i < fams->size(); ++i) {
    const std::string ptr = "/families/" + std::to_string(i);
    const nlohmann::json& f = (*fams)[i];
    if (!f.is_object()) throw SchemaError(ptr, "expected an object");
    auto name = f.find("family");
    if (name == f.end() || !name->is_string()) throw SchemaError(ptr + "/family", "expected a string");
    const auto family = parse_scenario_family(name->get<std::string>());
    if (!family) {
      throw SchemaError(ptr + "/family", "unknown family '" + name->get<std::string>() + "'");
    }
    const auto n_cases = config_value<std::int64_t>(f, "n_cases", ptr, 10);
    if (n_cases <= 0) throw SchemaError(ptr + "/n_cases", "must be positive");
    const auto seed = config_value<std::int64_t>(f, "seed", ptr, 0);
    families.push_back({*family, static_cast<std::size_t>(n_cases), static_cast<std::uint64_t>(seed)});
  }

  auto runs = config.find("runs");
  if (runs == config.end() || !runs->is_array() || runs->empty()) {
    throw SchemaError("/runs", "expected a non-empty array");
  }
  std::vector<RunConfig> cfgs;
  for (std::size_t i = 0; i < runs->size(); ++i) {
    const std::string ptr = "/runs/" + std::to_string(i);
    const nlohmann::json& r = (*runs)[i];
    if (!r.is_object()) throw SchemaError(ptr, "expected an object");
    auto kind_it = r.find("kind");
    if (kind_it == r.end() || !kind_it->is_string()) throw SchemaError(ptr + "/kind", "expected a string");
    const auto kind = parse_metric_kind(kind_it->get<std::string>());
    if (!kind) throw SchemaError(ptr + "/kind", "unknown kind '" + kind_it->get<std::string>() + "'");
    RunConfig cfg;
    cfg.kind = *kind;
    cfg.step_size = config_value<double>(r, "step_size", ptr, cfg.step_size);
    const auto max_iters = config_value<std::int64_t>(r, "max_iters", ptr, cfg.max_iters);
    if (max_iters <= 0 || max_iters > 10'000'000) throw SchemaError(ptr + "/max_iters", "out of range");
    cfg.max_iters = static_cast<int>(max_iters);
    cfg.stop_loss = config_value<double>(r, "stop_loss", ptr, cfg.stop_loss);
    cfg.stop_iou = config_value<double>(r, "stop_iou", ptr, cfg.stop_iou);
    cfg.seed = static_cast<std::uint64_t>(config_value<std::int64_t>(r, "seed", ptr, 0));
    try {
      cfg.validate();
    } catch (const Error& e) {
      throw SchemaError(ptr, e.what());
    }
    cfgs.push_back(cfg);
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir + ": " + ec.message());

  nlohmann::json summary = {
      {"protocol",
       "plain gradient descent on predicted corner coordinates; synthetic, implementer-defined "
       "comparison, not detector training"},
      {"image", {img.width(), img.height()}},
      {"families", nlohmann::json::object()}};

  for (const FamilySpec& fs : families) {
    const ScenarioSuite suite = generate_suite(fs.family, fs.n_cases, img, fs.seed);
    const std::string fam_name(to_string(fs.family));
    nlohmann::json fam = {{"n_cases", fs.n_cases}, {"seed", fs.seed}, {"kinds", nlohmann::json::object()}};

    // Rank key: more cases reaching the IoU threshold first, then fewer mean iterations.
    std::vector<std::tuple<std::size_t, double, std::string>> ranking;
    for (const RunConfig& cfg : cfgs) {
      const auto records = run_regression(suite, cfg);
      const std::string kind_name(to_string(cfg.kind));
      const std::string file = fam_name + "__" + kind_name + ".csv";
      export_records(records, std::filesystem::path(out_dir) / file);
      nlohmann::json stats = kind_stats(records);
      stats["csv"] = file;
      stats["step_size"] = cfg.step_size;
      stats["max_iters"] = cfg.max_iters;
      stats["stop_loss"] = cfg.stop_loss;
      stats["stop_iou"] = cfg.stop_iou;
      const std::size_t reached = stats["reached_iou_threshold"].get<std::size_t>();
      const double mean = stats["mean_iters_to_iou"].is_null() ? INFINITY : stats["mean_iters_to_iou"].get<double>();
      ranking.emplace_back(reached, mean, kind_name);
      fam["kinds"][kind_name] = stats;
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::get<1>(a) < std::get<1>(b);
    });
    nlohmann::json order = nlohmann::json::array();
    for (const auto& r : ranking) order.push_back(std::get<2>(r));
    fam["ranking_by_iters_to_iou"] = order;

    auto mpd = std::find_if(ranking.begin(), ranking.end(),
                            [](const auto& r) { return std::get<2>(r) == "mpdiou"; });
    if (mpd == ranking.end() || ranking.size() < 2) {
      fam["mpdiou_fastest_or_tied"] = nullptr;
    } else {
      const bool best = std::get<0>(*mpd) == std::get<0>(ranking.front()) &&
                        std::get<1>(*mpd) <= std::get<1>(ranking.front());
      fam["mpdiou_fastest_or_tied"] = best;
      if (!best) {
        fam["note"] = "mpdiou did not rank fastest on this family; leader is " + std::get<2>(ranking.front());
      }
    }
    summary["families"][fam_name] = fam;
  }

  const std::filesystem::path summary_path = std::filesystem::path(out_dir) / "summary.json";
  std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + summary_path.string());
  out << summary.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoFailure, "failed writing " + summary_path.string());
  return summary;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"boxreg: IoU-family metrics, MPDIoU loss, gradients, simulation and evaluation"};
  app.require_subcommand(1);

  std::string kind_text, gt_text, prd_text, img_text;
  auto add_box_flags = [&](CLI::App* sub) {
    sub->add_option("--kind", kind_text, "iou|giou|diou|ciou|eiou|mpdiou")->required();
    sub->add_option("--gt", gt_text, "ground truth x1,y1,x2,y2")->required();
    sub->add_option("--prd", prd_text, "prediction x1,y1,x2,y2")->required();
    sub->add_option("--img", img_text, "image w,h (required iff --kind mpdiou)");
  };

  CLI::App* metric_cmd = app.add_subcommand("metric", "Compute one similarity metric");
  add_box_flags(metric_cmd);
  CLI::App* loss_cmd = app.add_subcommand("loss", "Compute 1 - metric");
  add_box_flags(loss_cmd);
  CLI::App* grad_cmd = app.add_subcommand("grad", "Analytic loss gradient w.r.t. the prediction");
  add_box_flags(grad_cmd);
  double fd_step = 0.0;
  bool one_sided = false;
  grad_cmd->add_option("--fd-step", fd_step, "also report central differences with this step")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_flag("--one-sided", one_sided, "resolve ties toward the prediction instead of failing");

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run gradient-descent regression scenarios");
  std::string config_path, out_dir;
  sim_cmd->add_option("--config", config_path, "simulation config JSON")->required();
  sim_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "COCO-style AP/AR over a detection dataset");
  std::string data_path, match_metric = "iou", csv_path;
  eval_cmd->add_option("--data", data_path, "dataset JSON")->required();
  eval_cmd->add_option("--metric", match_metric, "iou|mpdiou")
      ->check(CLI::IsMember({"iou", "mpdiou"}));
  eval_cmd->add_option("--csv", csv_path, "also write the summary as CSV");

  CLI::App* verify_cmd = app.add_subcommand("verify", "Run property verification suites");
  std::string suite_name;
  std::optional<std::int64_t> samples;
  std::uint64_t seed = 42;
  std::string bounds_img = "640,480";
  double tol = 1e-9;
  verify_cmd->add_option("--suite", suite_name, "theorem|bounds")
      ->required()
      ->check(CLI::IsMember({"theorem", "bounds"}));
  verify_cmd->add_option("--samples", samples, "random instances (theorem: 1000, bounds: 100000)");
  verify_cmd->add_option("--seed", seed, "RNG seed");
  verify_cmd->add_option("--img", bounds_img, "image w,h for the bounds suite");
  verify_cmd->add_option("--tol", tol, "tolerance for pairwise equalities")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*metric_cmd || *loss_cmd || *grad_cmd) {
      const MetricKind kind = parse_kind_flag(kind_text);
      const BBox gt = parse_box_flag(gt_text, "--gt");
      const BBox prd = parse_box_flag(prd_text, "--prd");
      const LossSpec spec = make_spec(kind, img_text);
      nlohmann::json j = {{"kind", to_string(kind)}};
      if (*metric_cmd) {
        const MetricResult r = evaluate(kind, gt, prd, spec.img());
        j["value"] = r.value;
        j["terms"] = terms_json(r.terms);
      } else if (*loss_cmd) {
        j["loss"] = loss(spec, gt, prd);
      } else {
        j["loss"] = loss(spec, gt, prd);
        j["tie_policy"] = one_sided ? "one_sided" : "report";
        j["gradient"] = gradient_json(
            gradient(spec, gt, prd, one_sided ? TiePolicy::kOneSided : TiePolicy::kReport));
        if (fd_step > 0.0) {
          j["fd_step"] = fd_step;
          j["fd_gradient"] = gradient_json(fd_gradient(spec, gt, prd, fd_step));
        }
      }
      out << j.dump() << '\n';
      return kExitOk;
    }

    if (*sim_cmd) {
      std::ifstream in(config_path);
      if (!in) {
        err << "error: cannot read config " << config_path << '\n';
        return kExitFailure;
      }
      nlohmann::json config;
      try {
        config = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
      }
      out << run_simulation_config(config, out_dir).dump() << '\n';
      return kExitOk;
    }

    if (*eval_cmd) {
      const DetectionDataset ds = load_dataset(data_path);
      const EvalSummary s = summarize(ds, *parse_metric_kind(match_metric));
      if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw Error(ErrorCode::kIoFailure, "cannot write " + csv_path);
        csv << to_csv(s);
      }
      out << to_json(s).dump() << '\n';
      return kExitOk;
    }

    if (*verify_cmd) {
      if (samples && *samples <= 0) throw UsageError("--samples must be positive");
      VerificationReport report;
      nlohmann::json extra;
      if (suite_name == "theorem") {
        report = run_theorem_suite(static_cast<std::size_t>(samples.value_or(1000)), seed, tol);
        const TheoremInstance ref_inst = reference_instance();
        const LossSpec mpd(MetricKind::kMPDIoU, ref_inst.img);
        extra = {{"instance", to_json(ref_inst)},
                 {"losses_outer",
                  {{"giou", 1.0 - giou(ref_inst.gt, ref_inst.prd_outer).value},
                   {"diou", 1.0 - diou(ref_inst.gt, ref_inst.prd_outer).value},
                   {"ciou", 1.0 - ciou(ref_inst.gt, ref_inst.prd_outer).value},
                   {"eiou", 1.0 - eiou(ref_inst.gt, ref_inst.prd_outer).value},
                   {"mpdiou", loss(mpd, ref_inst.gt, ref_inst.prd_outer)}}},
                 {"losses_inner", {{"mpdiou", loss(mpd, ref_inst.gt, ref_inst.prd_inner)}}}};
        VerificationReport ref_eq = verify_equalities(ref_inst, tol);
        VerificationReport ref_disc = verify_discrimination(ref_inst);
        report.merge(ref_eq, [&] { return to_json(ref_inst); });
        report.merge(ref_disc, [&] { return to_json(ref_inst); });
      } else {
        const auto dims = parse_numbers(bounds_img, 2, "--img");
        report = verify_bounds(static_cast<std::size_t>(samples.value_or(100000)),
                               ImageDims(dims[0], dims[1]), seed);
      }
      nlohmann::json j = to_json(report);
      j["seed"] = seed;
      if (!extra.is_null()) j["reference_instance"] = extra;
      out << j.dump() << '\n';
      if (!report.passed()) {
        err << "verification failed; first counterexample: " << report.counterexample.dump() << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace boxreg
