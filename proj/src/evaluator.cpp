// SPDX-License-Identifier: Apache-2.0

#include "boxreg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "boxreg/error.hpp"
#include "boxreg/text.hpp"

namespace boxreg {

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& ptr) {
  if (!obj.is_object()) throw SchemaError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(ptr + "/" + key, "missing required field");
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& ptr) {
  const nlohmann::json& v = require(obj, key, ptr);
  if (!v.is_string()) throw SchemaError(ptr + "/" + key, "expected a string");
  return v.get<std::string>();
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& ptr) {
  const nlohmann::json& v = require(obj, key, ptr);
  if (!v.is_number()) throw SchemaError(ptr + "/" + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(ptr + "/" + key, "expected a finite number");
  return d;
}

const nlohmann::json& require_array(const nlohmann::json& obj, const char* key, const std::string& ptr) {
  const nlohmann::json& v = require(obj, key, ptr);
  if (!v.is_array()) throw SchemaError(ptr + "/" + key, "expected an array");
  return v;
}

BBox parse_box(const nlohmann::json& obj, const std::string& ptr) {
  const nlohmann::json& v = require(obj, "bbox", ptr);
  const std::string bptr = ptr + "/bbox";
  if (!v.is_array() || v.size() != 4) throw SchemaError(bptr, "expected [x1, y1, x2, y2]");
  double c[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) throw SchemaError(bptr + "/" + std::to_string(i), "expected a number");
    c[i] = v[i].get<double>();
  }
  try {
    return canonicalize({c[0], c[1], c[2], c[3]});
  } catch (const Error& e) {
    throw SchemaError(bptr, e.what());
  }
}

void check_threshold(double threshold, MetricKind kind) {
  if (kind == MetricKind::kIoU) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0, 1]");
    }
  } else if (kind == MetricKind::kMPDIoU) {
    if (!(std::isfinite(threshold) && threshold < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "MPDIoU threshold must be finite and < 1");
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "match metric must be iou or mpdiou, got " + std::string(to_string(kind)));
  }
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::vector<std::string> DetectionDataset::categories() const {
  std::set<std::string> cats;
  for (const ImageRecord& img : images) {
    for (const GroundTruth& g : img.gt) cats.insert(g.category);
  }
  for (const Detection& d : detections) cats.insert(d.category);
  return {cats.begin(), cats.end()};
}

DetectionDataset parse_dataset(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("", "root must be an object");
  DetectionDataset ds;

  const nlohmann::json& images = require_array(doc, "images", "");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ptr = "/images/" + std::to_string(i);
    const nlohmann::json& im = images[i];
    std::string id = require_string(im, "image_id", ptr);
    if (!ids.insert(id).second) throw SchemaError(ptr + "/image_id", "duplicate image_id '" + id + "'");
    const double w = require_number(im, "width", ptr);
    const double h = require_number(im, "height", ptr);
    if (!(w > 0.0 && h > 0.0)) throw SchemaError(ptr, "width and height must be positive");
    ImageRecord rec{id, ImageDims(w, h), {}};
    const nlohmann::json& gts = require_array(im, "ground_truth", ptr);
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const std::string gptr = ptr + "/ground_truth/" + std::to_string(j);
      BBox box = parse_box(gts[j], gptr);
      std::string cat = require_string(gts[j], "category", gptr);
      if (!(area(box) > 0.0)) {
        throw Error(ErrorCode::kDegenerateGroundTruth,
                    "image '" + id + "' ground_truth " + std::to_string(j) + " has zero area");
      }
      rec.gt.push_back({box, std::move(cat)});
    }
    ds.images.push_back(std::move(rec));
  }

  const nlohmann::json& dets = require_array(doc, "detections", "");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string ptr = "/detections/" + std::to_string(i);
    std::string id = require_string(dets[i], "image_id", ptr);
    if (!ids.count(id)) throw SchemaError(ptr + "/image_id", "unknown image_id '" + id + "'");
    BBox box = parse_box(dets[i], ptr);
    std::string cat = require_string(dets[i], "category", ptr);
    const double score = require_number(dets[i], "score", ptr);
    if (!(score >= 0.0 && score <= 1.0)) throw SchemaError(ptr + "/score", "score must lie in [0, 1]");
    ds.detections.push_back({std::move(id), box, std::move(cat), score});
  }

  std::sort(ds.images.begin(), ds.images.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  std::stable_sort(ds.detections.begin(), ds.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.image_id < b.image_id; });
  return ds;
}

DetectionDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read dataset " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_dataset(doc);
}

CategoryMatches match_detections(const DetectionDataset& ds, const std::string& category,
                                 double threshold, MetricKind kind) {
  check_threshold(threshold, kind);
  const std::vector<std::string> cats = ds.categories();
  if (!std::binary_search(cats.begin(), cats.end(), category)) {
    throw Error(ErrorCode::kUnknownCategory, "category '" + category + "' not present in dataset");
  }

  CategoryMatches out;
  auto det_it = ds.detections.begin();
  for (const ImageRecord& img : ds.images) {
    // Detections of this image: a contiguous run since both lists are
    // ordered by image_id.
    while (det_it != ds.detections.end() && det_it->image_id < img.image_id) ++det_it;
    auto det_end = det_it;
    while (det_end != ds.detections.end() && det_end->image_id == img.image_id) ++det_end;
    const std::size_t n_det = static_cast<std::size_t>(det_end - det_it);

    std::vector<std::size_t> by_score(n_det);
    std::iota(by_score.begin(), by_score.end(), std::size_t{0});
    std::stable_sort(by_score.begin(), by_score.end(), [&](std::size_t a, std::size_t b) {
      return det_it[static_cast<std::ptrdiff_t>(a)].score > det_it[static_cast<std::ptrdiff_t>(b)].score;
    });
    if (by_score.size() > kMaxDetectionsPerImage) by_score.resize(kMaxDetectionsPerImage);

    std::vector<const BBox*> gts;
    for (const GroundTruth& g : img.gt) {
      if (g.category == category) gts.push_back(&g.box);
    }
    out.n_gt += gts.size();
    std::vector<bool> gt_taken(gts.size(), false);

    std::vector<std::optional<bool>> is_tp(n_det);  // set for kept detections of this category
    for (std::size_t idx : by_score) {
      const Detection& d = det_it[static_cast<std::ptrdiff_t>(idx)];
      if (d.category != category) continue;
      std::optional<std::size_t> best;
      double best_value = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_taken[g]) continue;
        const double v = kind == MetricKind::kIoU ? iou(*gts[g], d.box).value
                                                  : mpdiou(*gts[g], d.box, img.dims).value;
        if (v >= threshold && (!best || v > best_value)) {
          best = g;
          best_value = v;
        }
      }
      if (best) {
        gt_taken[*best] = true;
        ++out.true_positives;
      }
      is_tp[idx] = best.has_value();
    }
    for (std::size_t i = 0; i < n_det; ++i) {
      if (is_tp[i]) out.detections.push_back({det_it[static_cast<std::ptrdiff_t>(i)].score, *is_tp[i]});
    }
    det_it = det_end;
  }
  out.missed_gt = out.n_gt - out.true_positives;
  return out;
}

std::optional<double> average_precision(std::span<const RankedMatch> matches, std::size_t n_gt) {
  if (n_gt == 0) {
    if (matches.empty()) return std::nullopt;
    return 0.0;
  }
  std::vector<RankedMatch> ranked(matches.begin(), matches.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedMatch& a, const RankedMatch& b) { return a.score > b.score; });

  const std::size_t n = ranked.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i].true_positive) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: best precision at any recall at least this large.
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

EvalSummary summarize(const DetectionDataset& ds, MetricKind kind) {
  EvalSummary s;
  s.kind = kind;
  s.thresholds = coco_thresholds();
  const std::size_t nt = s.thresholds.size();

  std::vector<std::optional<double>> all_recalls;
  for (const std::string& cat : ds.categories()) {
    CategorySummary cs;
    for (double t : s.thresholds) {
      const CategoryMatches m = match_detections(ds, cat, t, kind);
      cs.n_gt = m.n_gt;
      cs.ap.push_back(average_precision(m.detections, m.n_gt));
      cs.true_positives.push_back(m.true_positives);
      if (m.n_gt > 0) {
        cs.recall.push_back(static_cast<double>(m.true_positives) / static_cast<double>(m.n_gt));
      } else {
        cs.recall.push_back(std::nullopt);
      }
      all_recalls.push_back(cs.recall.back());
    }
    s.per_category.emplace(cat, std::move(cs));
  }

  for (std::size_t ti = 0; ti < nt; ++ti) {
    std::vector<std::optional<double>> aps;
    for (const auto& [cat, cs] : s.per_category) aps.push_back(cs.ap[ti]);
    s.mean_ap.push_back(mean_of(aps));
  }
  s.map = mean_of(s.mean_ap);
  s.ap50 = s.mean_ap[0];
  s.ap75 = s.mean_ap[5];
  s.ar100 = mean_of(all_recalls);
  return s;
}

nlohmann::json to_json(const EvalSummary& s) {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, cs] : s.per_category) {
    nlohmann::json ap = nlohmann::json::array();
    nlohmann::json rc = nlohmann::json::array();
    for (const auto& v : cs.ap) ap.push_back(opt_json(v));
    for (const auto& v : cs.recall) rc.push_back(opt_json(v));
    cats[name] = {{"n_gt", cs.n_gt}, {"ap", ap}, {"recall", rc}, {"true_positives", cs.true_positives}};
  }
  nlohmann::json mean_ap = nlohmann::json::array();
  for (const auto& v : s.mean_ap) mean_ap.push_back(opt_json(v));
  return {{"match_metric", to_string(s.kind)},
          {"thresholds", s.thresholds},
          {"mAP", opt_json(s.map)},
          {"AP50", opt_json(s.ap50)},
          {"AP75", opt_json(s.ap75)},
          {"AR100", opt_json(s.ar100)},
          {"mean_ap_per_threshold", mean_ap},
          {"per_category", cats}};
}

std::string to_csv(const EvalSummary& s) {
  std::ostringstream os;
  os << "match_metric,category,threshold,ap,recall,true_positives\n";
  for (const auto& [name, cs] : s.per_category) {
    for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
      os << to_string(s.kind) << ',' << name << ',' << format_double(s.thresholds[i]) << ','
         << opt_csv(cs.ap[i]) << ',' << opt_csv(cs.recall[i]) << ',' << cs.true_positives[i] << '\n';
    }
  }
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    std::vector<std::optional<double>> recalls;
    std::size_t tp = 0;
    for (const auto& [name, cs] : s.per_category) {
      recalls.push_back(cs.recall[i]);
      tp += cs.true_positives[i];
    }
    os << to_string(s.kind) << ",all," << format_double(s.thresholds[i]) << ',' << opt_csv(s.mean_ap[i])
       << ',' << opt_csv(mean_of(recalls)) << ',' << tp << '\n';
  }
  os << to_string(s.kind) << ",all,0.50:0.95," << opt_csv(s.map) << ',' << opt_csv(s.ar100) << ",\n";
  return os.str();
}

}  // namespace boxreg
