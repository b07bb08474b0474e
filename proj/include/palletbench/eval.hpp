#pragma once

// COCO-style evaluation: greedy score-ordered matching, 101-point
// interpolated AP and mAP, grouped by class and/or pallet arrangement.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "palletbench/coco.hpp"
#include "palletbench/geometry.hpp"

namespace palletbench {

enum class IouMode { kMask, kBbox };
enum class Grouping { kByClass, kByArrangement, kByClassAndArrangement };

constexpr std::string_view to_string(IouMode m) { return m == IouMode::kMask ? "mask" : "bbox"; }

constexpr std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::kByClass: return "by_class";
    case Grouping::kByArrangement: return "by_arrangement";
    case Grouping::kByClassAndArrangement: return "by_class_and_arrangement";
  }
  return "by_class";
}

inline IouMode parse_iou_mode(std::string_view s) {
  if (s == "mask") return IouMode::kMask;
  if (s == "bbox") return IouMode::kBbox;
  throw Error(ErrorCode::kInvalidValue, "unknown IoU mode '" + std::string(s) + "'");
}

inline Grouping parse_grouping(std::string_view s) {
  for (auto g : {Grouping::kByClass, Grouping::kByArrangement, Grouping::kByClassAndArrangement}) {
    if (to_string(g) == s) return g;
  }
  throw Error(ErrorCode::kInvalidValue, "unknown grouping '" + std::string(s) + "'");
}

struct EvalConfig {
  std::vector<double> iou_thresholds{0.5};
  IouMode mode = IouMode::kMask;
  Grouping grouping = Grouping::kByClass;
  int max_detections_per_image = 100;
};

inline void validate_eval_config(const EvalConfig& cfg) {
  if (cfg.iou_thresholds.empty()) throw Error(ErrorCode::kInvalidConfig, "no IoU thresholds");
  for (std::size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
    const double t = cfg.iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "IoU threshold outside (0,1]");
    if (i > 0 && !(t > cfg.iou_thresholds[i - 1])) {
      throw Error(ErrorCode::kInvalidConfig, "IoU thresholds must be strictly increasing");
    }
  }
  if (cfg.max_detections_per_image < 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_detections_per_image must be >= 0");
  }
}

// ---------------------------------------------------------------------------
// matching

/// Outcome of one detection at one threshold.
struct DetectionOutcome {
  std::size_t detection = 0;  // index into the detection list given to the matcher
  double score = 0.0;
  bool true_positive = false;
  int matched_gt = -1;
};

struct MatchResult {
  std::vector<DetectionOutcome> outcomes;  // in matching order
  std::size_t gt_count = 0;
};

/// Detection indices by descending score, ties by ascending index, truncated
/// to `max_detections`.
inline std::vector<std::size_t> detection_order(std::span<const double> scores, int max_detections) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (max_detections >= 0 && order.size() > static_cast<std::size_t>(max_detections)) {
    order.resize(static_cast<std::size_t>(max_detections));
  }
  return order;
}

/// ious[d][g] for detection d and ground truth g.
inline std::vector<std::vector<double>> iou_matrix(std::span<const Annotation> gt,
                                                   std::span<const PredictedInstance> det,
                                                   IouMode mode, int width, int height) {
  std::vector<std::vector<double>> out(det.size(), std::vector<double>(gt.size(), 0.0));
  if (gt.empty() || det.empty()) return out;
  if (mode == IouMode::kBbox) {
    for (std::size_t d = 0; d < det.size(); ++d) {
      const BBox db = det[d].bbox.value_or(segmentation_bbox(det[d].segmentation));
      for (std::size_t g = 0; g < gt.size(); ++g) out[d][g] = bbox_iou(db, gt[g].bbox);
    }
    return out;
  }
  std::vector<BitMask> gm;
  gm.reserve(gt.size());
  for (const auto& g : gt) gm.push_back(to_mask(g.segmentation, width, height));
  for (std::size_t d = 0; d < det.size(); ++d) {
    const BitMask dm = to_mask(det[d].segmentation, width, height);
    for (std::size_t g = 0; g < gt.size(); ++g) out[d][g] = mask_iou(dm, gm[g]);
  }
  return out;
}

/// Greedy matching over a precomputed IoU matrix. Each detection, in `order`,
/// takes the unmatched ground truth with the highest IoU among those at or
/// above `threshold` (first index on ties); without one it is a false
/// positive and consumes nothing.
inline MatchResult greedy_match(const std::vector<std::vector<double>>& ious,
                                std::span<const double> scores, std::span<const std::size_t> order,
                                std::size_t gt_count, double threshold) {
  MatchResult result;
  result.gt_count = gt_count;
  std::vector<bool> taken(gt_count, false);
  for (std::size_t d : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt_count; ++g) {
      if (taken[g]) continue;
      const double iou = ious[d][g];
      if (iou >= threshold && iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
    result.outcomes.push_back({d, scores[d], best >= 0, best});
  }
  return result;
}

/// All records must belong to one image and one category.
inline MatchResult match_instances(std::span<const Annotation> gt,
                                   std::span<const PredictedInstance> det, double threshold,
                                   IouMode mode, int width, int height,
                                   int max_detections = 100) {
  std::vector<double> scores;
  scores.reserve(det.size());
  for (const auto& d : det) scores.push_back(d.score);
  const auto order = detection_order(scores, max_detections);
  const auto ious = iou_matrix(gt, det, mode, width, height);
  return greedy_match(ious, scores, order, gt.size(), threshold);
}

// ---------------------------------------------------------------------------
// average precision

inline constexpr int kRecallPoints = 101;

/// A detection as seen by the AP accumulator; `order` breaks score ties.
struct RankedDetection {
  double score = 0.0;
  bool true_positive = false;
  std::size_t order = 0;
};

struct ApResult {
  double ap = 0.0;
  std::array<double, kRecallPoints> precision{};  // interpolated, at recall i/100
};

/// Precision is interpolated as the maximum precision at any recall >= r and
/// averaged over r = 0.00, 0.01, ..., 1.00. Recall comparisons are exact
/// integer arithmetic.
inline ApResult average_precision_curve(std::vector<RankedDetection> dets, std::size_t gt_count) {
  if (gt_count == 0) throw Error(ErrorCode::kGroupEmpty, "group has no ground truth");
  std::sort(dets.begin(), dets.end(), [](const RankedDetection& a, const RankedDetection& b) {
    return a.score != b.score ? a.score > b.score : a.order < b.order;
  });
  std::vector<double> precision;
  std::vector<std::size_t> tps;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    if (dets[k].true_positive) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    tps.push_back(tp);
  }
  // running max from the tail makes precision monotone in rank
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  ApResult out;
  std::size_t k = 0;
  double sum = 0.0;
  for (int i = 0; i < kRecallPoints; ++i) {
    // first rank whose recall tp/G reaches i/100
    while (k < tps.size() && tps[k] * 100 < static_cast<std::size_t>(i) * gt_count) ++k;
    out.precision[static_cast<std::size_t>(i)] = k < tps.size() ? precision[k] : 0.0;
    sum += out.precision[static_cast<std::size_t>(i)];
  }
  out.ap = sum / kRecallPoints;
  return out;
}

inline double average_precision(std::vector<RankedDetection> dets, std::size_t gt_count) {
  return average_precision_curve(std::move(dets), gt_count).ap;
}

// ---------------------------------------------------------------------------
// evaluation

struct GroupResult {
  std::string group;
  double threshold = 0.5;
  double ap = 0.0;
  std::size_t gt_count = 0;
  std::size_t detections = 0;
  std::size_t true_positives = 0;
  std::array<double, kRecallPoints> precision{};
};

struct EvalReport {
  EvalConfig config;
  std::vector<GroupResult> groups;             // ordered by threshold, then group name
  std::vector<std::pair<double, double>> map;  // (threshold, mAP)
  std::optional<double> map50;

  const GroupResult* find(std::string_view group, double threshold) const {
    for (const auto& g : groups) {
      if (g.group == group && std::abs(g.threshold - threshold) < 1e-12) return &g;
    }
    return nullptr;
  }
};

inline constexpr std::string_view kFalsePositiveRule =
    "unmatched predictions are charged to every arrangement group of their category";

inline std::string group_name(Grouping g, std::string_view category, Arrangement a) {
  switch (g) {
    case Grouping::kByClass: return std::string(category);
    case Grouping::kByArrangement: return std::string(to_string(a));
    case Grouping::kByClassAndArrangement:
      return std::string(category) + "/" + std::string(to_string(a));
  }
  return std::string(category);
}

/// Matching runs per (image, category) over all ground truth of that
/// category. True positives count toward the group of the ground truth they
/// matched. False positives count toward every group that holds ground truth
/// of their category. Groups without ground truth are left out of the report
/// and of every mean.
inline EvalReport evaluate(const Dataset& d, const PredictionSet& p, const EvalConfig& cfg = {}) {
  validate_eval_config(cfg);

  std::unordered_map<std::int64_t, const ImageRecord*> images;
  for (const auto& r : d.images) images.emplace(r.id, &r);
  std::unordered_map<std::int64_t, std::string> category_names;
  for (const auto& c : d.categories) category_names.emplace(c.id, c.name);

  using Key = std::pair<std::int64_t, std::int64_t>;  // (image, category)
  std::map<Key, std::vector<Annotation>> gt_by_key;
  for (const auto& a : d.annotations) {
    if (!images.contains(a.image_id) || !category_names.contains(a.category_id)) {
      throw Error(ErrorCode::kUnknownReference,
                  "annotation " + std::to_string(a.id) + " has unresolved references");
    }
    gt_by_key[{a.image_id, a.category_id}].push_back(a);
  }
  std::map<Key, std::vector<PredictedInstance>> det_by_key;
  std::map<Key, std::vector<std::size_t>> det_order_by_key;  // global insertion index
  for (std::size_t i = 0; i < p.instances.size(); ++i) {
    const auto& inst = p.instances[i];
    if (!images.contains(inst.image_id) || !category_names.contains(inst.category_id)) {
      throw Error(ErrorCode::kUnknownReference, "prediction does not resolve against the dataset");
    }
    det_by_key[{inst.image_id, inst.category_id}].push_back(inst);
    det_order_by_key[{inst.image_id, inst.category_id}].push_back(i);
  }

  std::map<std::string, std::size_t> gt_count;
  std::unordered_map<std::int64_t, std::set<std::string>> groups_of_category;
  for (const auto& a : d.annotations) {
    const auto name = group_name(cfg.grouping, category_names[a.category_id], a.arrangement);
    ++gt_count[name];
    groups_of_category[a.category_id].insert(name);
  }

  std::set<Key> keys;
  for (const auto& [k, _] : gt_by_key) keys.insert(k);
  for (const auto& [k, _] : det_by_key) keys.insert(k);

  // IoUs do not depend on the threshold
  struct Slice {
    std::vector<std::vector<double>> ious;
    std::vector<double> scores;
    std::vector<std::size_t> order;
  };
  std::map<Key, Slice> slices;
  static const std::vector<Annotation> kNoGt;
  static const std::vector<PredictedInstance> kNoDet;
  for (const auto& key : keys) {
    auto git = gt_by_key.find(key);
    auto dit = det_by_key.find(key);
    const auto& gts = git == gt_by_key.end() ? kNoGt : git->second;
    const auto& dets = dit == det_by_key.end() ? kNoDet : dit->second;
    const auto* img = images.at(key.first);
    Slice s;
    for (const auto& det : dets) s.scores.push_back(det.score);
    s.order = detection_order(s.scores, cfg.max_detections_per_image);
    s.ious = iou_matrix(gts, dets, cfg.mode, img->width, img->height);
    slices.emplace(key, std::move(s));
  }

  EvalReport report;
  report.config = cfg;
  for (double t : cfg.iou_thresholds) {
    std::map<std::string, std::vector<RankedDetection>> ranked;
    for (const auto& [key, slice] : slices) {
      auto git = gt_by_key.find(key);
      const auto& gts = git == gt_by_key.end() ? kNoGt : git->second;
      const auto result = greedy_match(slice.ious, slice.scores, slice.order, gts.size(), t);
      const auto& global = det_order_by_key[key];
      for (const auto& o : result.outcomes) {
        const std::size_t order = global.empty() ? 0 : global[o.detection];
        if (o.true_positive) {
          const auto& g = gts[static_cast<std::size_t>(o.matched_gt)];
          ranked[group_name(cfg.grouping, category_names[g.category_id], g.arrangement)].push_back(
              {o.score, true, order});
        } else {
          for (const auto& name : groups_of_category[key.second]) {
            ranked[name].push_back({o.score, false, order});
          }
        }
      }
    }
    double sum = 0.0;
    for (const auto& [name, count] : gt_count) {
      auto& dets = ranked[name];
      GroupResult gr;
      gr.group = name;
      gr.threshold = t;
      gr.gt_count = count;
      gr.detections = dets.size();
      gr.true_positives = static_cast<std::size_t>(
          std::count_if(dets.begin(), dets.end(), [](const auto& r) { return r.true_positive; }));
      const auto curve = average_precision_curve(dets, count);
      gr.ap = curve.ap;
      gr.precision = curve.precision;
      sum += gr.ap;
      report.groups.push_back(std::move(gr));
    }
    const double m = gt_count.empty() ? 0.0 : sum / static_cast<double>(gt_count.size());
    report.map.emplace_back(t, m);
    if (std::abs(t - 0.5) < 1e-12) report.map50 = m;
  }
  return report;
}

inline Json report_to_json(const EvalReport& r) {
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    Json pr = Json::array();
    for (double v : g.precision) pr.push_back(quantize(v));
    groups.push_back({{"group", g.group},
                      {"threshold", quantize(g.threshold)},
                      {"ap", quantize(g.ap)},
                      {"gt_count", g.gt_count},
                      {"detections", g.detections},
                      {"true_positives", g.true_positives},
                      {"precision_at_recall", std::move(pr)}});
  }
  Json maps = Json::array();
  for (const auto& [t, m] : r.map) maps.push_back({{"threshold", quantize(t)}, {"map", quantize(m)}});
  Json doc = {{"mode", to_string(r.config.mode)},
              {"grouping", to_string(r.config.grouping)},
              {"max_detections_per_image", r.config.max_detections_per_image},
              {"false_positive_attribution", kFalsePositiveRule},
              {"groups", std::move(groups)},
              {"map", std::move(maps)}};
  doc["map50"] = r.map50 ? Json(quantize(*r.map50)) : Json(nullptr);
  return doc;
}

/// Shortest decimal form of a 6-decimal-rounded value, as used in JSON output.
inline std::string format_number(double x) { return Json(quantize(x)).dump(); }

inline std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "group,threshold,ap,gt_count\n";
  for (const auto& g : r.groups) {
    os << g.group << ',' << format_number(g.threshold) << ',' << format_number(g.ap) << ','
       << g.gt_count << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// stability between two prediction sets

struct ImageStability {
  std::int64_t image_id = 0;
  std::size_t a_count = 0;
  std::size_t b_count = 0;
  std::size_t matched = 0;
  double mean_iou = 0.0;
};

struct StabilityReport {
  double matched_fraction = 0.0;
  double mean_matched_iou = 0.0;
  std::size_t matched = 0;
  std::size_t a_count = 0;
  std::size_t b_count = 0;
  std::vector<ImageStability> per_image;
};

/// Per image and category, instances of `a` (descending score) are greedily
/// paired with the unmatched instance of `b` of highest mask IoU, provided it
/// reaches `iou_floor`. matched_fraction = pairs / max(|a|, |b|) over the
/// whole sets; two empty sets count as fully matched.
inline StabilityReport stability_compare(const PredictionSet& a, const PredictionSet& b,
                                         const Dataset& d, double iou_floor = 0.5) {
  using Key = std::pair<std::int64_t, std::int64_t>;
  std::map<Key, std::vector<PredictedInstance>> ga, gb;
  for (const auto& x : a.instances) ga[{x.image_id, x.category_id}].push_back(x);
  for (const auto& x : b.instances) gb[{x.image_id, x.category_id}].push_back(x);
  std::set<Key> keys;
  for (const auto& [k, _] : ga) keys.insert(k);
  for (const auto& [k, _] : gb) keys.insert(k);

  std::map<std::int64_t, ImageStability> per_image;
  std::map<std::int64_t, double> iou_sum;
  double total_iou = 0.0;
  StabilityReport rep;
  rep.a_count = a.instances.size();
  rep.b_count = b.instances.size();
  for (const auto& key : keys) {
    const auto* img = d.find_image(key.first);
    if (!img) throw Error(ErrorCode::kUnknownReference, "prediction image not in dataset");
    auto& lhs = ga[key];
    auto& rhs = gb[key];
    auto& st = per_image[key.first];
    st.image_id = key.first;
    st.a_count += lhs.size();
    st.b_count += rhs.size();

    std::vector<double> scores;
    for (const auto& x : lhs) scores.push_back(x.score);
    const auto order = detection_order(scores, -1);
    std::vector<BitMask> rm;
    for (const auto& x : rhs) rm.push_back(to_mask(x.segmentation, img->width, img->height));
    std::vector<bool> taken(rhs.size(), false);
    for (std::size_t i : order) {
      const BitMask lm = to_mask(lhs[i].segmentation, img->width, img->height);
      int best = -1;
      double best_iou = -1.0;
      for (std::size_t j = 0; j < rhs.size(); ++j) {
        if (taken[j]) continue;
        const double iou = mask_iou(lm, rm[j]);
        if (iou >= iou_floor && iou > best_iou) {
          best = static_cast<int>(j);
          best_iou = iou;
        }
      }
      if (best < 0) continue;
      taken[static_cast<std::size_t>(best)] = true;
      ++st.matched;
      ++rep.matched;
      iou_sum[key.first] += best_iou;
      total_iou += best_iou;
    }
  }
  for (auto& [id, st] : per_image) {
    st.mean_iou = st.matched ? iou_sum[id] / static_cast<double>(st.matched) : 0.0;
    rep.per_image.push_back(st);
  }
  const std::size_t denom = std::max(rep.a_count, rep.b_count);
  rep.matched_fraction = denom == 0 ? 1.0 : static_cast<double>(rep.matched) / static_cast<double>(denom);
  rep.mean_matched_iou = rep.matched ? total_iou / static_cast<double>(rep.matched) : 0.0;
  return rep;
}

inline Json stability_to_json(const StabilityReport& r) {
  Json images = Json::array();
  for (const auto& s : r.per_image) {
    images.push_back({{"image_id", s.image_id},
                      {"a_count", s.a_count},
                      {"b_count", s.b_count},
                      {"matched", s.matched},
                      {"mean_iou", quantize(s.mean_iou)}});
  }
  return {{"matched_fraction", quantize(r.matched_fraction)},
          {"mean_matched_iou", quantize(r.mean_matched_iou)},
          {"matched", r.matched},
          {"a_count", r.a_count},
          {"b_count", r.b_count},
          {"per_image", std::move(images)}};
}

}  // namespace palletbench
