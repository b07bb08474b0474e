#pragma once

// COCO-JSON subset: data model, parsing, deterministic serialisation,
// dataset linting and merging.
//
// Serialised documents use sorted keys and round every real to 6 decimal
// places. Fields the model does not know about are kept per record and
// written back unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "palletbench/error.hpp"
#include "palletbench/geometry.hpp"
#include "palletbench/io.hpp"

namespace palletbench {

using Json = nlohmann::json;

enum class Arrangement { kIndividual, kStacked, kRacked, kUnspecified };

inline constexpr Arrangement kAllArrangements[] = {Arrangement::kIndividual, Arrangement::kStacked,
                                                   Arrangement::kRacked, Arrangement::kUnspecified};

constexpr std::string_view to_string(Arrangement a) {
  switch (a) {
    case Arrangement::kIndividual: return "individual";
    case Arrangement::kStacked: return "stacked";
    case Arrangement::kRacked: return "racked";
    case Arrangement::kUnspecified: return "unspecified";
  }
  return "unspecified";
}

inline Arrangement parse_arrangement(std::string_view s) {
  for (auto a : kAllArrangements) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::kInvalidValue, "unknown arrangement '" + std::string(s) + "'");
}

inline constexpr std::string_view kBodyCategory = "pallet_body";
inline constexpr std::string_view kFaceCategory = "pallet_face";

struct ImageRecord {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  Json extra = Json::object();

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct CategoryRecord {
  std::int64_t id = 0;
  std::string name;
  std::string supercategory;
  Json extra = Json::object();

  friend bool operator==(const CategoryRecord&, const CategoryRecord&) = default;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Segmentation segmentation;
  BBox bbox;
  double area = 0.0;
  Arrangement arrangement = Arrangement::kUnspecified;
  // stored and written back; evaluation ignores it
  std::optional<std::int64_t> iscrowd;
  Json extra = Json::object();

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<CategoryRecord> categories;
  std::vector<Annotation> annotations;
  Json extra = Json::object();

  const ImageRecord* find_image(std::int64_t id) const {
    auto it = std::find_if(images.begin(), images.end(), [id](const auto& r) { return r.id == id; });
    return it == images.end() ? nullptr : &*it;
  }
  const CategoryRecord* find_category(std::int64_t id) const {
    auto it = std::find_if(categories.begin(), categories.end(),
                           [id](const auto& r) { return r.id == id; });
    return it == categories.end() ? nullptr : &*it;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct PredictedInstance {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Segmentation segmentation;
  double score = 0.0;
  std::optional<BBox> bbox;

  friend bool operator==(const PredictedInstance&, const PredictedInstance&) = default;
};

struct PredictionSet {
  std::vector<PredictedInstance> instances;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Round to 6 decimal places; the fixed numeric form of every serialised real.
inline double quantize(double x) noexcept {
  const double q = std::round(x * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

// ---------------------------------------------------------------------------
// JSON field access

namespace detail {

inline const Json& require(const Json& obj, std::string_view key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMissingField,
                std::string(where) + " is missing '" + std::string(key) + "'");
  }
  return *it;
}

inline std::int64_t require_id(const Json& obj, std::string_view key, std::string_view where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kInvalidId,
                std::string(where) + " field '" + std::string(key) + "' is not an integer");
  }
  return v.get<std::int64_t>();
}

inline double require_number(const Json& v, std::string_view what) {
  if (!v.is_number()) throw Error(ErrorCode::kInvalidValue, std::string(what) + " is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidValue, std::string(what) + " is not finite");
  return x;
}

inline Json extras(const Json& obj, std::initializer_list<std::string_view> known) {
  Json out = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) out[it.key()] = it.value();
  }
  return out;
}

}  // namespace detail

inline Segmentation parse_segmentation(const Json& j) {
  if (j.is_array()) {
    PolygonSet set;
    for (const auto& ring : j) {
      if (!ring.is_array()) throw Error(ErrorCode::kInvalidValue, "polygon ring is not an array");
      std::vector<double> coords;
      coords.reserve(ring.size());
      for (const auto& c : ring) coords.push_back(detail::require_number(c, "polygon coordinate"));
      set.rings.push_back(std::move(coords));
    }
    return set;
  }
  if (j.is_object()) {
    const Json& counts = detail::require(j, "counts", "RLE segmentation");
    if (counts.is_string()) {
      throw Error(ErrorCode::kUnsupportedFormat,
                  "compressed RLE strings are not supported; use integer-list counts");
    }
    if (!counts.is_array()) throw Error(ErrorCode::kInvalidValue, "RLE counts is not an array");
    const Json& size = detail::require(j, "size", "RLE segmentation");
    if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
        !size[1].is_number_integer()) {
      throw Error(ErrorCode::kInvalidValue, "RLE size must be [height, width] integers");
    }
    Rle rle;
    rle.height = size[0].get<int>();
    rle.width = size[1].get<int>();
    if (rle.height < 0 || rle.width < 0) throw Error(ErrorCode::kInvalidValue, "negative RLE size");
    for (const auto& c : counts) {
      if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
        throw Error(ErrorCode::kInvalidValue, "RLE counts must be non-negative integers");
      }
      rle.counts.push_back(c.get<std::uint64_t>());
    }
    return rle;
  }
  throw Error(ErrorCode::kInvalidValue, "segmentation must be a polygon list or an RLE object");
}

inline Json segmentation_to_json(const Segmentation& seg) {
  if (const auto* rle = std::get_if<Rle>(&seg)) {
    return Json{{"counts", rle->counts}, {"size", {rle->height, rle->width}}};
  }
  Json rings = Json::array();
  for (const auto& ring : std::get<PolygonSet>(seg).rings) {
    Json r = Json::array();
    for (double c : ring) r.push_back(quantize(c));
    rings.push_back(std::move(r));
  }
  return rings;
}

inline BBox parse_bbox(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kInvalidValue, "bbox must be [x,y,w,h]");
  return {detail::require_number(j[0], "bbox x"), detail::require_number(j[1], "bbox y"),
          detail::require_number(j[2], "bbox w"), detail::require_number(j[3], "bbox h")};
}

inline Json bbox_to_json(const BBox& b) {
  return Json::array({quantize(b.x), quantize(b.y), quantize(b.w), quantize(b.h)});
}

/// Area implied by the segmentation: summed ring areas, or set-pixel count.
inline double segmentation_area(const Segmentation& seg) {
  if (const auto* rle = std::get_if<Rle>(&seg)) return static_cast<double>(rle_area(*rle));
  double area = 0.0;
  for (const auto& ring : std::get<PolygonSet>(seg).rings) area += polygon_area(ring_to_polygon(ring));
  return area;
}

// ---------------------------------------------------------------------------
// parse / serialise

inline Dataset parse_dataset(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedJson, "top level is not an object");
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!doc.contains(key) || !doc[key].is_array()) {
      throw Error(ErrorCode::kMissingField, std::string("missing top-level array '") + key + "'");
    }
  }

  Dataset d;
  d.extra = detail::extras(doc, {"images", "annotations", "categories"});

  for (const auto& j : doc["images"]) {
    ImageRecord r;
    r.id = detail::require_id(j, "id", "image");
    const Json& fname = detail::require(j, "file_name", "image");
    if (!fname.is_string()) throw Error(ErrorCode::kInvalidValue, "image file_name is not a string");
    r.file_name = fname.get<std::string>();
    const auto w = detail::require_id(j, "width", "image");
    const auto h = detail::require_id(j, "height", "image");
    if (w < 1 || h < 1) throw Error(ErrorCode::kInvalidValue, "image dimensions must be >= 1");
    r.width = static_cast<int>(w);
    r.height = static_cast<int>(h);
    r.extra = detail::extras(j, {"id", "file_name", "width", "height"});
    d.images.push_back(std::move(r));
  }

  for (const auto& j : doc["categories"]) {
    CategoryRecord c;
    c.id = detail::require_id(j, "id", "category");
    const Json& name = detail::require(j, "name", "category");
    if (!name.is_string() || name.get<std::string>().empty()) {
      throw Error(ErrorCode::kInvalidValue, "category name must be a non-empty string");
    }
    c.name = name.get<std::string>();
    if (auto it = j.find("supercategory"); it != j.end() && it->is_string()) {
      c.supercategory = it->get<std::string>();
    }
    c.extra = detail::extras(j, {"id", "name", "supercategory"});
    d.categories.push_back(std::move(c));
  }

  for (const auto& j : doc["annotations"]) {
    Annotation a;
    a.id = detail::require_id(j, "id", "annotation");
    a.image_id = detail::require_id(j, "image_id", "annotation");
    a.category_id = detail::require_id(j, "category_id", "annotation");
    a.segmentation = parse_segmentation(detail::require(j, "segmentation", "annotation"));
    if (auto it = j.find("bbox"); it != j.end()) {
      a.bbox = parse_bbox(*it);
    } else {
      a.bbox = segmentation_bbox(a.segmentation);
    }
    if (auto it = j.find("area"); it != j.end()) {
      a.area = detail::require_number(*it, "annotation area");
    } else {
      a.area = segmentation_area(a.segmentation);
    }
    if (auto it = j.find("arrangement"); it != j.end()) {
      if (!it->is_string()) throw Error(ErrorCode::kInvalidValue, "arrangement is not a string");
      a.arrangement = parse_arrangement(it->get<std::string>());
    }
    if (auto it = j.find("iscrowd"); it != j.end()) {
      if (!it->is_number_integer()) throw Error(ErrorCode::kInvalidValue, "iscrowd is not an integer");
      a.iscrowd = it->get<std::int64_t>();
    }
    a.extra = detail::extras(j, {"id", "image_id", "category_id", "segmentation", "bbox", "area",
                                 "arrangement", "iscrowd"});
    d.annotations.push_back(std::move(a));
  }
  return d;
}

inline Json dataset_to_json(const Dataset& d) {
  Json doc = d.extra.is_object() ? d.extra : Json::object();
  Json images = Json::array();
  for (const auto& r : d.images) {
    Json j = r.extra;
    j["id"] = r.id;
    j["file_name"] = r.file_name;
    j["width"] = r.width;
    j["height"] = r.height;
    images.push_back(std::move(j));
  }
  Json categories = Json::array();
  for (const auto& c : d.categories) {
    Json j = c.extra;
    j["id"] = c.id;
    j["name"] = c.name;
    j["supercategory"] = c.supercategory;
    categories.push_back(std::move(j));
  }
  Json annotations = Json::array();
  for (const auto& a : d.annotations) {
    Json j = a.extra;
    j["id"] = a.id;
    j["image_id"] = a.image_id;
    j["category_id"] = a.category_id;
    j["segmentation"] = segmentation_to_json(a.segmentation);
    j["bbox"] = bbox_to_json(a.bbox);
    j["area"] = quantize(a.area);
    if (a.arrangement != Arrangement::kUnspecified) j["arrangement"] = to_string(a.arrangement);
    if (a.iscrowd) j["iscrowd"] = *a.iscrowd;
    annotations.push_back(std::move(j));
  }
  doc["images"] = std::move(images);
  doc["categories"] = std::move(categories);
  doc["annotations"] = std::move(annotations);
  return doc;
}

inline std::string serialize_dataset(const Dataset& d) {
  return dataset_to_json(d).dump() + "\n";
}

inline Dataset load_dataset(const fs::path& path) { return parse_dataset(read_text_file(path)); }

inline void save_dataset(const Dataset& d, const fs::path& path) {
  write_text_file(path, serialize_dataset(d));
}

// ---------------------------------------------------------------------------
// predictions

inline PredictionSet parse_predictions(std::string_view text, const Dataset& reference) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kMalformedJson, "predictions must be a JSON array");

  std::unordered_map<std::int64_t, const ImageRecord*> images;
  for (const auto& r : reference.images) images.emplace(r.id, &r);
  std::unordered_set<std::int64_t> categories;
  for (const auto& c : reference.categories) categories.insert(c.id);

  PredictionSet set;
  set.instances.reserve(doc.size());
  for (const auto& j : doc) {
    PredictedInstance p;
    p.image_id = detail::require_id(j, "image_id", "prediction");
    p.category_id = detail::require_id(j, "category_id", "prediction");
    auto img = images.find(p.image_id);
    if (img == images.end()) {
      throw Error(ErrorCode::kUnknownReference, "prediction image_id " + std::to_string(p.image_id));
    }
    if (!categories.contains(p.category_id)) {
      throw Error(ErrorCode::kUnknownReference,
                  "prediction category_id " + std::to_string(p.category_id));
    }
    p.segmentation = parse_segmentation(detail::require(j, "segmentation", "prediction"));
    if (const auto* rle = std::get_if<Rle>(&p.segmentation);
        rle && (rle->width != img->second->width || rle->height != img->second->height)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "prediction RLE size disagrees with image " + std::to_string(p.image_id));
    }
    p.score = detail::require_number(detail::require(j, "score", "prediction"), "score");
    if (p.score < 0.0 || p.score > 1.0) {
      throw Error(ErrorCode::kScoreRange, "score " + std::to_string(p.score) + " outside [0,1]");
    }
    if (auto it = j.find("bbox"); it != j.end()) p.bbox = parse_bbox(*it);
    set.instances.push_back(std::move(p));
  }
  return set;
}

inline std::string serialize_predictions(const PredictionSet& p) {
  Json doc = Json::array();
  for (const auto& inst : p.instances) {
    Json j;
    j["image_id"] = inst.image_id;
    j["category_id"] = inst.category_id;
    j["segmentation"] = segmentation_to_json(inst.segmentation);
    j["score"] = quantize(inst.score);
    if (inst.bbox) j["bbox"] = bbox_to_json(*inst.bbox);
    doc.push_back(std::move(j));
  }
  return doc.dump() + "\n";
}

/// Ground truth re-expressed as predictions with a fixed score.
inline PredictionSet predictions_from_annotations(const Dataset& d, double score = 1.0) {
  PredictionSet p;
  for (const auto& a : d.annotations) {
    p.instances.push_back({a.image_id, a.category_id, a.segmentation, score, a.bbox});
  }
  return p;
}

// ---------------------------------------------------------------------------
// validation

enum class DefectCode {
  kDanglingImageRef,
  kDanglingCategoryRef,
  kDupId,
  kOddCoords,
  kDegeneratePolygon,
  kBboxOutOfBounds,
  kAreaMismatch,
  kRleLengthMismatch,
  kMissingImageFile,
};

constexpr std::string_view to_string(DefectCode c) {
  switch (c) {
    case DefectCode::kDanglingImageRef: return "DANGLING_IMAGE_REF";
    case DefectCode::kDanglingCategoryRef: return "DANGLING_CATEGORY_REF";
    case DefectCode::kDupId: return "DUP_ID";
    case DefectCode::kOddCoords: return "ODD_COORDS";
    case DefectCode::kDegeneratePolygon: return "DEGENERATE_POLYGON";
    case DefectCode::kBboxOutOfBounds: return "BBOX_OUT_OF_BOUNDS";
    case DefectCode::kAreaMismatch: return "AREA_MISMATCH";
    case DefectCode::kRleLengthMismatch: return "RLE_LENGTH_MISMATCH";
    case DefectCode::kMissingImageFile: return "MISSING_IMAGE_FILE";
  }
  return "UNKNOWN";
}

struct Defect {
  DefectCode code;
  std::string message;
  std::vector<std::int64_t> ids;
};

struct ValidationReport {
  std::vector<Defect> defects;

  bool clean() const noexcept { return defects.empty(); }

  std::map<std::string, std::size_t> counts() const {
    std::map<std::string, std::size_t> out;
    for (const auto& d : defects) ++out[std::string(to_string(d.code))];
    return out;
  }
};

inline constexpr double kAreaTolerance = 0.05;

/// Lints a dataset. Each check reports at most one defect per offending
/// record; checks that depend on a broken prerequisite (unresolved image,
/// malformed segmentation) are skipped for that record.
inline ValidationReport validate_dataset(const Dataset& d,
                                         const std::optional<fs::path>& image_root = std::nullopt) {
  ValidationReport report;
  auto add = [&](DefectCode code, std::string message, std::vector<std::int64_t> ids) {
    report.defects.push_back({code, std::move(message), std::move(ids)});
  };

  std::unordered_map<std::int64_t, const ImageRecord*> images;
  for (const auto& r : d.images) {
    if (!images.emplace(r.id, &r).second) add(DefectCode::kDupId, "duplicate image id", {r.id});
  }
  std::unordered_set<std::int64_t> categories;
  for (const auto& c : d.categories) {
    if (!categories.insert(c.id).second) add(DefectCode::kDupId, "duplicate category id", {c.id});
  }
  std::unordered_set<std::int64_t> annotation_ids;

  for (const auto& a : d.annotations) {
    if (!annotation_ids.insert(a.id).second) {
      add(DefectCode::kDupId, "duplicate annotation id", {a.id});
    }
    auto img = images.find(a.image_id);
    if (img == images.end()) {
      add(DefectCode::kDanglingImageRef, "annotation references missing image", {a.id, a.image_id});
    }
    if (!categories.contains(a.category_id)) {
      add(DefectCode::kDanglingCategoryRef, "annotation references missing category",
          {a.id, a.category_id});
    }

    if (img != images.end()) {
      const auto& r = *img->second;
      const auto& b = a.bbox;
      if (b.w < 0 || b.h < 0 || b.x < 0 || b.y < 0 || b.x + b.w > r.width || b.y + b.h > r.height) {
        add(DefectCode::kBboxOutOfBounds, "bbox exceeds image bounds", {a.id});
      }
    }

    bool geometry_ok = true;
    if (const auto* set = std::get_if<PolygonSet>(&a.segmentation)) {
      const bool odd = std::any_of(set->rings.begin(), set->rings.end(),
                                   [](const auto& ring) { return ring.size() % 2 != 0; });
      if (odd) {
        add(DefectCode::kOddCoords, "polygon ring has an odd coordinate count", {a.id});
        geometry_ok = false;
      }
    } else {
      const auto& rle = std::get<Rle>(a.segmentation);
      std::uint64_t sum = 0;
      for (auto c : rle.counts) sum += c;
      const auto expected =
          static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
      const bool size_ok = img == images.end() ||
                           (rle.height == img->second->height && rle.width == img->second->width);
      if (sum != expected || !size_ok) {
        add(DefectCode::kRleLengthMismatch,
            sum != expected ? "RLE counts do not cover size" : "RLE size disagrees with image",
            {a.id});
        geometry_ok = false;
      }
    }

    if (geometry_ok) {
      const double computed = segmentation_area(a.segmentation);
      if (computed < 1.0) {
        add(DefectCode::kDegeneratePolygon, "segmentation area below 1 px^2", {a.id});
      } else if (std::abs(a.area - computed) / computed > kAreaTolerance) {
        add(DefectCode::kAreaMismatch,
            "stated area " + std::to_string(a.area) + " vs computed " + std::to_string(computed),
            {a.id});
      }
    }
  }

  if (image_root) {
    for (const auto& r : d.images) {
      if (!fs::exists(*image_root / r.file_name)) {
        add(DefectCode::kMissingImageFile, "missing " + r.file_name, {r.id});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// merging

/// Concatenates two datasets. Ids are reassigned densely from 1 (records of
/// `a` first); categories are unified by name.
inline Dataset merge_datasets(const Dataset& a, const Dataset& b) {
  Dataset out;
  out.extra = a.extra.is_object() ? a.extra : Json::object();
  if (b.extra.is_object()) {
    for (auto it = b.extra.begin(); it != b.extra.end(); ++it) {
      if (!out.extra.contains(it.key())) out.extra[it.key()] = it.value();
    }
  }

  std::map<std::string, std::int64_t> category_by_name;
  auto add_categories = [&](const Dataset& src) {
    std::unordered_map<std::int64_t, std::int64_t> remap;
    for (const auto& c : src.categories) {
      auto it = category_by_name.find(c.name);
      if (it == category_by_name.end()) {
        CategoryRecord copy = c;
        copy.id = static_cast<std::int64_t>(out.categories.size()) + 1;
        category_by_name.emplace(c.name, copy.id);
        remap[c.id] = copy.id;
        out.categories.push_back(std::move(copy));
      } else {
        const auto& existing = out.categories[static_cast<std::size_t>(it->second - 1)];
        if (existing.supercategory != c.supercategory) {
          throw Error(ErrorCode::kCategoryConflict,
                      "category '" + c.name + "' has supercategories '" + existing.supercategory +
                          "' and '" + c.supercategory + "'");
        }
        remap[c.id] = it->second;
      }
    }
    return remap;
  };

  auto append = [&](const Dataset& src) {
    const auto category_map = add_categories(src);
    std::unordered_map<std::int64_t, std::int64_t> image_map;
    for (const auto& r : src.images) {
      ImageRecord copy = r;
      copy.id = static_cast<std::int64_t>(out.images.size()) + 1;
      image_map.emplace(r.id, copy.id);
      out.images.push_back(std::move(copy));
    }
    for (const auto& ann : src.annotations) {
      auto img = image_map.find(ann.image_id);
      auto cat = category_map.find(ann.category_id);
      if (img == image_map.end() || cat == category_map.end()) {
        throw Error(ErrorCode::kUnknownReference,
                    "annotation " + std::to_string(ann.id) + " has unresolved references");
      }
      Annotation copy = ann;
      copy.id = static_cast<std::int64_t>(out.annotations.size()) + 1;
      copy.image_id = img->second;
      copy.category_id = cat->second;
      out.annotations.push_back(std::move(copy));
    }
  };

  append(a);
  append(b);
  return out;
}

}  // namespace palletbench
