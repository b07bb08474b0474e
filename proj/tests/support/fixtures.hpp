#pragma once

// Seeded fixture generators shared by the unit and acceptance suites.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "palletbench/palletbench.hpp"

namespace pbtest {

namespace pb = palletbench;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("palletbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// geometry

/// Hull of 3..10 random points inside [margin, size - margin]^2; at least
/// three vertices and non-trivial area.
inline std::vector<Point> random_convex_polygon(pb::SplitMix64& rng, double size, double margin = 0.0) {
  for (;;) {
    const int n = static_cast<int>(rng.uniform_int(3, 10));
    std::vector<Point> pts;
    const double cx = rng.uniform(margin, size - margin), cy = rng.uniform(margin, size - margin);
    const double radius = rng.uniform(0.05, 0.45) * size;
    for (int i = 0; i < n; ++i) {
      const double x = std::clamp(cx + rng.uniform(-radius, radius), margin, size - margin);
      const double y = std::clamp(cy + rng.uniform(-radius, radius), margin, size - margin);
      pts.push_back({x, y});
    }
    auto hull = convex_hull(pts);
    if (hull.size() >= 3 && shoelace(hull) > 0.01 * size * size) return hull;
  }
}

inline pb::BitMask random_mask(pb::SplitMix64& rng, int w, int h, double density) {
  pb::BitMask m(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) m.set(r, c, rng.uniform() < density);
  }
  return m;
}

/// Pixels of `m` plus every pixel not 4-reachable from outside the image
/// through unset pixels.
inline pb::BitMask fill_holes(const pb::BitMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  std::deque<std::pair<int, int>> q;
  auto push = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= h || c >= w) return;
    auto& o = outside[static_cast<std::size_t>(r) * w + c];
    if (o || m.get(r, c)) return;
    o = 1;
    q.emplace_back(r, c);
  };
  for (int c = 0; c < w; ++c) {
    push(0, c);
    push(h - 1, c);
  }
  for (int r = 0; r < h; ++r) {
    push(r, 0);
    push(r, w - 1);
  }
  while (!q.empty()) {
    auto [r, c] = q.front();
    q.pop_front();
    push(r + 1, c);
    push(r - 1, c);
    push(r, c + 1);
    push(r, c - 1);
  }
  pb::BitMask out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) out.set(r, c, !outside[static_cast<std::size_t>(r) * w + c]);
  }
  return out;
}

/// 4-connected components as separate masks, in row-major order of their
/// first pixel.
inline std::vector<pb::BitMask> components4(const pb::BitMask& m) {
  const int w = m.width(), h = m.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<pb::BitMask> out;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m.get(r, c) || label[static_cast<std::size_t>(r) * w + c] >= 0) continue;
      pb::BitMask comp(w, h);
      std::deque<std::pair<int, int>> q{{r, c}};
      label[static_cast<std::size_t>(r) * w + c] = static_cast<int>(out.size());
      while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop_front();
        comp.set(y, x);
        const int dy[] = {1, -1, 0, 0}, dx[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int ny = y + dy[k], nx = x + dx[k];
          if (ny < 0 || nx < 0 || ny >= h || nx >= w || !m.get(ny, nx)) continue;
          auto& l = label[static_cast<std::size_t>(ny) * w + nx];
          if (l >= 0) continue;
          l = static_cast<int>(out.size());
          q.emplace_back(ny, nx);
        }
      }
      out.push_back(std::move(comp));
    }
  }
  return out;
}

/// Expected raster of the polygons traced from `m`: the even-odd union of
/// every component with its holes filled.
inline pb::BitMask traced_raster_oracle(const pb::BitMask& m) {
  pb::BitMask out(m.width(), m.height());
  for (const auto& comp : components4(m)) {
    const auto filled = fill_holes(comp);
    for (int r = 0; r < m.height(); ++r) {
      for (int c = 0; c < m.width(); ++c) {
        if (filled.get(r, c)) out.set(r, c, !out.get(r, c));
      }
    }
  }
  return out;
}

/// Simply connected 4-connected blob of `pixels` pixels grown by random
/// accretion from the image centre, holes filled.
inline pb::BitMask random_blob(pb::SplitMix64& rng, int w, int h, std::size_t pixels) {
  pb::BitMask m(w, h);
  std::vector<std::pair<int, int>> frontier{{h / 2, w / 2}};
  std::size_t count = 0;
  while (count < pixels && !frontier.empty()) {
    const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(frontier.size()) - 1));
    const auto [r, c] = frontier[idx];
    frontier[idx] = frontier.back();
    frontier.pop_back();
    if (m.get(r, c)) continue;
    m.set(r, c);
    ++count;
    const int dy[] = {1, -1, 0, 0}, dx[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int ny = r + dy[k], nx = c + dx[k];
      if (ny >= 0 && nx >= 0 && ny < h && nx < w && !m.get(ny, nx)) frontier.emplace_back(ny, nx);
    }
  }
  return fill_holes(m);
}

inline pb::Polygon to_polygon(const std::vector<Point>& pts) { return pb::Polygon{pts}; }

inline pb::PolygonSet rect_ring(double x, double y, double w, double h) {
  return pb::PolygonSet{{{x, y, x + w, y, x + w, y + h, x, y + h}}};
}

// ---------------------------------------------------------------------------
// datasets

inline std::vector<pb::CategoryRecord> two_categories() {
  return {{1, "pallet_body", "pallet", pb::Json::object()}, {2, "pallet_face", "pallet", pb::Json::object()}};
}

/// Small random detection problem: up to 3 images of 24x20 pixels,
/// rectangle and triangle ground truth, up to 6 detections per image drawn
/// as perturbed copies of ground truth or free shapes, scores from a coarse
/// grid so ties occur.
inline std::pair<pb::Dataset, pb::PredictionSet> random_eval_fixture(std::uint64_t seed) {
  pb::SplitMix64 rng(seed);
  pb::Dataset d;
  d.categories = two_categories();
  const int w = 24, h = 20;
  const int n_images = static_cast<int>(rng.uniform_int(1, 3));
  std::int64_t ann_id = 1;
  auto random_shape = [&](bool rle) -> pb::Segmentation {
    const double x = rng.uniform_int(0, w - 4), y = rng.uniform_int(0, h - 4);
    const double bw = rng.uniform_int(2, std::min<int>(12, w - static_cast<int>(x))),
                 bh = rng.uniform_int(2, std::min<int>(12, h - static_cast<int>(y)));
    pb::PolygonSet s = rng.uniform() < 0.3
                           ? pb::PolygonSet{{{x, y, x + bw, y + bh * 0.5, x, y + bh}}}
                           : rect_ring(x, y, bw, bh);
    if (!rle) return s;
    const auto rings = pb::to_polygons(s);
    return pb::rle_encode(pb::rasterize_polygons(rings, w, h));
  };
  pb::PredictionSet p;
  for (int i = 0; i < n_images; ++i) {
    d.images.push_back({i + 1, "img" + std::to_string(i) + ".png", w, h, pb::Json::object()});
    const int n_gt = static_cast<int>(rng.uniform_int(0, 4));
    std::vector<std::size_t> gt_here;
    for (int g = 0; g < n_gt; ++g) {
      pb::Annotation a;
      a.id = ann_id++;
      a.image_id = i + 1;
      a.category_id = rng.uniform_int(1, 2);
      a.segmentation = random_shape(rng.uniform() < 0.3);
      a.arrangement = pb::kAllArrangements[rng.uniform_int(0, 2)];
      a.bbox = pb::segmentation_bbox(a.segmentation);
      a.area = pb::segmentation_area(a.segmentation);
      if (a.area < 1.0) {
        --ann_id;
        continue;
      }
      gt_here.push_back(d.annotations.size());
      d.annotations.push_back(std::move(a));
    }
    const int n_det = static_cast<int>(rng.uniform_int(0, 6));
    for (int k = 0; k < n_det; ++k) {
      pb::PredictedInstance inst;
      inst.image_id = i + 1;
      inst.score = static_cast<double>(rng.uniform_int(1, 5)) / 5.0;
      if (!gt_here.empty() && rng.uniform() < 0.7) {
        const auto& g = d.annotations[gt_here[rng.uniform_int(0, static_cast<std::int64_t>(gt_here.size()) - 1)]];
        inst.category_id = rng.uniform() < 0.85 ? g.category_id : 3 - g.category_id;
        auto mask = pb::to_mask(g.segmentation, w, h);
        mask = pb::translate(mask, static_cast<int>(rng.uniform_int(-2, 2)), static_cast<int>(rng.uniform_int(-2, 2)));
        inst.segmentation = pb::rle_encode(mask);
      } else {
        inst.category_id = rng.uniform_int(1, 2);
        inst.segmentation = random_shape(rng.uniform() < 0.5);
      }
      if (rng.uniform() < 0.3) inst.bbox = pb::segmentation_bbox(inst.segmentation);
      p.instances.push_back(std::move(inst));
    }
  }
  return {std::move(d), std::move(p)};
}

// ---------------------------------------------------------------------------
// defect injection

struct InjectedDefect {
  pb::DefectCode code;
  std::int64_t id;  // first id the validator should report
};

/// A clean dataset of three 32x24 images whose files exist under `root`:
/// six polygon annotations then four RLE annotations.
inline pb::Dataset clean_fixture(pb::SplitMix64& rng, const std::filesystem::path& root) {
  pb::Dataset d;
  d.categories = two_categories();
  const int w = 32, h = 24;
  for (int i = 0; i < 3; ++i) {
    d.images.push_back({i + 1, "images/f" + std::to_string(i) + ".png", w, h, pb::Json::object()});
    pb::save_image(pb::Image(w, h), root / d.images.back().file_name);
  }
  for (int k = 0; k < 10; ++k) {
    pb::Annotation a;
    a.id = 100 + k;
    a.image_id = rng.uniform_int(1, 3);
    a.category_id = rng.uniform_int(1, 2);
    const double x = rng.uniform_int(0, 20), y = rng.uniform_int(0, 14);
    const double bw = rng.uniform_int(3, 10), bh = rng.uniform_int(3, 8);
    const auto ring = rect_ring(x, y, bw, bh);
    if (k < 6) {
      a.segmentation = ring;
    } else {
      a.segmentation = pb::rle_encode(pb::rasterize_polygons(pb::to_polygons(ring), w, h));
    }
    a.bbox = pb::segmentation_bbox(a.segmentation);
    a.area = pb::segmentation_area(a.segmentation);
    a.arrangement = pb::kAllArrangements[rng.uniform_int(0, 2)];
    d.annotations.push_back(std::move(a));
  }
  return d;
}

inline constexpr pb::DefectCode kInjectableCodes[] = {
    pb::DefectCode::kDanglingImageRef, pb::DefectCode::kDanglingCategoryRef, pb::DefectCode::kDupId,
    pb::DefectCode::kOddCoords,        pb::DefectCode::kDegeneratePolygon,   pb::DefectCode::kBboxOutOfBounds,
    pb::DefectCode::kAreaMismatch,     pb::DefectCode::kRleLengthMismatch,   pb::DefectCode::kMissingImageFile};

/// Injects `codes` (distinct) into a clean fixture, each on its own record,
/// and returns the ground-truth manifest.
inline std::vector<InjectedDefect> inject_defects(pb::Dataset& d, const std::filesystem::path& root,
                                                  const std::vector<pb::DefectCode>& codes, pb::SplitMix64& rng) {
  using pb::DefectCode;
  std::vector<InjectedDefect> manifest;
  // polygon annotations 1..5 (0 is kept as the duplicate-id source), RLE 6..9
  std::vector<std::size_t> polys{1, 2, 3, 4, 5}, rles{6, 7, 8, 9};
  auto take = [&](std::vector<std::size_t>& pool) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
    const auto v = pool[i];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    return v;
  };
  auto take_any = [&]() { return rng.uniform() < 0.5 && !rles.empty() ? take(rles) : take(polys); };
  // polygon-only and RLE-only codes first so their pools are not exhausted
  std::vector<DefectCode> ordered = codes;
  std::stable_partition(ordered.begin(), ordered.end(), [](DefectCode c) {
    return c == DefectCode::kOddCoords || c == DefectCode::kDegeneratePolygon || c == DefectCode::kRleLengthMismatch;
  });
  for (DefectCode code : ordered) {
    switch (code) {
      case DefectCode::kDanglingImageRef: {
        auto& a = d.annotations[take_any()];
        a.image_id = 999;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kDanglingCategoryRef: {
        auto& a = d.annotations[take_any()];
        a.category_id = 77;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kDupId: {
        auto& a = d.annotations[take_any()];
        a.id = d.annotations[0].id;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kOddCoords: {
        auto& a = d.annotations[take(polys)];
        std::get<pb::PolygonSet>(a.segmentation).rings[0].push_back(1.0);
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kDegeneratePolygon: {
        auto& a = d.annotations[take(polys)];
        const double x = a.bbox.x, y = a.bbox.y;
        a.segmentation = pb::PolygonSet{{{x, y, x + 2, y, x + 3, y}}};
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kBboxOutOfBounds: {
        auto& a = d.annotations[take_any()];
        a.bbox.x = 30;
        a.bbox.w = 5;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kAreaMismatch: {
        auto& a = d.annotations[take_any()];
        a.area *= 1.5;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kRleLengthMismatch: {
        auto& a = d.annotations[take(rles)];
        std::get<pb::Rle>(a.segmentation).counts.back() += 3;
        manifest.push_back({code, a.id});
        break;
      }
      case DefectCode::kMissingImageFile: {
        const auto& img = d.images[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        std::filesystem::remove(root / img.file_name);
        manifest.push_back({code, img.id});
        break;
      }
    }
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// scenes

/// Close-range scenes with no clutter: every pallet face spans many pixels.
inline pb::RandomisationConfig close_range_config() {
  pb::RandomisationConfig c;
  c.camera_distance = {2.5, 4.0};
  c.camera_elevation = {0.8, 1.6};
  c.pallet_count = {1, 3};
  c.occluder_count = {0, 0};
  return c;
}

inline pb::RandomisationConfig small_config(int w, int h) {
  pb::RandomisationConfig c;
  c.width = w;
  c.height = h;
  return c;
}

}  // namespace pbtest
