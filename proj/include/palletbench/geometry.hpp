#pragma once

// Geometry kernel: polygon metrics, even-odd rasterisation, COCO RLE codec,
// IoU on masks/boxes/segmentations and mask -> polygon contour extraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "palletbench/error.hpp"

namespace palletbench {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Ordered vertex list in pixel coordinates. Holds >= 3 finite vertices when
/// valid; operations tolerate fewer and treat them as zero-area.
struct Polygon {
  std::vector<Point> vertices;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Axis-aligned box: top-left corner plus extents, all in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Binary mask, row-major, one byte per pixel.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(std::max(width, 0)) *
                  static_cast<std::size_t>(std::max(height, 0)),
              0) {
    if (width < 0 || height < 0) {
      throw Error(ErrorCode::kInvalidValue, "negative mask dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool get(int row, int col) const noexcept {
    return bits_[index(row, col)] != 0;
  }
  void set(int row, int col, bool value = true) noexcept {
    bits_[index(row, col)] = value ? 1 : 0;
  }
  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool empty() const noexcept { return count() == 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Rings as flat x1,y1,...,xn,yn coordinate lists.
struct PolygonSet {
  std::vector<std::vector<double>> rings;

  friend bool operator==(const PolygonSet&, const PolygonSet&) = default;
};

/// Uncompressed COCO RLE: alternating run lengths over column-major pixel
/// order, starting with a (possibly empty) run of zeros.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint64_t> counts;

  friend bool operator==(const Rle&, const Rle&) = default;
};

using Segmentation = std::variant<PolygonSet, Rle>;

// ---------------------------------------------------------------------------
// polygons

inline double signed_area(const Polygon& p) noexcept {
  const auto& v = p.vertices;
  if (v.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    acc += v[j].x * v[i].y - v[i].x * v[j].y;
  }
  return 0.5 * acc;
}

/// Absolute shoelace area.
inline double polygon_area(const Polygon& p) noexcept {
  return std::abs(signed_area(p));
}

inline BBox polygon_to_bbox(const Polygon& p) noexcept {
  if (p.vertices.empty()) return {};
  double x0 = p.vertices.front().x, x1 = x0;
  double y0 = p.vertices.front().y, y1 = y0;
  for (const auto& v : p.vertices) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

/// Flat coordinate ring -> Polygon. A trailing odd coordinate is ignored.
inline Polygon ring_to_polygon(std::span<const double> ring) {
  Polygon p;
  p.vertices.reserve(ring.size() / 2);
  for (std::size_t i = 0; i + 1 < ring.size(); i += 2) {
    p.vertices.push_back({ring[i], ring[i + 1]});
  }
  return p;
}

inline std::vector<double> polygon_to_ring(const Polygon& p) {
  std::vector<double> ring;
  ring.reserve(p.vertices.size() * 2);
  for (const auto& v : p.vertices) {
    ring.push_back(v.x);
    ring.push_back(v.y);
  }
  return ring;
}

inline std::vector<Polygon> to_polygons(const PolygonSet& set) {
  std::vector<Polygon> out;
  out.reserve(set.rings.size());
  for (const auto& ring : set.rings) out.push_back(ring_to_polygon(ring));
  return out;
}

inline PolygonSet to_polygon_set(std::span<const Polygon> polygons) {
  PolygonSet set;
  for (const auto& p : polygons) set.rings.push_back(polygon_to_ring(p));
  return set;
}

/// Pixel (row i, col j) is set iff its centre (j + 0.5, i + 0.5) lies inside
/// the even-odd union of all rings. Edges are half-open in y, so a centre
/// exactly on a horizontal edge belongs to the region below it.
inline BitMask rasterize_polygons(std::span<const Polygon> rings, int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidValue, "raster dimensions must be positive");
  }
  BitMask mask(width, height);

  struct Edge {
    double x0, y0, x1, y1;
  };
  std::vector<Edge> edges;
  for (const auto& ring : rings) {
    const auto& v = ring.vertices;
    if (v.size() < 3) continue;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if (v[i].y == v[j].y) continue;
      edges.push_back({v[j].x, v[j].y, v[i].x, v[i].y});
    }
  }
  if (edges.empty()) return mask;

  // First column whose centre is at or right of the edge crossing. The float
  // estimate is corrected with a cross-multiplied test so centres lying
  // exactly on an edge are classified consistently.
  auto first_column = [](const Edge& e, double y) {
    const double dy = e.y1 - e.y0, dx = e.x1 - e.x0, t = y - e.y0;
    auto at_or_right = [&](double col) {
      const double lhs = (col + 0.5 - e.x0) * dy, rhs = t * dx;
      return dy > 0 ? lhs >= rhs : lhs <= rhs;
    };
    double col = std::ceil(e.x0 + t * dx / dy - 0.5);
    while (at_or_right(col - 1)) col -= 1;
    while (!at_or_right(col)) col += 1;
    return col;
  };

  std::vector<double> starts;
  for (int row = 0; row < height; ++row) {
    const double y = row + 0.5;
    starts.clear();
    for (const auto& e : edges) {
      if ((e.y0 <= y && y < e.y1) || (e.y1 <= y && y < e.y0)) starts.push_back(first_column(e, y));
    }
    std::sort(starts.begin(), starts.end());
    for (std::size_t k = 0; k + 1 < starts.size(); k += 2) {
      const int begin = static_cast<int>(std::clamp(starts[k], 0.0, static_cast<double>(width)));
      const int end = static_cast<int>(std::clamp(starts[k + 1], 0.0, static_cast<double>(width)));
      for (int col = begin; col < end; ++col) mask.set(row, col);
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// RLE

inline Rle rle_encode(const BitMask& m) {
  Rle rle{m.height(), m.width(), {}};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (int col = 0; col < m.width(); ++col) {
    for (int row = 0; row < m.height(); ++row) {
      const std::uint8_t bit = m.get(row, col) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

inline BitMask rle_decode(const Rle& r) {
  if (r.height < 0 || r.width < 0) {
    throw Error(ErrorCode::kInvalidValue, "negative RLE size");
  }
  const std::uint64_t total =
      static_cast<std::uint64_t>(r.height) * static_cast<std::uint64_t>(r.width);
  std::uint64_t sum = 0;
  for (auto c : r.counts) {
    sum += c;
    if (sum > total) break;
  }
  if (sum != total) {
    throw Error(ErrorCode::kRleLengthMismatch,
                "counts sum to " + std::to_string(sum) + ", expected " + std::to_string(total));
  }
  BitMask m(r.width, r.height);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto c : r.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + c; ++k) {
        m.set(static_cast<int>(k % static_cast<std::uint64_t>(r.height)),
              static_cast<int>(k / static_cast<std::uint64_t>(r.height)));
      }
    }
    pos += c;
    value = !value;
  }
  return m;
}

inline std::uint64_t rle_area(const Rle& r) noexcept {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < r.counts.size(); i += 2) area += r.counts[i];
  return area;
}

// ---------------------------------------------------------------------------
// IoU

inline double mask_iou(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask dimensions differ");
  }
  std::size_t inter = 0, uni = 0;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += static_cast<std::size_t>(ab[i] & bb[i]);
    uni += static_cast<std::size_t>(ab[i] | bb[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double bbox_iou(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

/// Materialises a segmentation on a width x height canvas.
inline BitMask to_mask(const Segmentation& seg, int width, int height) {
  if (const auto* rle = std::get_if<Rle>(&seg)) {
    if (rle->width != width || rle->height != height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "RLE size [" + std::to_string(rle->height) + "," + std::to_string(rle->width) +
                      "] disagrees with image [" + std::to_string(height) + "," +
                      std::to_string(width) + "]");
    }
    return rle_decode(*rle);
  }
  const auto polys = to_polygons(std::get<PolygonSet>(seg));
  return rasterize_polygons(polys, width, height);
}

inline double instance_iou(const Segmentation& a, const Segmentation& b, int width, int height) {
  return mask_iou(to_mask(a, width, height), to_mask(b, width, height));
}

/// Tight pixel bounds of the set pixels, or nothing for an empty mask.
inline std::optional<BBox> mask_bbox(const BitMask& m) {
  int r0 = m.height(), r1 = -1, c0 = m.width(), c1 = -1;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m.get(r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return std::nullopt;
  return BBox{static_cast<double>(c0), static_cast<double>(r0), static_cast<double>(c1 - c0 + 1),
              static_cast<double>(r1 - r0 + 1)};
}

/// Box of a segmentation: vertex bounds for polygons, pixel bounds for RLE.
inline BBox segmentation_bbox(const Segmentation& seg) {
  if (const auto* rle = std::get_if<Rle>(&seg)) {
    return mask_bbox(rle_decode(*rle)).value_or(BBox{});
  }
  Polygon all;
  for (const auto& ring : std::get<PolygonSet>(seg).rings) {
    const auto p = ring_to_polygon(ring);
    all.vertices.insert(all.vertices.end(), p.vertices.begin(), p.vertices.end());
  }
  return polygon_to_bbox(all);
}

/// Shifts set pixels by (dx, dy); pixels leaving the canvas are dropped.
inline BitMask translate(const BitMask& m, int dx, int dy) {
  BitMask out(m.width(), m.height());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (m.get(r, c) && out.contains(r + dy, c + dx)) out.set(r + dy, c + dx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// convex clipping (exact reference for rasterised IoU)

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) noexcept {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Returns a counter-clockwise copy (positive signed area), or throws if the
// polygon turns both ways.
inline Polygon require_convex_ccw(const Polygon& p) {
  const auto& v = p.vertices;
  if (v.size() < 3) throw Error(ErrorCode::kNonConvex, "polygon has fewer than 3 vertices");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = cross(v[i], v[(i + 1) % v.size()], v[(i + 2) % v.size()]);
    if (c > 1e-12) pos = true;
    if (c < -1e-12) neg = true;
  }
  if (pos && neg) throw Error(ErrorCode::kNonConvex, "polygon is not convex");
  Polygon out = p;
  if (signed_area(out) < 0.0) std::reverse(out.vertices.begin(), out.vertices.end());
  return out;
}

}  // namespace detail

/// Sutherland-Hodgman clip of `a` by `b`, then shoelace. Either orientation
/// is accepted; non-convex input is rejected.
inline double convex_polygon_intersection_area(const Polygon& a, const Polygon& b) {
  const Polygon subject = detail::require_convex_ccw(a);
  const Polygon clip = detail::require_convex_ccw(b);

  std::vector<Point> output = subject.vertices;
  const auto& cv = clip.vertices;
  for (std::size_t i = 0; i < cv.size() && !output.empty(); ++i) {
    const Point& e0 = cv[i];
    const Point& e1 = cv[(i + 1) % cv.size()];
    std::vector<Point> input;
    input.swap(output);
    for (std::size_t k = 0; k < input.size(); ++k) {
      const Point& cur = input[k];
      const Point& prev = input[(k + input.size() - 1) % input.size()];
      const double dc = detail::cross(e0, e1, cur);
      const double dp = detail::cross(e0, e1, prev);
      if (dc >= 0.0) {
        if (dp < 0.0) {
          const double t = dp / (dp - dc);
          output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
        }
        output.push_back(cur);
      } else if (dp >= 0.0) {
        const double t = dp / (dp - dc);
        output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
    }
  }
  return polygon_area(Polygon{std::move(output)});
}

// ---------------------------------------------------------------------------
// mask -> polygons

namespace detail {

inline double point_segment_distance(const Point& p, const Point& a, const Point& b) noexcept {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Open-chain Ramer-Douglas-Peucker over pts[first..last]; marks kept indices.
inline void rdp(const std::vector<Point>& pts, std::size_t first, std::size_t last, double eps,
                std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      index = i;
    }
  }
  if (best > eps) {
    keep[index] = true;
    rdp(pts, first, index, eps, keep);
    rdp(pts, index, last, eps, keep);
  }
}

}  // namespace detail

/// Ramer-Douglas-Peucker on a closed polygon. The ring is split at vertex 0
/// and the vertex farthest from it. Results with fewer than 3 vertices fall
/// back to the input.
inline Polygon simplify_polygon(const Polygon& p, double eps) {
  const auto& v = p.vertices;
  if (eps <= 0.0 || v.size() <= 3) return p;
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = std::hypot(v[i].x - v[0].x, v[i].y - v[0].y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<Point> closed = v;
  closed.push_back(v.front());
  std::vector<bool> keep(closed.size(), false);
  keep[0] = keep[far] = keep.back() = true;
  detail::rdp(closed, 0, far, eps, keep);
  detail::rdp(closed, far, closed.size() - 1, eps, keep);
  Polygon out;
  for (std::size_t i = 0; i + 1 < closed.size(); ++i) {
    if (keep[i]) out.vertices.push_back(closed[i]);
  }
  return out.vertices.size() >= 3 ? out : p;
}

/// One outer boundary polygon per 4-connected component, vertices on integer
/// pixel corners, components ordered by their first pixel in row-major order.
/// Holes are not represented.
inline std::vector<Polygon> mask_to_polygons(const BitMask& m, double simplify_eps = 0.0) {
  const int w = m.width(), h = m.height();
  std::vector<Polygon> out;
  if (w == 0 || h == 0) return out;

  std::vector<int> label(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
  auto at = [w](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c); };

  // corner grid is (w+1) x (h+1); each corner has at most two outgoing edges
  const int cw = w + 1;
  auto corner = [cw](int x, int y) { return static_cast<std::size_t>(y) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(x); };
  constexpr int kDx[4] = {1, 0, -1, 0};  // right, down, left, up (y grows down)
  constexpr int kDy[4] = {0, 1, 0, -1};

  std::vector<std::pair<int, int>> stack;
  std::vector<std::pair<int, int>> pixels;
  int next_label = 0;
  for (int r0 = 0; r0 < h; ++r0) {
    for (int c0 = 0; c0 < w; ++c0) {
      if (!m.get(r0, c0) || label[at(r0, c0)] >= 0) continue;
      const int id = next_label++;
      pixels.clear();
      stack.assign(1, {r0, c0});
      label[at(r0, c0)] = id;
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        pixels.emplace_back(r, c);
        for (int d = 0; d < 4; ++d) {
          const int rr = r + kDy[d], cc = c + kDx[d];
          if (m.contains(rr, cc) && m.get(rr, cc) && label[at(rr, cc)] < 0) {
            label[at(rr, cc)] = id;
            stack.emplace_back(rr, cc);
          }
        }
      }

      auto inside = [&](int r, int c) { return m.contains(r, c) && label[at(r, c)] == id; };
      // outgoing[corner] is a bitset over the four headings; interior lies to
      // the right of every directed edge.
      std::vector<std::pair<std::size_t, std::uint8_t>> outgoing;
      outgoing.reserve(pixels.size() * 2);
      for (const auto& [r, c] : pixels) {
        if (!inside(r - 1, c)) outgoing.emplace_back(corner(c, r), 1u << 0);
        if (!inside(r, c + 1)) outgoing.emplace_back(corner(c + 1, r), 1u << 1);
        if (!inside(r + 1, c)) outgoing.emplace_back(corner(c + 1, r + 1), 1u << 2);
        if (!inside(r, c - 1)) outgoing.emplace_back(corner(c, r + 1), 1u << 3);
      }
      std::sort(outgoing.begin(), outgoing.end());
      auto edges_at = [&](std::size_t key) -> std::uint8_t* {
        auto it = std::lower_bound(outgoing.begin(), outgoing.end(),
                                   std::pair<std::size_t, std::uint8_t>{key, 0});
        // merge duplicates lazily: first entry accumulates the bits
        if (it == outgoing.end() || it->first != key) return nullptr;
        auto first = it;
        for (auto jt = std::next(it); jt != outgoing.end() && jt->first == key; ++jt) {
          first->second |= jt->second;
          jt->second = 0;
        }
        return &first->second;
      };

      // (r0, c0) is the component's first pixel, so its top edge is on the
      // outer boundary and its top-left corner has a single outgoing edge.
      Polygon poly;
      int x = c0, y = r0, heading = 0;
      const std::size_t start = corner(c0, r0);
      {
        auto* bits = edges_at(start);
        *bits &= static_cast<std::uint8_t>(~(1u << 0));
      }
      poly.vertices.push_back({static_cast<double>(x), static_cast<double>(y)});
      for (;;) {
        x += kDx[heading];
        y += kDy[heading];
        const std::size_t key = corner(x, y);
        if (key == start) break;
        auto* bits = edges_at(key);
        // Prefer a left turn, then straight, then right: this keeps the walk
        // on the outside where the component touches itself diagonally.
        int next = -1;
        for (int turn : {3, 0, 1}) {
          const int cand = (heading + turn) % 4;
          if (*bits & (1u << cand)) {
            next = cand;
            break;
          }
        }
        if (next < 0) break;  // unreachable for a well-formed boundary
        *bits &= static_cast<std::uint8_t>(~(1u << next));
        if (next != heading) {
          poly.vertices.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
        heading = next;
      }
      out.push_back(simplify_eps > 0.0 ? simplify_polygon(poly, simplify_eps) : std::move(poly));
    }
  }
  return out;
}

}  // namespace palletbench
