#pragma once

// Pinhole projection, z-buffered flat-shaded rasterisation of scene cuboids,
// and conversion of per-instance visibility masks into COCO annotations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "palletbench/coco.hpp"
#include "palletbench/geometry.hpp"
#include "palletbench/image.hpp"
#include "palletbench/parallel.hpp"
#include "palletbench/rng.hpp"
#include "palletbench/scene.hpp"

namespace palletbench {

// ---------------------------------------------------------------------------
// camera

/// Orthonormal look-at basis plus intrinsics. Pixel origin is the top-left
/// corner; +u runs right and +v runs down.
struct CameraFrame {
  Vec3 position;
  Vec3 right;
  Vec3 up;
  Vec3 forward;
  double focal = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  explicit CameraFrame(const Camera& cam) {
    validate_camera(cam);
    position = cam.position;
    forward = normalize(cam.look_at - cam.position);
    right = normalize(cross(cam.up, forward));
    up = cross(forward, right);
    focal = 0.5 * cam.height / std::tan(0.5 * cam.vfov_deg * std::numbers::pi / 180.0);
    cx = 0.5 * cam.width;
    cy = 0.5 * cam.height;
  }

  Vec3 to_camera(Vec3 world) const noexcept {
    const Vec3 d = world - position;
    return {dot(d, right), dot(d, up), dot(d, forward)};
  }

  /// Camera-space direction (z = 1) through a pixel position.
  Vec3 ray(double u, double v) const noexcept { return {(u - cx) / focal, -(v - cy) / focal, 1.0}; }
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Returns nothing for points on or behind the camera plane.
inline std::optional<Projection> project_point(const Camera& cam, Vec3 p) {
  const CameraFrame frame(cam);
  const Vec3 c = frame.to_camera(p);
  if (c.z <= 0.0) return std::nullopt;
  return Projection{frame.cx + frame.focal * c.x / c.z, frame.cy - frame.focal * c.y / c.z, c.z};
}

// ---------------------------------------------------------------------------
// scene assembly

enum class SurfaceRole { kPallet, kRack, kOccluder, kFloor };

struct SceneCuboid {
  Cuboid box;
  SurfaceRole role = SurfaceRole::kPallet;
  std::size_t piece = 0;  // index into expand_pallets() for pallets
};

/// Pallet pieces first (so cuboid index == piece index), then rack members,
/// occluders and the floor slab.
inline std::vector<SceneCuboid> scene_cuboids(const SceneSpec& spec) {
  std::vector<SceneCuboid> out;
  const auto pieces = expand_pallets(spec);
  for (std::size_t i = 0; i < pieces.size(); ++i) out.push_back({pieces[i].box, SurfaceRole::kPallet, i});
  if (spec.rack) {
    for (const auto& m : spec.rack->members) out.push_back({m, SurfaceRole::kRack, 0});
  }
  for (const auto& o : spec.occluders) out.push_back({o, SurfaceRole::kOccluder, 0});
  Cuboid floor{{0.0, -0.05, 0.0}, {60.0, 0.1, 60.0}, 0.0, spec.floor_material};
  out.push_back({floor, SurfaceRole::kFloor, 0});
  return out;
}

// Faces 0..3 are the sides (+x, -x, +z, -z in local axes), 4 is the top and
// 5 the bottom.
inline constexpr int kSideFaces = 4;
inline constexpr int kCuboidFaces = 6;

inline Vec3 face_normal(const Cuboid& c, int face) noexcept {
  switch (face) {
    case 0: return c.axis_x();
    case 1: return -1.0 * c.axis_x();
    case 2: return c.axis_z();
    case 3: return -1.0 * c.axis_z();
    case 4: return {0.0, 1.0, 0.0};
    default: return {0.0, -1.0, 0.0};
  }
}

inline std::array<Vec3, 4> face_corners(const Cuboid& c, int face) noexcept {
  const double hx = 0.5 * c.size.x, hy = 0.5 * c.size.y, hz = 0.5 * c.size.z;
  std::array<Vec3, 4> local{};
  const double s = (face % 2 == 0) ? 1.0 : -1.0;
  if (face < 2) {
    local = {Vec3{s * hx, hy, hz}, {s * hx, hy, -hz}, {s * hx, -hy, -hz}, {s * hx, -hy, hz}};
  } else if (face < 4) {
    local = {Vec3{hx, hy, s * hz}, {-hx, hy, s * hz}, {-hx, -hy, s * hz}, {hx, -hy, s * hz}};
  } else {
    local = {Vec3{hx, s * hy, hz}, {-hx, s * hy, hz}, {-hx, s * hy, -hz}, {hx, s * hy, -hz}};
  }
  std::array<Vec3, 4> world{};
  for (int i = 0; i < 4; ++i) world[i] = c.to_world(local[i]);
  return world;
}

inline Vec3 face_centre(const Cuboid& c, int face) noexcept {
  const auto k = face_corners(c, face);
  return 0.25 * (k[0] + k[1] + k[2] + k[3]);
}

/// A face is visible from the camera side iff its outward normal points
/// towards the camera.
inline bool faces_camera(const Cuboid& c, int face, Vec3 camera) noexcept {
  return dot(face_normal(c, face), camera - face_centre(c, face)) > 0.0;
}

namespace detail {

// Rasterises one planar convex face: calls emit(row, col, depth) for every
// pixel centre inside its near-clipped projection. Edge-inclusive.
template <typename Emit>
void rasterize_face(const CameraFrame& frame, int width, int height,
                    const std::array<Vec3, 4>& world, Emit&& emit) {
  std::vector<Vec3> poly;
  poly.reserve(8);
  for (const auto& w : world) poly.push_back(frame.to_camera(w));

  // clip against z >= near
  std::vector<Vec3> clipped;
  clipped.reserve(8);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& cur = poly[i];
    const Vec3& prev = poly[(i + poly.size() - 1) % poly.size()];
    const bool cin = cur.z >= kNearPlane, pin = prev.z >= kNearPlane;
    if (cin != pin) {
      const double t = (kNearPlane - prev.z) / (cur.z - prev.z);
      clipped.push_back(prev + t * (cur - prev));
    }
    if (cin) clipped.push_back(cur);
  }
  if (clipped.size() < 3) return;

  const Vec3 normal = cross(poly[1] - poly[0], poly[2] - poly[0]);
  const double plane = dot(normal, poly[0]);

  std::vector<Point> screen;
  screen.reserve(clipped.size());
  double umin = std::numeric_limits<double>::infinity(), umax = -umin, vmin = umin, vmax = -umin;
  for (const auto& c : clipped) {
    const Point p{frame.cx + frame.focal * c.x / c.z, frame.cy - frame.focal * c.y / c.z};
    umin = std::min(umin, p.x);
    umax = std::max(umax, p.x);
    vmin = std::min(vmin, p.y);
    vmax = std::max(vmax, p.y);
    screen.push_back(p);
  }
  const double area = signed_area(Polygon{screen});
  if (std::abs(area) < 1e-12) return;
  const double orient = area > 0.0 ? 1.0 : -1.0;

  const int c0 = std::max(0, static_cast<int>(std::ceil(umin - 0.5)));
  const int c1 = std::min(width - 1, static_cast<int>(std::floor(umax - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(vmin - 0.5)));
  const int r1 = std::min(height - 1, static_cast<int>(std::floor(vmax - 0.5)));
  const std::size_t n = screen.size();
  for (int r = r0; r <= r1; ++r) {
    const double py = r + 0.5;
    for (int c = c0; c <= c1; ++c) {
      const double px = c + 0.5;
      bool inside = true;
      for (std::size_t i = 0; i < n && inside; ++i) {
        const Point& a = screen[i];
        const Point& b = screen[(i + 1) % n];
        inside = orient * ((b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)) >= 0.0;
      }
      if (!inside) continue;
      const double denom = dot(normal, frame.ray(px, py));
      if (denom == 0.0) continue;
      emit(r, c, plane / denom);
    }
  }
}

inline std::array<double, 3> material_tone(SurfaceRole role, int material) noexcept {
  const std::uint64_t h = splitmix64_at(0x7061'6c6c'6574ULL + static_cast<std::uint64_t>(role),
                                        static_cast<std::size_t>(material));
  return {140.0 + static_cast<double>(h % 90), 140.0 + static_cast<double>((h >> 16) % 90),
          140.0 + static_cast<double>((h >> 32) % 90)};
}

inline double face_shade(Vec3 normal) noexcept {
  if (normal.y > 0.5) return 1.0;
  if (normal.y < -0.5) return 0.45;
  const Vec3 light = normalize({0.6, 0.0, 0.8});
  return 0.55 + 0.35 * std::max(0.0, dot(normal, light));
}

inline constexpr std::array<double, 3> kSkyTone{205.0, 210.0, 215.0};

inline std::uint8_t shade_sample(double tone, double factor) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::floor(tone * factor + 0.5), 0.0, 255.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// rendering

enum class InstanceKind { kBody, kFace };

struct RenderedInstance {
  InstanceKind kind = InstanceKind::kBody;
  std::size_t piece = 0;  // owning pallet (index into expand_pallets)
  std::size_t unit = 0;   // owning PalletUnit
  int face = -1;          // side face index for faces, -1 for bodies
  Arrangement arrangement = Arrangement::kIndividual;
  BitMask mask;
  std::size_t unoccluded_pixels = 0;
};

struct RenderOutput {
  Image image;
  std::vector<float> depth;            // camera-space z, +inf where nothing is hit
  std::vector<std::int32_t> surface;   // cuboid * 6 + face, or -1
  std::vector<RenderedInstance> instances;
};

/// All cuboids (12 triangles each, drawn as 6 planar quads) go through one
/// z-buffer sampled at pixel centres, with back faces culled. Pallet bodies
/// and their camera-facing sides become instances.
inline RenderOutput rasterize_scene(const SceneSpec& spec) {
  validate_scene(spec);
  const CameraFrame frame(spec.camera);
  const int w = spec.camera.width, h = spec.camera.height;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const auto cuboids = scene_cuboids(spec);
  const auto pieces = expand_pallets(spec);

  RenderOutput out;
  out.depth.assign(n, std::numeric_limits<float>::infinity());
  out.surface.assign(n, -1);
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());

  for (std::size_t k = 0; k < cuboids.size(); ++k) {
    const auto& box = cuboids[k].box;
    for (int f = 0; f < kCuboidFaces; ++f) {
      if (!faces_camera(box, f, spec.camera.position)) continue;
      const auto id = static_cast<std::int32_t>(k * kCuboidFaces + static_cast<std::size_t>(f));
      detail::rasterize_face(frame, w, h, face_corners(box, f), [&](int r, int c, double z) {
        const std::size_t p = static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c);
        if (z < zbuf[p]) {
          zbuf[p] = z;
          out.surface[p] = id;
        }
      });
    }
  }

  // shading
  const double light = spec.light_intensity / 10.0;
  out.image = Image(w, h);
  for (std::size_t p = 0; p < n; ++p) {
    auto* px = out.image.samples.data() + 3 * p;
    const std::int32_t id = out.surface[p];
    if (id < 0) {
      for (int ch = 0; ch < 3; ++ch) px[ch] = detail::shade_sample(detail::kSkyTone[ch], light);
      continue;
    }
    out.depth[p] = static_cast<float>(zbuf[p]);
    const auto& sc = cuboids[static_cast<std::size_t>(id / kCuboidFaces)];
    const auto tone = detail::material_tone(sc.role, sc.box.material_id);
    const double factor = light * detail::face_shade(face_normal(sc.box, id % kCuboidFaces));
    for (int ch = 0; ch < 3; ++ch) px[ch] = detail::shade_sample(tone[ch], factor);
  }

  // instances
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto& box = pieces[k].box;
    RenderedInstance body{InstanceKind::kBody, k, pieces[k].unit, -1, pieces[k].arrangement,
                          BitMask(w, h), 0};
    BitMask alone(w, h);
    std::vector<RenderedInstance> faces;
    for (int f = 0; f < kCuboidFaces; ++f) {
      if (!faces_camera(box, f, spec.camera.position)) continue;
      BitMask face_alone(w, h);
      detail::rasterize_face(frame, w, h, face_corners(box, f), [&](int r, int c, double) {
        alone.set(r, c);
        face_alone.set(r, c);
      });
      if (f < kSideFaces) {
        faces.push_back({InstanceKind::kFace, k, pieces[k].unit, f, pieces[k].arrangement,
                         BitMask(w, h), face_alone.count()});
      }
    }
    body.unoccluded_pixels = alone.count();
    for (std::size_t p = 0; p < n; ++p) {
      const std::int32_t id = out.surface[p];
      if (id < 0 || static_cast<std::size_t>(id / kCuboidFaces) != k) continue;
      const int r = static_cast<int>(p / static_cast<std::size_t>(w));
      const int c = static_cast<int>(p % static_cast<std::size_t>(w));
      body.mask.set(r, c);
      for (auto& face : faces) {
        if (face.face == id % kCuboidFaces) face.mask.set(r, c);
      }
    }
    out.instances.push_back(std::move(body));
    for (auto& face : faces) out.instances.push_back(std::move(face));
  }
  return out;
}

// ---------------------------------------------------------------------------
// annotations

inline constexpr std::int64_t kBodyCategoryId = 1;
inline constexpr std::int64_t kFaceCategoryId = 2;
inline constexpr double kDefaultMinVisibility = 0.05;

inline std::vector<CategoryRecord> pallet_categories() {
  return {{kBodyCategoryId, std::string(kBodyCategory), "pallet", Json::object()},
          {kFaceCategoryId, std::string(kFaceCategory), "pallet", Json::object()}};
}

/// Keeps instances whose visible / unoccluded pixel ratio reaches
/// `min_visibility` (and that have at least one visible pixel). Masks are
/// stored as RLE with bbox and area taken from the mask.
inline std::pair<ImageRecord, std::vector<Annotation>> scene_to_annotations(
    const SceneSpec& spec, const RenderOutput& render, double min_visibility,
    std::int64_t image_id = 1, std::int64_t first_annotation_id = 1,
    const std::string& file_name = "image.png") {
  ImageRecord record{image_id, file_name, spec.camera.width, spec.camera.height, Json::object()};
  std::vector<Annotation> anns;
  std::int64_t next_id = first_annotation_id;
  for (const auto& inst : render.instances) {
    const std::size_t visible = inst.mask.count();
    if (visible == 0 || inst.unoccluded_pixels == 0) continue;
    const double fraction = static_cast<double>(visible) / static_cast<double>(inst.unoccluded_pixels);
    if (fraction < min_visibility) continue;
    Annotation a;
    a.id = next_id++;
    a.image_id = image_id;
    a.category_id = inst.kind == InstanceKind::kBody ? kBodyCategoryId : kFaceCategoryId;
    a.segmentation = rle_encode(inst.mask);
    a.bbox = *mask_bbox(inst.mask);
    a.area = static_cast<double>(visible);
    a.arrangement = inst.arrangement;
    anns.push_back(std::move(a));
  }
  return {std::move(record), std::move(anns)};
}

inline std::string scene_image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/scene_%05zu.png", index);
  return buf;
}

/// Renders every scene to out_dir/images/scene_NNNNN.png and writes
/// out_dir/annotations.json. Output is identical for any worker count.
inline Dataset export_dataset(const std::vector<SceneSpec>& specs, const fs::path& out_dir,
                              double min_visibility = kDefaultMinVisibility,
                              unsigned workers = default_workers()) {
  std::vector<std::pair<ImageRecord, std::vector<Annotation>>> per_scene(specs.size());
  parallel_for(specs.size(), workers, [&](std::size_t i) {
    const auto render = rasterize_scene(specs[i]);
    const std::string name = scene_image_name(i);
    save_image(render.image, out_dir / name);
    per_scene[i] = scene_to_annotations(specs[i], render, min_visibility,
                                        static_cast<std::int64_t>(i) + 1, 1, name);
  });

  Dataset d;
  d.categories = pallet_categories();
  std::int64_t next_id = 1;
  for (auto& [record, anns] : per_scene) {
    d.images.push_back(std::move(record));
    for (auto& a : anns) {
      a.id = next_id++;
      d.annotations.push_back(std::move(a));
    }
  }
  save_dataset(d, out_dir / kAnnotationsFile);
  return d;
}

}  // namespace palletbench
