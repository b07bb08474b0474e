#pragma once

// Domain-randomised warehouse scenes: data model, randomisation config,
// seeded generation and a deterministic JSON form.
//
// World frame: +Y up, floor at y = 0. Every scene fits a 20 m x 20 m floor
// cell centred on the origin.
//
// generate_scene draws from SplitMix64(seed) in this fixed order:
//   camera    azimuth, horizontal distance, elevation, target x, target z, vfov
//   light     intensity
//   pallets   count, then per pallet: arrangement, stack count (stacked only),
//             yaw, material, then floor placement attempts (a, b) for
//             non-racked pallets until one fits
//   rack      level count and material (only when a pallet is racked)
//   occluders count, then per occluder attempts of (size x, size y, size z,
//             along, lateral, yaw) until the camera is outside, then material
//   materials floor material

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "palletbench/coco.hpp"
#include "palletbench/error.hpp"
#include "palletbench/parallel.hpp"
#include "palletbench/rng.hpp"

namespace palletbench {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) noexcept { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) noexcept {
  const double n = norm(a);
  return n > 0.0 ? (1.0 / n) * a : a;
}

struct Camera {
  Vec3 position;
  Vec3 look_at{0.0, 0.0, 1.0};
  Vec3 up{0.0, 1.0, 0.0};
  double vfov_deg = 60.0;
  int width = 320;
  int height = 240;

  friend bool operator==(const Camera&, const Camera&) = default;
};

/// Box with extents along its local axes, rotated by `yaw` about +Y.
/// Local +x maps to (cos yaw, 0, -sin yaw) and local +z to (sin yaw, 0, cos yaw).
struct Cuboid {
  Vec3 centre;
  Vec3 size{1.0, 1.0, 1.0};
  double yaw = 0.0;
  int material_id = 0;

  Vec3 axis_x() const noexcept { return {std::cos(yaw), 0.0, -std::sin(yaw)}; }
  Vec3 axis_z() const noexcept { return {std::sin(yaw), 0.0, std::cos(yaw)}; }

  Vec3 to_world(Vec3 local) const noexcept {
    return centre + local.x * axis_x() + Vec3{0.0, local.y, 0.0} + local.z * axis_z();
  }
  Vec3 to_local(Vec3 world) const noexcept {
    const Vec3 d = world - centre;
    return {dot(d, axis_x()), d.y, dot(d, axis_z())};
  }
  bool contains(Vec3 world, double margin = 0.0) const noexcept {
    const Vec3 p = to_local(world);
    return std::abs(p.x) <= 0.5 * size.x + margin && std::abs(p.y) <= 0.5 * size.y + margin &&
           std::abs(p.z) <= 0.5 * size.z + margin;
  }

  friend bool operator==(const Cuboid&, const Cuboid&) = default;
};

struct PalletDims {
  double length = 1.2;
  double width = 1.0;
  double height = 0.15;

  friend bool operator==(const PalletDims&, const PalletDims&) = default;
};

inline constexpr int kMaxStack = 8;

/// A pallet footprint: one pallet, or a vertical stack of identical pallets.
/// `base` is the centre of the bottom face of the lowest pallet.
struct PalletUnit {
  Vec3 base;
  double yaw = 0.0;
  Arrangement arrangement = Arrangement::kIndividual;
  int stack_count = 1;
  PalletDims dims;
  int material_id = 0;

  friend bool operator==(const PalletUnit&, const PalletUnit&) = default;
};

struct RackSpec {
  Vec3 position;  // floor-level centre
  double yaw = 0.0;
  std::vector<double> shelf_heights;
  std::vector<Cuboid> members;  // posts and beams
  int material_id = 0;

  friend bool operator==(const RackSpec&, const RackSpec&) = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  Camera camera;
  double light_intensity = 10.0;
  std::vector<PalletUnit> pallets;
  std::optional<RackSpec> rack;
  std::vector<Cuboid> occluders;
  int floor_material = 0;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;

  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct RandomisationConfig {
  int width = 320;
  int height = 240;
  Range vfov_deg{55.0, 65.0};
  IntRange pallet_count{1, 6};
  IntRange stack_count{2, 5};
  // individual, stacked, racked
  std::array<double, 3> arrangement_weights{1.0, 1.0, 1.0};
  Range camera_distance{2.0, 10.0};
  Range camera_elevation{0.5, 3.0};
  Range light_intensity{7.0, 10.0};
  IntRange occluder_count{0, 4};
  Range occluder_size{0.3, 1.5};
  int material_pool = 8;
  PalletDims pallet_dims;
  IntRange rack_levels{2, 4};

  friend bool operator==(const RandomisationConfig&, const RandomisationConfig&) = default;
};

// ---------------------------------------------------------------------------
// validation

inline constexpr double kFloorHalfExtent = 10.0;
inline constexpr double kNearPlane = 0.01;

inline void validate_camera(const Camera& c) {
  if (norm(c.look_at - c.position) <= 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "camera position equals look_at");
  }
  if (!(c.vfov_deg >= 10.0 && c.vfov_deg <= 170.0)) {
    throw Error(ErrorCode::kInvalidConfig, "vfov must lie in [10, 170] degrees");
  }
  if (norm(cross(c.up, c.look_at - c.position)) <= 1e-12) {
    throw Error(ErrorCode::kInvalidConfig, "camera up is parallel to the view direction");
  }
  if (c.width < 1 || c.height < 1) throw Error(ErrorCode::kInvalidConfig, "image size must be positive");
}

inline void validate_config(const RandomisationConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  auto check = [&](const Range& r, double min, double max, const char* name) {
    if (!(r.lo <= r.hi) || r.lo < min || r.hi > max) {
      fail(std::string(name) + " range is empty or outside [" + std::to_string(min) + ", " +
           std::to_string(max) + "]");
    }
  };
  auto check_int = [&](const IntRange& r, int min, int max, const char* name) {
    if (r.lo > r.hi || r.lo < min || r.hi > max) {
      fail(std::string(name) + " range is empty or outside [" + std::to_string(min) + ", " +
           std::to_string(max) + "]");
    }
  };
  if (c.width < 1 || c.height < 1) fail("image size must be positive");
  check(c.vfov_deg, 10.0, 170.0, "vfov_deg");
  check_int(c.pallet_count, 1, 64, "pallet_count");
  check_int(c.stack_count, 1, kMaxStack, "stack_count");
  check(c.camera_distance, 1.6, 12.0, "camera_distance");
  check(c.camera_elevation, 0.05, 10.0, "camera_elevation");
  check(c.light_intensity, 0.0, 10.0, "light_intensity");
  check_int(c.occluder_count, 0, 64, "occluder_count");
  check(c.occluder_size, 0.01, 5.0, "occluder_size");
  check_int(c.rack_levels, 1, 16, "rack_levels");
  if (c.material_pool < 1) fail("material_pool must be >= 1");
  if (!(c.pallet_dims.length > 0 && c.pallet_dims.width > 0 && c.pallet_dims.height > 0)) {
    fail("pallet dimensions must be positive");
  }
  double total = 0.0;
  for (double w : c.arrangement_weights) {
    if (!(w >= 0.0)) fail("arrangement weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) fail("arrangement weights sum to zero");
}

/// One pallet of a unit, with its world-space box.
struct PalletPiece {
  std::size_t unit = 0;
  int level = 0;
  Arrangement arrangement = Arrangement::kIndividual;
  Cuboid box;
};

inline std::vector<PalletPiece> expand_pallets(const SceneSpec& spec) {
  std::vector<PalletPiece> out;
  for (std::size_t u = 0; u < spec.pallets.size(); ++u) {
    const auto& p = spec.pallets[u];
    for (int k = 0; k < p.stack_count; ++k) {
      Cuboid box;
      box.centre = p.base + Vec3{0.0, (k + 0.5) * p.dims.height, 0.0};
      box.size = {p.dims.length, p.dims.height, p.dims.width};
      box.yaw = p.yaw;
      box.material_id = p.material_id;
      out.push_back({u, k, p.arrangement, box});
    }
  }
  return out;
}

inline void validate_scene(const SceneSpec& s) {
  validate_camera(s.camera);
  if (!(s.light_intensity >= 0.0 && s.light_intensity <= 10.0)) {
    throw Error(ErrorCode::kInvalidConfig, "light_intensity outside [0, 10]");
  }
  for (const auto& p : s.pallets) {
    if (p.stack_count < 1 || p.stack_count > kMaxStack ||
        (p.arrangement != Arrangement::kStacked && p.stack_count != 1)) {
      throw Error(ErrorCode::kInvalidConfig, "invalid stack_count for arrangement");
    }
    if (p.arrangement == Arrangement::kUnspecified) {
      throw Error(ErrorCode::kInvalidConfig, "pallet arrangement must be specified");
    }
  }
  for (const auto& piece : expand_pallets(s)) {
    const double r = 0.5 * std::hypot(piece.box.size.x, piece.box.size.z);
    if (std::abs(piece.box.centre.x) + r > kFloorHalfExtent ||
        std::abs(piece.box.centre.z) + r > kFloorHalfExtent) {
      throw Error(ErrorCode::kInvalidConfig, "pallet outside the floor cell");
    }
  }
  for (const auto& o : s.occluders) {
    if (o.contains(s.camera.position, kNearPlane)) {
      throw Error(ErrorCode::kInvalidConfig, "occluder contains the camera");
    }
  }
}

// ---------------------------------------------------------------------------
// generation

namespace detail {

// 2D separating-axis overlap test of yawed rectangles on the floor.
inline bool footprints_overlap(Vec3 ca, double la, double wa, double yaw_a, Vec3 cb, double lb,
                               double wb, double yaw_b, double margin) {
  const Cuboid a{ca, {la + margin, 1.0, wa + margin}, yaw_a, 0};
  const Cuboid b{cb, {lb + margin, 1.0, wb + margin}, yaw_b, 0};
  const Vec3 axes[4] = {a.axis_x(), a.axis_z(), b.axis_x(), b.axis_z()};
  const Vec3 d = cb - ca;
  for (const auto& axis : axes) {
    auto radius = [&](const Cuboid& c) {
      return 0.5 * c.size.x * std::abs(dot(c.axis_x(), axis)) +
             0.5 * c.size.z * std::abs(dot(c.axis_z(), axis));
    };
    if (std::abs(d.x * axis.x + d.z * axis.z) > radius(a) + radius(b)) return false;
  }
  return true;
}

inline Arrangement draw_arrangement(SplitMix64& rng, const std::array<double, 3>& w) {
  const double total = w[0] + w[1] + w[2];
  const double u = rng.uniform() * total;
  if (u < w[0]) return Arrangement::kIndividual;
  if (u < w[0] + w[1]) return Arrangement::kStacked;
  // zero-weight classes are never chosen, even at the boundary
  if (w[2] > 0.0) return Arrangement::kRacked;
  return w[1] > 0.0 ? Arrangement::kStacked : Arrangement::kIndividual;
}

inline RackSpec build_rack(Vec3 position, double yaw, int levels, const PalletDims& dims,
                           int material) {
  RackSpec rack;
  rack.position = position;
  rack.yaw = yaw;
  rack.material_id = material;
  const double bay = 2.0 * dims.width + 0.5;
  const double depth = dims.length - 0.1;
  constexpr double kPost = 0.08, kBeamH = 0.1, kBeamD = 0.05, kFirst = 0.15, kSpacing = 1.1;
  for (int k = 0; k < levels; ++k) rack.shelf_heights.push_back(kFirst + k * kSpacing);
  const double top = rack.shelf_heights.back() + 1.0;

  const Cuboid frame{position, {1.0, 1.0, 1.0}, yaw, material};
  for (double sx : {-1.0, 1.0}) {
    for (double sz : {-1.0, 1.0}) {
      const Vec3 local{sx * (0.5 * bay + 0.5 * kPost), 0.0, sz * 0.5 * depth};
      Cuboid post{frame.to_world(local) + Vec3{0.0, 0.5 * top, 0.0}, {kPost, top, kPost}, yaw, material};
      rack.members.push_back(post);
    }
  }
  for (double h : rack.shelf_heights) {
    for (double sz : {-1.0, 1.0}) {
      const Vec3 local{0.0, 0.0, sz * (0.5 * depth - 0.5 * kBeamD)};
      Cuboid beam{frame.to_world(local) + Vec3{0.0, h - 0.5 * kBeamH, 0.0},
                  {bay + 2.0 * kPost, kBeamH, kBeamD}, yaw, material};
      rack.members.push_back(beam);
    }
  }
  return rack;
}

inline constexpr int kPlacementRetries = 64;
inline constexpr int kOccluderRetries = 64;

}  // namespace detail

/// Pure function of (cfg, seed); see the header comment for the draw order.
inline SceneSpec generate_scene(const RandomisationConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  SplitMix64 rng(seed);
  SceneSpec s;
  s.seed = seed;

  // camera
  const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double distance = rng.uniform(cfg.camera_distance.lo, cfg.camera_distance.hi);
  const double elevation = rng.uniform(cfg.camera_elevation.lo, cfg.camera_elevation.hi);
  const double tx = rng.uniform(-1.0, 1.0);
  const double tz = rng.uniform(-1.0, 1.0);
  const Vec3 target{tx, 0.0, tz};
  const Vec3 offset{std::cos(azimuth), 0.0, std::sin(azimuth)};
  s.camera.position = target + distance * offset + Vec3{0.0, elevation, 0.0};
  s.camera.look_at = target + Vec3{0.0, 0.4, 0.0};
  s.camera.vfov_deg = rng.uniform(cfg.vfov_deg.lo, cfg.vfov_deg.hi);
  s.camera.width = cfg.width;
  s.camera.height = cfg.height;

  const Vec3 forward{-offset.x, 0.0, -offset.z};
  const Vec3 lateral = cross(Vec3{0.0, 1.0, 0.0}, forward);
  // heading that puts a pallet's length along the view direction
  const double facing_yaw = std::atan2(-forward.z, forward.x);

  s.light_intensity = rng.uniform(cfg.light_intensity.lo, cfg.light_intensity.hi);

  // pallets
  const auto& dims = cfg.pallet_dims;
  const double half_lateral = std::max(3.0, 0.45 * distance);
  const double depth_near = -std::min(0.5 * distance, distance - 1.6);
  const double depth_far = 3.0;
  const int count = static_cast<int>(rng.uniform_int(cfg.pallet_count.lo, cfg.pallet_count.hi));
  struct Placed {
    Vec3 centre;
    double yaw;
  };
  std::vector<Placed> placed;
  std::vector<std::size_t> racked;
  for (int i = 0; i < count; ++i) {
    PalletUnit p;
    p.dims = dims;
    p.arrangement = detail::draw_arrangement(rng, cfg.arrangement_weights);
    if (p.arrangement == Arrangement::kStacked) {
      p.stack_count = static_cast<int>(rng.uniform_int(cfg.stack_count.lo, cfg.stack_count.hi));
    }
    p.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    p.material_id = static_cast<int>(rng.uniform_int(0, cfg.material_pool - 1));
    if (p.arrangement == Arrangement::kRacked) {
      racked.push_back(s.pallets.size());
    } else {
      bool ok = false;
      for (int attempt = 0; attempt < detail::kPlacementRetries && !ok; ++attempt) {
        const double a = rng.uniform(-half_lateral, half_lateral);
        const double b = rng.uniform(depth_near, depth_far);
        const Vec3 c = target + a * lateral + b * forward;
        ok = std::none_of(placed.begin(), placed.end(), [&](const Placed& q) {
          return detail::footprints_overlap(c, dims.length, dims.width, p.yaw, q.centre,
                                            dims.length, dims.width, q.yaw, 0.05);
        });
        if (ok) {
          p.base = c;
          placed.push_back({c, p.yaw});
        }
      }
      if (!ok) {
        throw Error(ErrorCode::kRetryExhausted,
                    "could not place pallet " + std::to_string(i) + " without overlap");
      }
    }
    s.pallets.push_back(p);
  }

  // rack, behind the floor placement region so the two never collide
  if (!racked.empty()) {
    int levels = static_cast<int>(rng.uniform_int(cfg.rack_levels.lo, cfg.rack_levels.hi));
    const int material = static_cast<int>(rng.uniform_int(0, cfg.material_pool - 1));
    levels = std::max(levels, static_cast<int>((racked.size() + 1) / 2));
    const double reach = 0.5 * std::hypot(dims.length, dims.width);
    const double rack_depth = dims.length - 0.1;
    const Vec3 position = target + (depth_far + reach + 0.1 + 0.5 * rack_depth) * forward;
    // rack local x runs along `lateral`, local z along the view direction
    const double rack_yaw = std::atan2(-lateral.z, lateral.x);
    s.rack = detail::build_rack(position, rack_yaw, levels, dims, material);
    const Cuboid frame{position, {1.0, 1.0, 1.0}, rack_yaw, 0};
    const double slot = 0.5 * dims.width + 0.12;
    for (std::size_t k = 0; k < racked.size(); ++k) {
      auto& p = s.pallets[racked[k]];
      const double x = (k % 2 == 0) ? -slot : slot;
      p.base = frame.to_world({x, 0.0, 0.0}) + Vec3{0.0, s.rack->shelf_heights[k / 2], 0.0};
      p.yaw = facing_yaw;
    }
  }

  // occluders between the camera and the target
  const int occluders = static_cast<int>(rng.uniform_int(cfg.occluder_count.lo, cfg.occluder_count.hi));
  const Vec3 camera_floor{s.camera.position.x, 0.0, s.camera.position.z};
  for (int i = 0; i < occluders; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < detail::kOccluderRetries && !ok; ++attempt) {
      Cuboid o;
      o.size = {rng.uniform(cfg.occluder_size.lo, cfg.occluder_size.hi),
                rng.uniform(cfg.occluder_size.lo, cfg.occluder_size.hi),
                rng.uniform(cfg.occluder_size.lo, cfg.occluder_size.hi)};
      const double along = rng.uniform(0.3, 0.8);
      const double side = rng.uniform(-1.5, 1.5);
      o.yaw = rng.uniform(0.0, std::numbers::pi);
      o.centre = camera_floor + (along * distance) * forward + side * lateral +
                 Vec3{0.0, 0.5 * o.size.y, 0.0};
      if (!o.contains(s.camera.position, kNearPlane)) {
        ok = true;
        s.occluders.push_back(o);
      }
    }
    if (!ok) {
      throw Error(ErrorCode::kRetryExhausted,
                  "could not place occluder " + std::to_string(i) + " clear of the camera");
    }
    s.occluders.back().material_id = static_cast<int>(rng.uniform_int(0, cfg.material_pool - 1));
  }

  s.floor_material = static_cast<int>(rng.uniform_int(0, cfg.material_pool - 1));
  validate_scene(s);
  return s;
}

/// Scene i uses seed splitmix64_at(master_seed, i); output does not depend on
/// `workers`.
inline std::vector<SceneSpec> generate_batch(const RandomisationConfig& cfg, std::size_t count,
                                             std::uint64_t master_seed,
                                             unsigned workers = default_workers()) {
  if (count < 1) throw Error(ErrorCode::kInvalidConfig, "batch count must be >= 1");
  validate_config(cfg);
  std::vector<SceneSpec> out(count);
  parallel_for(count, workers, [&](std::size_t i) {
    out[i] = generate_scene(cfg, splitmix64_at(master_seed, i));
  });
  return out;
}

// ---------------------------------------------------------------------------
// JSON
//
// Scene documents keep a fixed field order (ordered_json) and full double
// precision so that re-rendering a parsed scene is bit-identical.

using OrderedJson = nlohmann::ordered_json;

namespace detail {

inline OrderedJson vec_json(Vec3 v) { return OrderedJson::array({v.x, v.y, v.z}); }

inline Vec3 json_vec(const OrderedJson& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kInvalidValue, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline OrderedJson cuboid_json(const Cuboid& c) {
  OrderedJson j;
  j["centre"] = vec_json(c.centre);
  j["size"] = vec_json(c.size);
  j["yaw"] = c.yaw;
  j["material_id"] = c.material_id;
  return j;
}

inline Cuboid json_cuboid(const OrderedJson& j) {
  return {json_vec(j.at("centre")), json_vec(j.at("size")), j.at("yaw").get<double>(),
          j.at("material_id").get<int>()};
}

template <typename T>
T json_value(const OrderedJson& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace detail

inline OrderedJson scene_to_json(const SceneSpec& s) {
  OrderedJson j;
  j["seed"] = s.seed;
  OrderedJson cam;
  cam["position"] = detail::vec_json(s.camera.position);
  cam["look_at"] = detail::vec_json(s.camera.look_at);
  cam["up"] = detail::vec_json(s.camera.up);
  cam["vfov_deg"] = s.camera.vfov_deg;
  cam["width"] = s.camera.width;
  cam["height"] = s.camera.height;
  j["camera"] = std::move(cam);
  j["light_intensity"] = s.light_intensity;
  OrderedJson pallets = OrderedJson::array();
  for (const auto& p : s.pallets) {
    OrderedJson pj;
    pj["base"] = detail::vec_json(p.base);
    pj["yaw"] = p.yaw;
    pj["arrangement"] = to_string(p.arrangement);
    pj["stack_count"] = p.stack_count;
    pj["dims"] = OrderedJson::array({p.dims.length, p.dims.width, p.dims.height});
    pj["material_id"] = p.material_id;
    pallets.push_back(std::move(pj));
  }
  j["pallets"] = std::move(pallets);
  if (s.rack) {
    OrderedJson rj;
    rj["position"] = detail::vec_json(s.rack->position);
    rj["yaw"] = s.rack->yaw;
    rj["shelf_heights"] = s.rack->shelf_heights;
    OrderedJson members = OrderedJson::array();
    for (const auto& m : s.rack->members) members.push_back(detail::cuboid_json(m));
    rj["members"] = std::move(members);
    rj["material_id"] = s.rack->material_id;
    j["rack"] = std::move(rj);
  } else {
    j["rack"] = nullptr;
  }
  OrderedJson occ = OrderedJson::array();
  for (const auto& o : s.occluders) occ.push_back(detail::cuboid_json(o));
  j["occluders"] = std::move(occ);
  j["floor_material"] = s.floor_material;
  return j;
}

inline std::string serialize_scene(const SceneSpec& s) { return scene_to_json(s).dump(1) + "\n"; }

inline SceneSpec parse_scene(std::string_view text) {
  OrderedJson j;
  try {
    j = OrderedJson::parse(text);
  } catch (const OrderedJson::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  try {
    SceneSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& cam = j.at("camera");
    s.camera.position = detail::json_vec(cam.at("position"));
    s.camera.look_at = detail::json_vec(cam.at("look_at"));
    s.camera.up = detail::json_vec(cam.at("up"));
    s.camera.vfov_deg = cam.at("vfov_deg").get<double>();
    s.camera.width = cam.at("width").get<int>();
    s.camera.height = cam.at("height").get<int>();
    s.light_intensity = j.at("light_intensity").get<double>();
    for (const auto& pj : j.at("pallets")) {
      PalletUnit p;
      p.base = detail::json_vec(pj.at("base"));
      p.yaw = pj.at("yaw").get<double>();
      p.arrangement = parse_arrangement(pj.at("arrangement").get<std::string>());
      p.stack_count = pj.at("stack_count").get<int>();
      const auto& d = pj.at("dims");
      p.dims = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
      p.material_id = pj.at("material_id").get<int>();
      s.pallets.push_back(p);
    }
    if (const auto& rj = j.at("rack"); !rj.is_null()) {
      RackSpec r;
      r.position = detail::json_vec(rj.at("position"));
      r.yaw = rj.at("yaw").get<double>();
      r.shelf_heights = rj.at("shelf_heights").get<std::vector<double>>();
      for (const auto& m : rj.at("members")) r.members.push_back(detail::json_cuboid(m));
      r.material_id = rj.at("material_id").get<int>();
      s.rack = std::move(r);
    }
    for (const auto& o : j.at("occluders")) s.occluders.push_back(detail::json_cuboid(o));
    s.floor_material = j.at("floor_material").get<int>();
    validate_scene(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidValue, std::string("scene: ") + e.what());
  }
}

inline OrderedJson config_to_json(const RandomisationConfig& c) {
  auto range = [](const Range& r) { return OrderedJson::array({r.lo, r.hi}); };
  auto irange = [](const IntRange& r) { return OrderedJson::array({r.lo, r.hi}); };
  OrderedJson j;
  j["width"] = c.width;
  j["height"] = c.height;
  j["vfov_deg"] = range(c.vfov_deg);
  j["pallet_count"] = irange(c.pallet_count);
  j["stack_count"] = irange(c.stack_count);
  j["arrangement_weights"] = {{"individual", c.arrangement_weights[0]},
                              {"stacked", c.arrangement_weights[1]},
                              {"racked", c.arrangement_weights[2]}};
  j["camera_distance"] = range(c.camera_distance);
  j["camera_elevation"] = range(c.camera_elevation);
  j["light_intensity"] = range(c.light_intensity);
  j["occluder_count"] = irange(c.occluder_count);
  j["occluder_size"] = range(c.occluder_size);
  j["material_pool"] = c.material_pool;
  j["pallet_dims"] = OrderedJson::array({c.pallet_dims.length, c.pallet_dims.width, c.pallet_dims.height});
  j["rack_levels"] = irange(c.rack_levels);
  return j;
}

/// Missing keys keep their defaults.
inline RandomisationConfig parse_config(std::string_view text) {
  OrderedJson j;
  try {
    j = OrderedJson::parse(text);
  } catch (const OrderedJson::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  RandomisationConfig c;
  try {
    auto range = [&](const char* key, Range& r) {
      if (auto it = j.find(key); it != j.end()) r = {it->at(0).get<double>(), it->at(1).get<double>()};
    };
    auto irange = [&](const char* key, IntRange& r) {
      if (auto it = j.find(key); it != j.end()) r = {it->at(0).get<int>(), it->at(1).get<int>()};
    };
    c.width = detail::json_value(j, "width", c.width);
    c.height = detail::json_value(j, "height", c.height);
    range("vfov_deg", c.vfov_deg);
    irange("pallet_count", c.pallet_count);
    irange("stack_count", c.stack_count);
    if (auto it = j.find("arrangement_weights"); it != j.end()) {
      c.arrangement_weights = {detail::json_value(*it, "individual", 0.0),
                               detail::json_value(*it, "stacked", 0.0),
                               detail::json_value(*it, "racked", 0.0)};
    }
    range("camera_distance", c.camera_distance);
    range("camera_elevation", c.camera_elevation);
    range("light_intensity", c.light_intensity);
    irange("occluder_count", c.occluder_count);
    range("occluder_size", c.occluder_size);
    c.material_pool = detail::json_value(j, "material_pool", c.material_pool);
    if (auto it = j.find("pallet_dims"); it != j.end()) {
      c.pallet_dims = {it->at(0).get<double>(), it->at(1).get<double>(), it->at(2).get<double>()};
    }
    irange("rack_levels", c.rack_levels);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  validate_config(c);
  return c;
}

}  // namespace palletbench
