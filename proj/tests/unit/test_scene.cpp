#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "palletbench/render.hpp"

namespace pb = palletbench;

namespace {

pb::SceneSpec single_pallet_scene() {
  pb::SceneSpec s;
  s.camera.position = {0.3, 1.4, -3.5};
  s.camera.look_at = {0.0, 0.1, 0.0};
  s.camera.width = 96;
  s.camera.height = 72;
  s.camera.vfov_deg = 50;
  pb::PalletUnit p;
  p.yaw = 0.3;
  s.pallets.push_back(p);
  return s;
}

}  // namespace

TEST(GenerateScene, Deterministic) {
  const pb::RandomisationConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(pb::serialize_scene(pb::generate_scene(cfg, seed)), pb::serialize_scene(pb::generate_scene(cfg, seed)));
  }
}

TEST(GenerateScene, DegenerateRangeGivesOneIndividualPallet) {
  pb::RandomisationConfig cfg;
  cfg.pallet_count = {1, 1};
  cfg.arrangement_weights = {1.0, 0.0, 0.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = pb::generate_scene(cfg, seed);
    ASSERT_EQ(s.pallets.size(), 1u);
    EXPECT_EQ(s.pallets[0].arrangement, pb::Arrangement::kIndividual);
    EXPECT_EQ(s.pallets[0].stack_count, 1);
    EXPECT_FALSE(s.rack.has_value());
  }
}

TEST(GenerateScene, ArrangementFrequencies) {
  const pb::RandomisationConfig cfg;
  std::map<pb::Arrangement, double> counts;
  double total = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (const auto& p : pb::generate_scene(cfg, seed).pallets) {
      counts[p.arrangement] += 1;
      total += 1;
    }
  }
  for (auto a : {pb::Arrangement::kIndividual, pb::Arrangement::kStacked, pb::Arrangement::kRacked}) {
    EXPECT_GE(counts[a] / total, 0.28) << pb::to_string(a);
    EXPECT_LE(counts[a] / total, 0.39) << pb::to_string(a);
  }
}

TEST(GenerateScene, SatisfiesInvariants) {
  const pb::RandomisationConfig cfg;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto s = pb::generate_scene(cfg, seed);
    EXPECT_NO_THROW(pb::validate_scene(s));
    for (const auto& p : s.pallets) {
      EXPECT_LE(std::abs(p.base.x), pb::kFloorHalfExtent);
      EXPECT_LE(std::abs(p.base.z), pb::kFloorHalfExtent);
      if (p.arrangement != pb::Arrangement::kStacked) {
        EXPECT_EQ(p.stack_count, 1);
      }
      EXPECT_LE(p.stack_count, pb::kMaxStack);
    }
    for (const auto& o : s.occluders) EXPECT_FALSE(o.contains(s.camera.position, 0.0));
  }
}

TEST(GenerateScene, InvalidConfig) {
  auto expect_invalid = [](const pb::RandomisationConfig& c) {
    try {
      pb::generate_scene(c, 1);
      ADD_FAILURE();
    } catch (const pb::Error& e) {
      EXPECT_EQ(e.code(), pb::ErrorCode::kInvalidConfig);
    }
  };
  pb::RandomisationConfig c;
  c.pallet_count = {3, 2};
  expect_invalid(c);
  c = {};
  c.vfov_deg = {5.0, 20.0};
  expect_invalid(c);
  c = {};
  c.arrangement_weights = {0.0, 0.0, 0.0};
  expect_invalid(c);
  c = {};
  c.stack_count = {2, 9};
  expect_invalid(c);
}

TEST(GenerateBatch, SeedsAndWorkers) {
  const auto cfg = pbtest::small_config(64, 48);
  EXPECT_EQ(pb::generate_batch(cfg, 1, 77, 1)[0], pb::generate_scene(cfg, pb::splitmix64_at(77, 0)));
  EXPECT_EQ(pb::generate_batch(cfg, 10, 5, 1), pb::generate_batch(cfg, 10, 5, 4));
  EXPECT_THROW(pb::generate_batch(cfg, 0, 5, 1), pb::Error);
}

TEST(GenerateBatch, FiftyThousandDistinctSeeds) {
  std::unordered_set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 50000; ++i) seeds.insert(pb::splitmix64_at(2024, i));
  EXPECT_EQ(seeds.size(), 50000u);
}

TEST(SceneJson, RoundTrip) {
  const pb::RandomisationConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = pb::generate_scene(cfg, seed);
    const auto text = pb::serialize_scene(s);
    EXPECT_EQ(pb::parse_scene(text), s);
    EXPECT_EQ(pb::serialize_scene(pb::parse_scene(text)), text);
  }
  auto c = pbtest::close_range_config();
  c.arrangement_weights = {2.0, 1.0, 0.5};
  EXPECT_EQ(pb::parse_config(pb::config_to_json(c).dump()), c);
}

TEST(ProjectPoint, Examples) {
  pb::Camera cam;
  cam.position = {0, 0, 0};
  cam.look_at = {0, 0, 1};
  cam.vfov_deg = 90;
  cam.width = 100;
  cam.height = 100;
  const auto a = pb::project_point(cam, {0, 0, 1});
  ASSERT_TRUE(a);
  EXPECT_NEAR(a->u, 50, 1e-9);
  EXPECT_NEAR(a->v, 50, 1e-9);
  EXPECT_NEAR(a->depth, 1, 1e-12);
  EXPECT_FALSE(pb::project_point(cam, {0, 0, -1}));
  const auto b = pb::project_point(cam, {1, 0, 1});
  ASSERT_TRUE(b);
  EXPECT_NEAR(b->u, 100, 1e-9);
  EXPECT_NEAR(b->v, 50, 1e-9);
  const auto c = pb::project_point(cam, {0, 1, 1});
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->v, 0, 1e-9);
}

TEST(ProjectPoint, InvalidCamera) {
  pb::Camera cam;
  cam.position = cam.look_at;
  EXPECT_THROW(pb::project_point(cam, {0, 0, 1}), pb::Error);
  cam = {};
  cam.vfov_deg = 175;
  EXPECT_THROW(pb::project_point(cam, {0, 0, 1}), pb::Error);
}

TEST(RasterizeScene, MatchesRaycastOracle) {
  const auto cfg = pbtest::small_config(64, 48);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = pb::generate_scene(cfg, pb::splitmix64_at(11, seed));
    const auto render = pb::rasterize_scene(spec);
    const auto oracle = pbtest::raycast_oracle(spec);
    ASSERT_EQ(oracle.size(), render.surface.size());
    std::size_t mismatches = 0;
    for (std::size_t p = 0; p < oracle.size(); ++p) {
      const int expected = oracle[p].cuboid < 0 ? -1 : oracle[p].cuboid * pb::kCuboidFaces + oracle[p].face;
      if (render.surface[p] != expected) ++mismatches;
    }
    EXPECT_EQ(mismatches, 0u) << "seed index " << seed;
  }
}

TEST(RasterizeScene, BodyMasksDisjointAndDepthMinimal) {
  const auto cfg = pbtest::small_config(64, 48);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = pb::generate_scene(cfg, seed);
    const auto render = pb::rasterize_scene(spec);
    const auto oracle = pbtest::raycast_oracle(spec);
    for (int r = 0; r < 48; ++r) {
      for (int c = 0; c < 64; ++c) {
        int owners = 0;
        for (const auto& inst : render.instances) {
          if (inst.kind != pb::InstanceKind::kBody || !inst.mask.get(r, c)) continue;
          ++owners;
          EXPECT_EQ(static_cast<std::size_t>(oracle[static_cast<std::size_t>(r * 64 + c)].cuboid), inst.piece);
        }
        EXPECT_LE(owners, 1);
      }
    }
  }
}

TEST(RasterizeScene, FullyOccludedPalletHasEmptyMask) {
  auto s = single_pallet_scene();
  pb::Cuboid wall;
  wall.centre = {0.15, 1.0, -1.75};
  wall.size = {6.0, 4.0, 0.2};
  s.occluders.push_back(wall);
  const auto render = pb::rasterize_scene(s);
  for (const auto& inst : render.instances) {
    EXPECT_EQ(inst.mask.count(), 0u);
    EXPECT_GT(inst.unoccluded_pixels, 0u);
  }
  EXPECT_TRUE(pb::scene_to_annotations(s, render, 0.0).second.empty());
}

TEST(RasterizeScene, UnoccludedPalletBodyIsUnionOfVisibleFaces) {
  const auto s = single_pallet_scene();
  const auto render = pb::rasterize_scene(s);
  const auto oracle = pbtest::raycast_oracle(s);
  const auto& body = render.instances.at(0);
  ASSERT_EQ(body.kind, pb::InstanceKind::kBody);
  EXPECT_GT(body.mask.count(), 0u);
  EXPECT_EQ(body.mask.count(), body.unoccluded_pixels);
  for (int r = 0; r < s.camera.height; ++r) {
    for (int c = 0; c < s.camera.width; ++c) {
      EXPECT_EQ(body.mask.get(r, c), oracle[static_cast<std::size_t>(r * s.camera.width + c)].cuboid == 0);
    }
  }
  // sides plus the top cover the body exactly
  pb::BitMask faces(s.camera.width, s.camera.height);
  for (const auto& inst : render.instances) {
    if (inst.kind != pb::InstanceKind::kFace) continue;
    for (int r = 0; r < s.camera.height; ++r) {
      for (int c = 0; c < s.camera.width; ++c) {
        if (inst.mask.get(r, c)) faces.set(r, c);
      }
    }
  }
  for (int r = 0; r < s.camera.height; ++r) {
    for (int c = 0; c < s.camera.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r * s.camera.width + c);
      if (oracle[p].cuboid == 0) {
        EXPECT_EQ(faces.get(r, c), oracle[p].face < pb::kSideFaces);
      }
    }
  }
}

TEST(RasterizeScene, LightIntensityHalvesBrightness) {
  auto s = single_pallet_scene();
  s.light_intensity = 10;
  const double full = pb::mean_brightness(pb::rasterize_scene(s).image);
  s.light_intensity = 5;
  const double half = pb::mean_brightness(pb::rasterize_scene(s).image);
  EXPECT_NEAR(half / full, 0.5, 0.02);
}

TEST(RasterizeScene, BrightnessProportionalToLight) {
  const auto base = pb::generate_scene(pbtest::small_config(64, 48), 3);
  auto s = base;
  s.light_intensity = 10;
  const auto ref = pb::rasterize_scene(s).image;
  for (double light : {2.0, 6.0, 8.5}) {
    s.light_intensity = light;
    const auto img = pb::rasterize_scene(s).image;
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
      EXPECT_NEAR(img.samples[i], ref.samples[i] * light / 10.0, 1.0);
    }
  }
}

TEST(RasterizeScene, EnlargingOccluderNeverRevealsPixels) {
  const auto cfg = pbtest::small_config(64, 48);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40 && checked < 10; ++seed) {
    auto s = pb::generate_scene(cfg, seed);
    if (s.occluders.empty()) continue;
    ++checked;
    const auto before = pb::rasterize_scene(s);
    auto& o = s.occluders[0];
    o.size = 1.3 * o.size;
    o.centre.y = 0.5 * o.size.y;
    if (o.contains(s.camera.position, pb::kNearPlane)) continue;
    const auto after = pb::rasterize_scene(s);
    ASSERT_EQ(before.instances.size(), after.instances.size());
    for (std::size_t i = 0; i < before.instances.size(); ++i) {
      EXPECT_LE(after.instances[i].mask.count(), before.instances[i].mask.count());
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(SceneToAnnotations, UnoccludedSinglePallet) {
  for (double yaw : {0.0, 0.3, 0.8, 1.5, 2.4, -2.0}) {
    auto s = single_pallet_scene();
    s.pallets[0].yaw = yaw;
    const auto render = pb::rasterize_scene(s);
    const auto [record, anns] = pb::scene_to_annotations(s, render, pb::kDefaultMinVisibility);
    const auto bodies = std::count_if(anns.begin(), anns.end(), [](const auto& a) { return a.category_id == pb::kBodyCategoryId; });
    const auto faces = std::count_if(anns.begin(), anns.end(), [](const auto& a) { return a.category_id == pb::kFaceCategoryId; });
    EXPECT_EQ(bodies, 1) << yaw;
    EXPECT_GE(faces, 1) << yaw;
    EXPECT_LE(faces, 2) << yaw;
    for (const auto& a : anns) {
      EXPECT_EQ(a.arrangement, pb::Arrangement::kIndividual);
      EXPECT_DOUBLE_EQ(a.area, static_cast<double>(pb::rle_area(std::get<pb::Rle>(a.segmentation))));
    }
  }
}

TEST(SceneToAnnotations, ZeroThresholdKeepsEveryVisibleInstance) {
  const auto cfg = pbtest::small_config(64, 48);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = pb::generate_scene(cfg, seed);
    const auto render = pb::rasterize_scene(s);
    const auto visible = std::count_if(render.instances.begin(), render.instances.end(),
                                       [](const auto& i) { return i.mask.count() > 0; });
    EXPECT_EQ(static_cast<long>(pb::scene_to_annotations(s, render, 0.0).second.size()), visible);
    EXPECT_LE(pb::scene_to_annotations(s, render, 0.5).second.size(),
              pb::scene_to_annotations(s, render, 0.05).second.size());
  }
}

TEST(ExportDataset, ValidatorCleanAndDeterministic) {
  pbtest::TempDir a("export_a"), b("export_b");
  const auto specs = pb::generate_batch(pbtest::small_config(80, 60), 10, 123, 2);
  const auto d = pb::export_dataset(specs, a.path(), pb::kDefaultMinVisibility, 1);
  pb::export_dataset(specs, b.path(), pb::kDefaultMinVisibility, 4);
  EXPECT_EQ(d.images.size(), 10u);
  EXPECT_TRUE(pb::validate_dataset(pb::load_dataset(a / pb::kAnnotationsFile), a.path()).clean());
  EXPECT_EQ(pb::read_text_file(a / pb::kAnnotationsFile), pb::read_text_file(b / pb::kAnnotationsFile));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(pb::read_text_file(a / pb::scene_image_name(i)), pb::read_text_file(b / pb::scene_image_name(i)));
  }
}

TEST(ExportDataset, HundredScenesYieldMoreThanHundredAnnotations) {
  pbtest::TempDir dir("export_100");
  const auto specs = pb::generate_batch(pb::RandomisationConfig{}, 100, 9);
  const auto d = pb::export_dataset(specs, dir.path());
  EXPECT_EQ(d.images.size(), 100u);
  EXPECT_GT(d.annotations.size(), 100u);
  std::set<std::int64_t> images_with_bodies;
  for (const auto& a : d.annotations) {
    if (a.category_id == pb::kBodyCategoryId) images_with_bodies.insert(a.image_id);
  }
  EXPECT_GT(images_with_bodies.size(), 90u);
}
