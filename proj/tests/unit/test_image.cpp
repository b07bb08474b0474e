#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "palletbench/image.hpp"

namespace pb = palletbench;
namespace fs = std::filesystem;

namespace {

void write_png_raw(const fs::path& path, int w, int h, png_uint_32 format, const void* data) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = format;
  ASSERT_TRUE(png_image_write_to_file(&png, path.string().c_str(), 0, data, 0, nullptr)) << png.message;
}

pb::Image gradient(int w, int h) {
  pb::Image img(w, h);
  for (std::size_t i = 0; i < img.samples.size(); ++i) img.samples[i] = static_cast<std::uint8_t>((i * 37) % 256);
  return img;
}

// Writes a dataset of `n` small images plus annotations.json under root.
pb::Dataset write_dataset(const fs::path& root, int n) {
  pb::Dataset d;
  d.categories = pbtest::two_categories();
  for (int i = 0; i < n; ++i) {
    d.images.push_back({i + 1, "img/" + std::to_string(i) + ".png", 5, 4, pb::Json::object()});
    pb::Image img = gradient(5, 4);
    img.samples[0] = static_cast<std::uint8_t>(i);
    pb::save_image(img, root / d.images.back().file_name);
  }
  pb::save_dataset(d, root / pb::kAnnotationsFile);
  return d;
}

}  // namespace

TEST(ImageIo, WhitePixel) {
  pbtest::TempDir dir("img_white");
  pb::save_image(pb::Image(1, 1, 255), dir / "w.png");
  EXPECT_EQ(pb::load_image(dir / "w.png").samples, (std::vector<std::uint8_t>{255, 255, 255}));
}

TEST(ImageIo, GreyscaleExpanded) {
  pbtest::TempDir dir("img_grey");
  const std::uint8_t v = 7;
  write_png_raw(dir / "g.png", 1, 1, PNG_FORMAT_GRAY, &v);
  EXPECT_EQ(pb::load_image(dir / "g.png").samples, (std::vector<std::uint8_t>{7, 7, 7}));
}

TEST(ImageIo, RoundTrip) {
  pbtest::TempDir dir("img_rt");
  const auto img = gradient(17, 9);
  pb::save_image(img, dir / "a.png");
  const auto loaded = pb::load_image(dir / "a.png");
  EXPECT_EQ(loaded, img);
  pb::save_image(loaded, dir / "b.png");
  EXPECT_EQ(pb::read_text_file(dir / "a.png"), pb::read_text_file(dir / "b.png"));
}

TEST(ImageIo, SixteenBitRejected) {
  pbtest::TempDir dir("img_16");
  const std::uint16_t px[3] = {1000, 2000, 3000};
  write_png_raw(dir / "deep.png", 1, 1, PNG_FORMAT_LINEAR_RGB, px);
  try {
    pb::load_image(dir / "deep.png");
    FAIL();
  } catch (const pb::Error& e) {
    EXPECT_EQ(e.code(), pb::ErrorCode::kUnsupportedImage);
  }
}

TEST(ImageIo, TruncatedRejected) {
  pbtest::TempDir dir("img_trunc");
  pb::save_image(gradient(40, 40), dir / "a.png");
  const auto bytes = pb::read_text_file(dir / "a.png");
  pb::write_text_file(dir / "t.png", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(pb::load_image(dir / "t.png"), pb::Error);
  pb::write_text_file(dir / "junk.png", "not a png");
  EXPECT_THROW(pb::load_image(dir / "junk.png"), pb::Error);
}

TEST(DarkenStatic, Examples) {
  const auto img = gradient(6, 5);
  EXPECT_EQ(pb::darken_static(img, 0), img);
  for (auto s : pb::darken_static(img, 100).samples) EXPECT_EQ(s, 0);
  EXPECT_EQ(pb::darken_sample(200, 25), 150);
  EXPECT_THROW(pb::darken_static(img, 101), pb::Error);
  EXPECT_THROW(pb::darken_static(img, -1), pb::Error);
}

TEST(DarkenStatic, ExhaustiveAgainstFloorFormula) {
  for (int d = 0; d <= 100; ++d) {
    for (int s = 0; s < 256; ++s) {
      const auto expected = static_cast<int>(std::floor(s * (100 - d) / 100.0 + 0.5));
      ASSERT_EQ(pb::darken_sample(static_cast<std::uint8_t>(s), d), expected) << s << " " << d;
    }
  }
}

TEST(DarkenStatic, MonotoneAndBounded) {
  const auto img = gradient(16, 16);
  const double base = pb::mean_brightness(img);
  for (int d = 0; d < 100; ++d) {
    const auto a = pb::darken_static(img, d), b = pb::darken_static(img, d + 1);
    for (std::size_t i = 0; i < a.samples.size(); ++i) ASSERT_GE(a.samples[i], b.samples[i]);
    EXPECT_LE(pb::mean_brightness(a), base * (100 - d) / 100.0 + 0.5);
    EXPECT_EQ(pb::darken_static(pb::darken_static(img, 0), d), a);
  }
}

TEST(MeanBrightness, Extremes) {
  EXPECT_DOUBLE_EQ(pb::mean_brightness(pb::Image(3, 2, 0)), 0.0);
  EXPECT_DOUBLE_EQ(pb::mean_brightness(pb::Image(3, 2, 255)), 255.0);
}

TEST(DarkenDataset, StaticMatchesImagewise) {
  pbtest::TempDir src("dd_src"), out("dd_out");
  const auto d = write_dataset(src.path(), 4);
  pb::darken_dataset_static(pb::locate_dataset(src.path()), 25, out.path(), 2);
  EXPECT_EQ(pb::read_text_file(out / pb::kAnnotationsFile), pb::read_text_file(src / pb::kAnnotationsFile));
  for (const auto& r : d.images) {
    EXPECT_EQ(pb::load_image(out / r.file_name), pb::darken_static(pb::load_image(src / r.file_name), 25));
  }
}

TEST(DarkenDataset, ZeroIsIdentity) {
  pbtest::TempDir src("dz_src"), out("dz_out");
  const auto d = write_dataset(src.path(), 3);
  pb::darken_dataset_static(pb::locate_dataset(src.path()), 0, out.path(), 1);
  for (const auto& r : d.images) EXPECT_EQ(pb::load_image(out / r.file_name), pb::load_image(src / r.file_name));
}

TEST(DarkenDataset, MissingImage) {
  pbtest::TempDir src("dm_src"), out("dm_out");
  write_dataset(src.path(), 2);
  fs::remove(src / "img/1.png");
  try {
    pb::darken_dataset_static(pb::locate_dataset(src.path()), 10, out.path(), 1);
    FAIL();
  } catch (const pb::Error& e) {
    EXPECT_EQ(e.code(), pb::ErrorCode::kIo);
  }
}

TEST(DarkenDataset, RandomDrawsFollowStream) {
  pbtest::TempDir src("dr_src"), out1("dr_out1"), out2("dr_out2");
  const auto d = write_dataset(src.path(), 6);
  const auto [ds1, m1] = pb::darken_dataset_random(pb::locate_dataset(src.path()), 60, 9, out1.path(), 3);
  const auto [ds2, m2] = pb::darken_dataset_random(pb::locate_dataset(src.path()), 60, 9, out2.path(), 1);
  EXPECT_EQ(m1, m2);
  ASSERT_EQ(m1.entries.size(), 6u);
  pb::SplitMix64 stream(9);
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    EXPECT_EQ(m1.entries[i].file_name, d.images[i].file_name);
    EXPECT_EQ(m1.entries[i].d, static_cast<int>(stream.next() % 61));
    EXPECT_LE(m1.entries[i].d, 60);
    EXPECT_EQ(pb::load_image(out1 / d.images[i].file_name), pb::load_image(out2 / d.images[i].file_name));
    EXPECT_EQ(pb::load_image(out1 / d.images[i].file_name),
              pb::darken_static(pb::load_image(src / d.images[i].file_name), m1.entries[i].d));
  }
  EXPECT_EQ(pb::read_text_file(out1 / pb::kDarkenManifestFile), pb::read_text_file(out2 / pb::kDarkenManifestFile));
}

TEST(DarkenDataset, RandomZeroMaxIsIdentity) {
  pbtest::TempDir src("dr0_src"), out("dr0_out");
  const auto d = write_dataset(src.path(), 3);
  const auto [ds, m] = pb::darken_dataset_random(pb::locate_dataset(src.path()), 0, 5, out.path(), 1);
  for (const auto& e : m.entries) EXPECT_EQ(e.d, 0);
  for (const auto& r : d.images) EXPECT_EQ(pb::load_image(out / r.file_name), pb::load_image(src / r.file_name));
}

TEST(DarkenDataset, RandomMeanOverThousandImages) {
  pbtest::TempDir src("drm_src"), out("drm_out");
  pb::Dataset d;
  d.categories = pbtest::two_categories();
  pb::save_image(pb::Image(1, 1, 128), src / "one.png");
  for (int i = 0; i < 1000; ++i) {
    d.images.push_back({i + 1, "img" + std::to_string(i) + ".png", 1, 1, pb::Json::object()});
    fs::copy_file(src / "one.png", src / d.images.back().file_name);
  }
  pb::save_dataset(d, src / pb::kAnnotationsFile);
  const auto [ds, m] = pb::darken_dataset_random(pb::locate_dataset(src.path()), 60, 42, out.path(), 4);
  double sum = 0;
  for (const auto& e : m.entries) sum += e.d;
  EXPECT_GE(sum / 1000, 27.0);
  EXPECT_LE(sum / 1000, 33.0);
}

TEST(DarkenDataset, RangeErrors) {
  pbtest::TempDir src("dre_src"), out("dre_out");
  write_dataset(src.path(), 1);
  EXPECT_THROW(pb::darken_dataset_static(pb::locate_dataset(src.path()), 150, out.path(), 1), pb::Error);
  EXPECT_THROW(pb::darken_dataset_random(pb::locate_dataset(src.path()), -5, 1, out.path(), 1), pb::Error);
}
