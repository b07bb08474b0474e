#pragma once

// 8-bit RGB images, PNG I/O and brightness-reduction augmentations.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <png.h>

#include "palletbench/coco.hpp"
#include "palletbench/error.hpp"
#include "palletbench/io.hpp"
#include "palletbench/parallel.hpp"
#include "palletbench/rng.hpp"

namespace palletbench {

/// Interleaved RGB, row-major, 3 samples per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> samples;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        samples(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

  std::uint8_t* pixel(int row, int col) noexcept {
    return samples.data() + (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                             static_cast<std::size_t>(col)) * 3;
  }
  const std::uint8_t* pixel(int row, int col) const noexcept {
    return samples.data() + (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                             static_cast<std::size_t>(col)) * 3;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads an 8-bit PNG; greyscale and palette images are expanded to RGB.
inline Image load_image(const fs::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error(ErrorCode::kUnsupportedImage, path.string() + ": " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw Error(ErrorCode::kUnsupportedImage, path.string() + ": only 8-bit PNGs are supported");
  }
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.samples.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kUnsupportedImage, path.string() + ": " + msg);
  }
  return img;
}

inline void save_image(const Image& img, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, img.samples.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kIo, path.string() + ": " + msg);
  }
}

inline double mean_brightness(const Image& img) noexcept {
  if (img.samples.empty()) return 0.0;
  const auto sum = std::accumulate(img.samples.begin(), img.samples.end(), std::uint64_t{0});
  return static_cast<double>(sum) / static_cast<double>(img.samples.size());
}

/// s -> floor(s * (100 - d) / 100 + 0.5), in exact integer arithmetic.
constexpr std::uint8_t darken_sample(std::uint8_t s, int d) noexcept {
  return static_cast<std::uint8_t>((static_cast<int>(s) * (100 - d) + 50) / 100);
}

inline Image darken_static(const Image& img, int d) {
  if (d < 0 || d > 100) {
    throw Error(ErrorCode::kDarkenRange, "darkening " + std::to_string(d) + "% outside [0,100]");
  }
  Image out = img;
  for (auto& s : out.samples) s = darken_sample(s, d);
  return out;
}

// ---------------------------------------------------------------------------
// dataset-level darkening

/// Where a dataset lives: its annotation JSON and the root its image
/// file_names are relative to.
struct DatasetLocation {
  fs::path annotations;
  fs::path images_root;
};

inline constexpr const char* kAnnotationsFile = "annotations.json";
inline constexpr const char* kDarkenManifestFile = "darken_manifest.json";

/// A directory means <dir>/annotations.json with images under <dir>; a file
/// means that JSON with images under its parent (unless a root is given).
inline DatasetLocation locate_dataset(const fs::path& path,
                                      const std::optional<fs::path>& images_root = std::nullopt) {
  DatasetLocation loc;
  if (fs::is_directory(path)) {
    loc.annotations = path / kAnnotationsFile;
    loc.images_root = path;
  } else {
    loc.annotations = path;
    loc.images_root = path.has_parent_path() ? path.parent_path() : fs::path(".");
  }
  if (images_root) loc.images_root = *images_root;
  return loc;
}

struct DarkenEntry {
  std::string file_name;
  int d = 0;

  friend bool operator==(const DarkenEntry&, const DarkenEntry&) = default;
};

struct DarkenManifest {
  std::uint64_t master_seed = 0;
  int d_max = 0;
  std::vector<DarkenEntry> entries;

  friend bool operator==(const DarkenManifest&, const DarkenManifest&) = default;
};

inline std::string serialize_manifest(const DarkenManifest& m) {
  Json entries = Json::array();
  for (const auto& e : m.entries) entries.push_back({{"d", e.d}, {"file_name", e.file_name}});
  Json doc = {{"d_max", m.d_max}, {"entries", std::move(entries)}, {"master_seed", m.master_seed}};
  return doc.dump(1) + "\n";
}

namespace detail {

// Darkens image i by levels[i] into out_dir, mirroring relative paths, and
// copies the annotation JSON byte for byte.
inline Dataset darken_dataset(const DatasetLocation& src, const std::vector<int>& levels,
                              const Dataset& d, const fs::path& out_dir, unsigned workers) {
  for (const auto& r : d.images) {
    if (!fs::exists(src.images_root / r.file_name)) {
      throw Error(ErrorCode::kIo, "missing image file " + (src.images_root / r.file_name).string());
    }
  }
  fs::create_directories(out_dir);
  parallel_for(d.images.size(), workers, [&](std::size_t i) {
    const auto& r = d.images[i];
    const Image img = load_image(src.images_root / r.file_name);
    save_image(levels[i] == 0 ? img : darken_static(img, levels[i]), out_dir / r.file_name);
  });
  write_text_file(out_dir / kAnnotationsFile, read_text_file(src.annotations));
  return d;
}

}  // namespace detail

/// Every image darkened by `d`; annotations copied unchanged to
/// out_dir/annotations.json.
inline Dataset darken_dataset_static(const DatasetLocation& src, int d, const fs::path& out_dir,
                                     unsigned workers = default_workers()) {
  if (d < 0 || d > 100) {
    throw Error(ErrorCode::kDarkenRange, "darkening " + std::to_string(d) + "% outside [0,100]");
  }
  const Dataset dataset = load_dataset(src.annotations);
  return detail::darken_dataset(src, std::vector<int>(dataset.images.size(), d), dataset, out_dir,
                                workers);
}

/// Image i (in `images` order) is darkened by splitmix64_at(seed, i) mod
/// (d_max + 1). The draws are recorded in out_dir/darken_manifest.json.
inline std::pair<Dataset, DarkenManifest> darken_dataset_random(
    const DatasetLocation& src, int d_max, std::uint64_t master_seed, const fs::path& out_dir,
    unsigned workers = default_workers()) {
  if (d_max < 0 || d_max > 100) {
    throw Error(ErrorCode::kDarkenRange, "d_max " + std::to_string(d_max) + "% outside [0,100]");
  }
  const Dataset dataset = load_dataset(src.annotations);
  DarkenManifest manifest{master_seed, d_max, {}};
  std::vector<int> levels;
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const int d = static_cast<int>(splitmix64_at(master_seed, i) % static_cast<std::uint64_t>(d_max + 1));
    levels.push_back(d);
    manifest.entries.push_back({dataset.images[i].file_name, d});
  }
  Dataset out = detail::darken_dataset(src, levels, dataset, out_dir, workers);
  write_text_file(out_dir / kDarkenManifestFile, serialize_manifest(manifest));
  return {std::move(out), std::move(manifest)};
}

}  // namespace palletbench
