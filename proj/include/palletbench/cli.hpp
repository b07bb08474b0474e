#pragma once

// Command-line front end. Each subcommand prints one JSON summary line on
// stdout; diagnostics go to stderr. Exit codes: 0 success, 1 operational
// failure, 2 usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "palletbench/coco.hpp"
#include "palletbench/eval.hpp"
#include "palletbench/experiment.hpp"
#include "palletbench/image.hpp"
#include "palletbench/io.hpp"
#include "palletbench/render.hpp"
#include "palletbench/scene.hpp"

namespace palletbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

namespace detail {

struct Options {
  std::string dataset;
  std::vector<std::string> datasets;
  std::string images_root;
  std::string predictions;
  std::vector<std::string> prediction_pair;
  std::string config;
  std::string scenes;
  std::string out;
  std::string manifest;
  std::string command;
  std::string metric = "map50";
  std::string direction = "maximize";
  std::uint64_t seed = 0;
  std::size_t count = 1;
  int darken = 0;
  bool random = false;
  bool execute = false;
  std::vector<int> levels{0, 20, 40, 60, 80};
  std::vector<double> iou{0.5};
  std::string mode = "mask";
  std::string grouping = "by_class";
  int max_dets = 100;
  double min_visibility = kDefaultMinVisibility;
  int jitter_px = 0;
  unsigned workers = default_workers();
};

inline std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

inline DatasetLocation dataset_location(const Options& o) {
  return locate_dataset(o.dataset, optional_path(o.images_root));
}

inline EvalConfig eval_config(const Options& o) {
  EvalConfig cfg;
  cfg.iou_thresholds = o.iou;
  cfg.mode = parse_iou_mode(o.mode);
  cfg.grouping = parse_grouping(o.grouping);
  cfg.max_detections_per_image = o.max_dets;
  try {
    validate_eval_config(cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline void emit(Streams& s, const Json& summary) { s.out << summary.dump() << '\n'; }

// ---------------------------------------------------------------------------
// subcommands

inline int cmd_validate(const Options& o, Streams& s) {
  const auto loc = dataset_location(o);
  const Dataset d = load_dataset(loc.annotations);
  const auto report = validate_dataset(d, loc.images_root);
  for (const auto& def : report.defects) s.err << to_string(def.code) << ": " << def.message << '\n';
  if (!o.out.empty()) {
    Json defects = Json::array();
    for (const auto& def : report.defects) {
      defects.push_back({{"code", to_string(def.code)}, {"message", def.message}, {"ids", def.ids}});
    }
    write_text_file(fs::path(o.out) / "validation.json", Json{{"defects", std::move(defects)}}.dump(1) + "\n");
  }
  Json summary = {{"defects", report.defects.size()}};
  if (!report.clean()) summary["by_code"] = report.counts();
  emit(s, summary);
  return kExitOk;
}

inline RandomisationConfig randomisation_config(const Options& o) {
  return o.config.empty() ? RandomisationConfig{} : parse_config(read_text_file(o.config));
}

inline std::string scene_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu.json", i);
  return buf;
}

inline int cmd_generate(const Options& o, Streams& s) {
  const auto cfg = randomisation_config(o);
  const std::uint64_t seed = resolve_seed(o.seed);
  const auto scenes = generate_batch(cfg, o.count, seed, o.workers);
  const fs::path out(o.out);
  write_text_file(out / "config.json", config_to_json(cfg).dump(1) + "\n");
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    write_text_file(out / "scenes" / scene_file_name(i), serialize_scene(scenes[i]));
  }
  emit(s, {{"scenes", scenes.size()}, {"seed", seed}, {"out", out.string()}});
  return kExitOk;
}

inline int cmd_export(const Options& o, Streams& s) {
  std::vector<SceneSpec> scenes;
  if (!o.scenes.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(o.scenes)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::kIo, "no scene files in " + o.scenes);
    for (const auto& f : files) scenes.push_back(parse_scene(read_text_file(f)));
  } else {
    scenes = generate_batch(randomisation_config(o), o.count, resolve_seed(o.seed), o.workers);
  }
  for (const auto& sc : scenes) validate_scene(sc);
  const Dataset d = export_dataset(scenes, o.out, o.min_visibility, o.workers);
  emit(s, {{"images", d.images.size()}, {"annotations", d.annotations.size()}, {"out", o.out}});
  return kExitOk;
}

inline int cmd_darken(const Options& o, Streams& s) {
  const auto loc = dataset_location(o);
  if (o.random) {
    const std::uint64_t seed = resolve_seed(o.seed);
    const auto [d, manifest] = darken_dataset_random(loc, o.darken, seed, o.out, o.workers);
    emit(s, {{"images", d.images.size()}, {"d_max", o.darken}, {"seed", seed}, {"out", o.out}});
  } else {
    const Dataset d = darken_dataset_static(loc, o.darken, o.out, o.workers);
    emit(s, {{"images", d.images.size()}, {"darken", o.darken}, {"out", o.out}});
  }
  return kExitOk;
}

inline int cmd_sweep(const Options& o, Streams& s) {
  SweepConfig cfg;
  cfg.levels = o.levels;
  cfg.eval = eval_config(o);
  cfg.workers = o.workers;
  if (!o.command.empty()) {
    cfg.detector.mock.reset();
    cfg.detector.command_template = o.command;
  } else {
    MockDetectorConfig mock =
        o.config.empty() ? MockDetectorConfig{} : parse_mock(Json::parse(read_text_file(o.config)));
    mock.seed = resolve_seed(o.seed);
    if (o.jitter_px > 0) mock.jitter_px = o.jitter_px;
    cfg.detector.mock = mock;
  }
  try {
    validate_levels(cfg.levels);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto table = darkening_sweep(dataset_location(o), cfg, o.out);
  Json rows = Json::array();
  std::size_t failed = 0;
  for (const auto& r : table.rows) {
    if (r.failed) {
      ++failed;
      rows.push_back({{"darkening_percent", r.level}, {"map50", "FAILED"}});
    } else {
      rows.push_back({{"darkening_percent", r.level}, {"map50", quantize(r.map50)}});
    }
  }
  emit(s, {{"rows", std::move(rows)}, {"failed", failed}, {"curve", (fs::path(o.out) / "curve.csv").string()}});
  return kExitOk;
}

inline int cmd_evaluate(const Options& o, Streams& s) {
  const EvalConfig cfg = eval_config(o);
  const Dataset d = load_dataset(dataset_location(o).annotations);
  const PredictionSet p = parse_predictions(read_text_file(o.predictions), d);
  const EvalReport report = evaluate(d, p, cfg);
  if (!o.out.empty()) {
    write_text_file(fs::path(o.out) / "eval.json", report_to_json(report).dump(1) + "\n");
    write_text_file(fs::path(o.out) / "eval.csv", report_to_csv(report));
  }
  Json maps = Json::array();
  for (const auto& [t, m] : report.map) maps.push_back({{"threshold", quantize(t)}, {"map", quantize(m)}});
  Json summary = {{"map", std::move(maps)}, {"groups", report.groups.size() / report.map.size()}};
  summary["map50"] = report.map50 ? Json(quantize(*report.map50)) : Json(nullptr);
  emit(s, summary);
  return kExitOk;
}

inline int cmd_stability(const Options& o, Streams& s) {
  if (o.prediction_pair.size() != 2) throw UsageError("stability needs exactly two --predictions files");
  if (o.iou.size() != 1) throw UsageError("stability takes a single --iou floor");
  const Dataset d = load_dataset(dataset_location(o).annotations);
  const auto a = parse_predictions(read_text_file(o.prediction_pair[0]), d);
  const auto b = parse_predictions(read_text_file(o.prediction_pair[1]), d);
  const auto rep = stability_compare(a, b, d, o.iou.front());
  if (!o.out.empty()) write_text_file(fs::path(o.out) / "stability.json", stability_to_json(rep).dump(1) + "\n");
  emit(s, {{"matched_fraction", quantize(rep.matched_fraction)},
           {"mean_matched_iou", quantize(rep.mean_matched_iou)},
           {"matched", rep.matched}});
  return kExitOk;
}

inline int cmd_grid_expand(const Options& o, Streams& s) {
  const GridSpec g = parse_grid(read_text_file(o.config));
  const RunManifest m = expand_grid(g, o.out);
  write_text_file(fs::path(o.out) / "manifest.json", manifest_to_json(m).dump(1) + "\n");
  Json summary = {{"runs", m.runs.size()}, {"manifest", (fs::path(o.out) / "manifest.json").string()}};
  if (o.execute) {
    const auto status = execute_runs(m, o.workers);
    summary["nonzero_exit"] = std::count_if(status.begin(), status.end(), [](int x) { return x != 0; });
  }
  emit(s, summary);
  return kExitOk;
}

inline int cmd_grid_collect(const Options& o, Streams& s) {
  const fs::path manifest_path = o.manifest.empty() ? fs::path(o.out) / "manifest.json" : fs::path(o.manifest);
  const RunManifest m = parse_manifest(read_text_file(manifest_path));
  const ResultsTable t = collect_results(m);
  for (const auto& r : t.rows) {
    if (r.failed) s.err << "run " << r.run_id << " FAILED: " << r.note << '\n';
  }
  Json doc = results_to_json(t);
  Json summary = {{"rows", t.rows.size()},
                  {"failed", std::count_if(t.rows.begin(), t.rows.end(), [](const auto& r) { return r.failed; })}};
  try {
    const std::size_t best = select_best(t, o.metric, parse_direction(o.direction));
    doc["best_run"] = best;
    summary["best_run"] = best;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoValidRuns) throw;
    s.err << e.what() << '\n';
    doc["best_run"] = nullptr;
    summary["best_run"] = nullptr;
  }
  doc["metric"] = o.metric;
  doc["direction"] = o.direction;
  write_text_file(fs::path(o.out) / "results.json", doc.dump(1) + "\n");
  emit(s, summary);
  return kExitOk;
}

inline int cmd_mock_detect(const Options& o, Streams& s) {
  const auto loc = dataset_location(o);
  const Dataset d = load_dataset(loc.annotations);
  MockDetectorConfig cfg = o.config.empty() ? MockDetectorConfig{} : parse_mock(Json::parse(read_text_file(o.config)));
  cfg.seed = resolve_seed(o.seed);
  if (o.jitter_px > 0) cfg.jitter_px = o.jitter_px;
  const auto p = mock_detect(d, loc.images_root, cfg, o.workers);
  write_text_file(fs::path(o.out) / "predictions.json", serialize_predictions(p));
  emit(s, {{"instances", p.instances.size()}, {"seed", cfg.seed}, {"out", o.out}});
  return kExitOk;
}

inline int cmd_merge(const Options& o, Streams& s) {
  if (o.datasets.size() != 2) throw UsageError("merge needs exactly two --dataset files");
  const Dataset a = load_dataset(locate_dataset(o.datasets[0]).annotations);
  const Dataset b = load_dataset(locate_dataset(o.datasets[1]).annotations);
  const Dataset m = merge_datasets(a, b);
  save_dataset(m, fs::path(o.out) / kAnnotationsFile);
  emit(s, {{"images", m.images.size()}, {"categories", m.categories.size()}, {"annotations", m.annotations.size()}});
  return kExitOk;
}

}  // namespace detail

/// Parses and dispatches one invocation. argv[0] is the program name.
inline int run(int argc, const char* const* argv, Streams streams = {}) {
  using detail::Options;
  Options o;
  CLI::App app{"Synthetic pallet datasets, brightness augmentation and COCO evaluation"};
  app.name("palletbench");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const std::vector<std::string> modes{"mask", "bbox"};
  const std::vector<std::string> groupings{"by_class", "by_arrangement", "by_class_and_arrangement"};
  auto workers = [&](CLI::App* c) {
    c->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto dataset = [&](CLI::App* c, bool required = true) {
    auto* opt = c->add_option("--dataset", o.dataset, "Annotation JSON, or a directory holding annotations.json");
    if (required) opt->required();
    c->add_option("--images-root", o.images_root, "Directory image file_names are relative to");
  };
  auto eval_flags = [&](CLI::App* c) {
    c->add_option("--iou", o.iou, "IoU thresholds, comma separated, strictly increasing")->delimiter(',');
    c->add_option("--mode", o.mode, "IoU mode")->check(CLI::IsMember(modes));
    c->add_option("--grouping", o.grouping, "AP grouping")->check(CLI::IsMember(groupings));
    c->add_option("--max-dets", o.max_dets, "Detections kept per image and category")->check(CLI::NonNegativeNumber);
  };

  auto* validate = app.add_subcommand("validate", "Lint a COCO dataset");
  dataset(validate);
  validate->add_option("--out", o.out, "Directory for validation.json (optional)");

  auto* generate = app.add_subcommand("generate", "Sample randomised scene specifications");
  generate->add_option("--config", o.config, "Randomisation config JSON (defaults if omitted)");
  generate->add_option("--count", o.count, "Number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--seed", o.seed, "Master seed");
  generate->add_option("--out", o.out, "Output directory")->required();
  workers(generate);

  auto* exp = app.add_subcommand("export", "Render scenes and write a COCO dataset");
  exp->add_option("--scenes", o.scenes, "Directory of scene JSON files (otherwise scenes are generated)");
  exp->add_option("--config", o.config, "Randomisation config JSON when generating");
  exp->add_option("--count", o.count, "Number of scenes when generating")->check(CLI::PositiveNumber);
  exp->add_option("--seed", o.seed, "Master seed when generating");
  exp->add_option("--min-visibility", o.min_visibility, "Minimum visible fraction of an instance")
      ->check(CLI::Range(0.0, 1.0));
  exp->add_option("--out", o.out, "Output directory")->required();
  workers(exp);

  auto* darken = app.add_subcommand("darken", "Darken every image of a dataset");
  dataset(darken);
  darken->add_option("--darken", o.darken, "Darkening percent (maximum percent with --random)")->required();
  darken->add_flag("--random", o.random, "Per-image percent drawn from [0, --darken]");
  darken->add_option("--seed", o.seed, "Master seed for --random");
  darken->add_option("--out", o.out, "Output directory")->required();
  workers(darken);

  auto* sweep = app.add_subcommand("sweep-darken", "Evaluate a detector across darkening levels");
  dataset(sweep);
  sweep->add_option("--levels", o.levels, "Darkening percents, comma separated")->delimiter(',');
  sweep->add_option("--config", o.config, "Mock detector config JSON");
  sweep->add_option("--command", o.command,
                    "External detector argv template with {dataset}, {predictions}, {level}");
  sweep->add_option("--seed", o.seed, "Mock detector seed");
  sweep->add_option("--jitter-px", o.jitter_px, "Mock detector mask jitter")->check(CLI::NonNegativeNumber);
  eval_flags(sweep);
  sweep->add_option("--out", o.out, "Output directory")->required();
  workers(sweep);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "COCO-style mAP of predictions against a dataset");
  dataset(evaluate_cmd);
  evaluate_cmd->add_option("--predictions", o.predictions, "Prediction JSON")->required();
  eval_flags(evaluate_cmd);
  evaluate_cmd->add_option("--out", o.out, "Directory for eval.json and eval.csv (optional)");

  auto* stability = app.add_subcommand("stability", "Compare two prediction sets on the same dataset");
  dataset(stability);
  stability->add_option("--predictions", o.prediction_pair, "Two prediction JSON files")->required();
  stability->add_option("--iou", o.iou, "Mask IoU floor for a pair")->delimiter(',');
  stability->add_option("--out", o.out, "Directory for stability.json (optional)");

  auto* grid_expand = app.add_subcommand("grid-expand", "Expand a hyper-parameter grid into runs");
  grid_expand->add_option("--config", o.config, "Grid spec JSON")->required();
  grid_expand->add_option("--out", o.out, "Output directory")->required();
  grid_expand->add_flag("--execute", o.execute, "Run every command after expansion");
  workers(grid_expand);

  auto* grid_collect = app.add_subcommand("grid-collect", "Collect run metrics and pick the best run");
  grid_collect->add_option("--manifest", o.manifest, "Run manifest (default <out>/manifest.json)");
  grid_collect->add_option("--metric", o.metric, "Metric to rank by");
  grid_collect->add_option("--direction", o.direction, "maximize or minimize")
      ->check(CLI::IsMember({"maximize", "minimize"}));
  grid_collect->add_option("--out", o.out, "Output directory")->required();

  auto* mock = app.add_subcommand("mock-detect", "Brightness-sensitive mock detector");
  dataset(mock);
  mock->add_option("--config", o.config, "Mock detector config JSON");
  mock->add_option("--seed", o.seed, "Detector seed");
  mock->add_option("--jitter-px", o.jitter_px, "Mask translation in pixels")->check(CLI::NonNegativeNumber);
  mock->add_option("--out", o.out, "Output directory")->required();
  workers(mock);

  auto* merge = app.add_subcommand("merge", "Merge two COCO datasets");
  merge->add_option("--dataset", o.datasets, "Two annotation files")->required();
  merge->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, streams.out, streams.err);
      return kExitOk;
    }
    streams.err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return detail::cmd_validate(o, streams);
    if (generate->parsed()) return detail::cmd_generate(o, streams);
    if (exp->parsed()) return detail::cmd_export(o, streams);
    if (darken->parsed()) return detail::cmd_darken(o, streams);
    if (sweep->parsed()) return detail::cmd_sweep(o, streams);
    if (evaluate_cmd->parsed()) return detail::cmd_evaluate(o, streams);
    if (stability->parsed()) return detail::cmd_stability(o, streams);
    if (grid_expand->parsed()) return detail::cmd_grid_expand(o, streams);
    if (grid_collect->parsed()) return detail::cmd_grid_collect(o, streams);
    if (mock->parsed()) return detail::cmd_mock_detect(o, streams);
    if (merge->parsed()) return detail::cmd_merge(o, streams);
  } catch (const UsageError& e) {
    streams.err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    streams.err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    streams.err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

inline int run(const std::vector<std::string>& args, Streams streams = {}) {
  std::vector<const char*> argv{"palletbench"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), streams);
}

}  // namespace palletbench::cli
