#pragma once

// Experiment orchestration: grid expansion over external commands, result
// collection, the brightness-sensitive mock detector and the darkening sweep.

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "palletbench/coco.hpp"
#include "palletbench/eval.hpp"
#include "palletbench/image.hpp"
#include "palletbench/io.hpp"
#include "palletbench/parallel.hpp"
#include "palletbench/rng.hpp"

extern char** environ;

namespace palletbench {

// ---------------------------------------------------------------------------
// template rendering

/// Substitutes `{name}` placeholders from `values`; `{{` and `}}` are literal
/// braces. Throws kUnknownPlaceholder for names not in `values`.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if ((c == '{' || c == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == c) {
      out += c;
      ++i;
      continue;
    }
    if (c != '{') {
      if (c == '}') throw Error(ErrorCode::kInvalidConfig, "unbalanced '}' in template");
      out += c;
      continue;
    }
    const auto close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "unterminated '{' in template");
    const std::string name(tmpl.substr(i + 1, close - i - 1));
    auto it = values.find(name);
    if (it == values.end()) throw Error(ErrorCode::kUnknownPlaceholder, "unknown placeholder {" + name + "}");
    out += it->second;
    i = close;
  }
  return out;
}

/// Splits on whitespace first and substitutes per token, so substituted
/// values never split into extra arguments.
inline std::vector<std::string> render_argv(std::string_view tmpl,
                                            const std::map<std::string, std::string>& values) {
  std::vector<std::string> argv;
  std::istringstream is{std::string(tmpl)};
  std::string token;
  while (is >> token) argv.push_back(render_template(token, values));
  if (argv.empty()) throw Error(ErrorCode::kInvalidConfig, "empty command template");
  return argv;
}

// ---------------------------------------------------------------------------
// grid search

struct GridSpec {
  std::map<std::string, std::vector<Json>> parameters;  // values: strings or numbers
  std::string command_template;
  std::string metric_path_template;
};

inline constexpr std::string_view kRunDirPlaceholder = "run_dir";

/// Text substituted for a parameter value.
inline std::string value_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw Error(ErrorCode::kInvalidConfig, "grid values must be strings or numbers");
}

inline void validate_grid(const GridSpec& g) {
  if (g.parameters.empty()) throw Error(ErrorCode::kInvalidConfig, "grid has no parameters");
  std::map<std::string, std::string> probe{{std::string(kRunDirPlaceholder), "x"}};
  for (const auto& [name, values] : g.parameters) {
    if (name == kRunDirPlaceholder) throw Error(ErrorCode::kInvalidConfig, "parameter name 'run_dir' is reserved");
    if (values.empty()) throw Error(ErrorCode::kInvalidConfig, "parameter '" + name + "' has no values");
    for (const auto& v : values) value_text(v);
    probe[name] = "x";
  }
  render_argv(g.command_template, probe);
  if (g.metric_path_template.empty()) throw Error(ErrorCode::kInvalidConfig, "empty metric_path_template");
  render_template(g.metric_path_template, probe);
}

inline GridSpec parse_grid(std::string_view text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kMalformedJson, "grid spec is not a JSON object");
  GridSpec g;
  const auto& params = detail::require(j, "parameters", "grid");
  if (!params.is_object()) throw Error(ErrorCode::kInvalidConfig, "grid parameters must be an object");
  for (const auto& [name, values] : params.items()) {
    if (!values.is_array()) throw Error(ErrorCode::kInvalidConfig, "parameter '" + name + "' must list values");
    g.parameters[name] = values.get<std::vector<Json>>();
  }
  const auto& cmd = detail::require(j, "command_template", "grid");
  const auto& metric = detail::require(j, "metric_path_template", "grid");
  if (!cmd.is_string() || !metric.is_string()) throw Error(ErrorCode::kInvalidConfig, "templates must be strings");
  g.command_template = cmd.get<std::string>();
  g.metric_path_template = metric.get<std::string>();
  validate_grid(g);
  return g;
}

inline Json grid_to_json(const GridSpec& g) {
  Json params = Json::object();
  for (const auto& [name, values] : g.parameters) params[name] = values;
  return {{"parameters", std::move(params)},
          {"command_template", g.command_template},
          {"metric_path_template", g.metric_path_template}};
}

struct RunConfig {
  std::size_t run_id = 0;
  std::vector<std::pair<std::string, Json>> assignment;  // sorted by name
  std::vector<std::string> argv;
  fs::path run_dir;
  fs::path metric_path;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct RunManifest {
  std::vector<RunConfig> runs;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

inline std::string run_dir_name(std::size_t run_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04zu", run_id);
  return buf;
}

/// Cartesian product with parameters in name order and the first name
/// varying slowest. Run directories are out_dir/run_NNNN; a relative metric
/// path resolves against its run directory.
inline RunManifest expand_grid(const GridSpec& g, const fs::path& out_dir) {
  validate_grid(g);
  std::vector<const std::pair<const std::string, std::vector<Json>>*> params;
  std::size_t total = 1;
  for (const auto& p : g.parameters) {
    params.push_back(&p);
    total *= p.second.size();
  }
  const fs::path base = fs::absolute(out_dir).lexically_normal();
  RunManifest m;
  m.runs.reserve(total);
  std::vector<std::size_t> digit(params.size(), 0);
  for (std::size_t id = 0; id < total; ++id) {
    RunConfig run;
    run.run_id = id;
    run.run_dir = base / run_dir_name(id);
    std::map<std::string, std::string> values{{std::string(kRunDirPlaceholder), run.run_dir.string()}};
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Json& v = params[k]->second[digit[k]];
      run.assignment.emplace_back(params[k]->first, v);
      values[params[k]->first] = value_text(v);
    }
    run.argv = render_argv(g.command_template, values);
    const fs::path metric = render_template(g.metric_path_template, values);
    run.metric_path = metric.is_absolute() ? metric : run.run_dir / metric;
    m.runs.push_back(std::move(run));
    for (std::size_t k = params.size(); k-- > 0;) {
      if (++digit[k] < params[k]->second.size()) break;
      digit[k] = 0;
    }
  }
  return m;
}

inline Json manifest_to_json(const RunManifest& m) {
  Json runs = Json::array();
  for (const auto& r : m.runs) {
    Json assignment = Json::object();
    for (const auto& [k, v] : r.assignment) assignment[k] = v;
    runs.push_back({{"run_id", r.run_id},
                    {"parameters", std::move(assignment)},
                    {"argv", r.argv},
                    {"run_dir", r.run_dir.string()},
                    {"metric_path", r.metric_path.string()}});
  }
  return {{"runs", std::move(runs)}};
}

inline RunManifest parse_manifest(std::string_view text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kMalformedJson, "manifest is not a JSON object");
  RunManifest m;
  const auto& runs = detail::require(j, "runs", "manifest");
  if (!runs.is_array()) throw Error(ErrorCode::kInvalidConfig, "manifest runs must be an array");
  for (const auto& r : runs) {
    RunConfig run;
    run.run_id = static_cast<std::size_t>(detail::require_id(r, "run_id", "run"));
    for (const auto& [k, v] : detail::require(r, "parameters", "run").items()) run.assignment.emplace_back(k, v);
    run.argv = detail::require(r, "argv", "run").get<std::vector<std::string>>();
    run.run_dir = detail::require(r, "run_dir", "run").get<std::string>();
    run.metric_path = detail::require(r, "metric_path", "run").get<std::string>();
    m.runs.push_back(std::move(run));
  }
  return m;
}

// ---------------------------------------------------------------------------
// external commands

/// Runs argv without a shell, stdout and stderr redirected to the given files.
/// Returns the exit status, or 128 + signal number when killed.
inline int run_command(const std::vector<std::string>& argv, const fs::path& stdout_path,
                       const fs::path& stderr_path) {
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, stdout_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, stderr_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw Error(ErrorCode::kExternalCommand, "cannot start '" + argv[0] + "'");
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(ErrorCode::kExternalCommand, "waitpid failed");
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

/// Executes every run (creating run_dir, logging to run_dir/stdout.log and
/// stderr.log). Returns exit statuses by run_id; -1 means it failed to start.
inline std::vector<int> execute_runs(const RunManifest& m, unsigned workers = default_workers()) {
  std::vector<int> status(m.runs.size(), -1);
  parallel_for(m.runs.size(), workers, [&](std::size_t i) {
    const auto& r = m.runs[i];
    fs::create_directories(r.run_dir);
    try {
      status[i] = run_command(r.argv, r.run_dir / "stdout.log", r.run_dir / "stderr.log");
    } catch (const Error&) {
      status[i] = -1;
    }
  });
  return status;
}

// ---------------------------------------------------------------------------
// results

struct ResultRow {
  std::size_t run_id = 0;
  bool failed = false;
  std::string note;
  std::map<std::string, double> metrics;  // nested keys joined with '.'
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

namespace detail {

inline void flatten_metrics(const Json& j, const std::string& prefix, std::map<std::string, double>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string name = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten_metrics(v, name, out);
    } else if (v.is_number()) {
      out[name] = v.get<double>();
    } else {
      throw Error(ErrorCode::kInvalidValue, "metric '" + name + "' is not numeric");
    }
  }
}

}  // namespace detail

/// Metric file of a run as a flat name->number map.
inline std::map<std::string, double> parse_metrics(std::string_view text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformedJson, "metric file is not valid JSON");
  if (!j.is_object()) throw Error(ErrorCode::kInvalidValue, "metric file is not a JSON object");
  std::map<std::string, double> out;
  detail::flatten_metrics(j, "", out);
  return out;
}

/// One row per run; unreadable or non-conforming metric files give FAILED
/// rows with a note.
inline ResultsTable collect_results(const RunManifest& m) {
  ResultsTable t;
  for (const auto& r : m.runs) {
    ResultRow row;
    row.run_id = r.run_id;
    try {
      if (!fs::exists(r.metric_path)) throw Error(ErrorCode::kIo, "metric file missing: " + r.metric_path.string());
      row.metrics = parse_metrics(read_text_file(r.metric_path));
    } catch (const Error& e) {
      row.failed = true;
      row.note = e.what();
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Json results_to_json(const ResultsTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row = {{"run_id", r.run_id}, {"status", r.failed ? "FAILED" : "OK"}};
    Json metrics = Json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = v;
    row["metrics"] = std::move(metrics);
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(std::move(row));
  }
  return {{"rows", std::move(rows)}};
}

enum class Direction { kMaximize, kMinimize };

inline Direction parse_direction(std::string_view s) {
  if (s == "maximize") return Direction::kMaximize;
  if (s == "minimize") return Direction::kMinimize;
  throw Error(ErrorCode::kInvalidValue, "direction must be maximize or minimize");
}

/// run_id of the best non-FAILED row carrying `metric`; ties go to the lowest
/// run_id whatever the row order.
inline std::size_t select_best(const ResultsTable& t, std::string_view metric,
                               Direction direction = Direction::kMaximize) {
  std::optional<std::pair<double, std::size_t>> best;
  for (const auto& r : t.rows) {
    if (r.failed) continue;
    auto it = r.metrics.find(std::string(metric));
    if (it == r.metrics.end()) continue;
    const double v = direction == Direction::kMaximize ? it->second : -it->second;
    if (!best || v > best->first || (v == best->first && r.run_id < best->second)) best = {v, r.run_id};
  }
  if (!best) throw Error(ErrorCode::kNoValidRuns, "no valid run reports '" + std::string(metric) + "'");
  return best->second;
}

// ---------------------------------------------------------------------------
// mock detector

struct MockDetectorConfig {
  double brightness_floor = 40.0;
  double brightness_ref = 120.0;
  int jitter_px = 0;
  std::uint64_t seed = 0;
};

inline void validate_mock(const MockDetectorConfig& c) {
  if (!(c.brightness_floor < c.brightness_ref)) throw Error(ErrorCode::kInvalidConfig, "brightness_floor must be below brightness_ref");
  if (c.jitter_px < 0) throw Error(ErrorCode::kInvalidConfig, "jitter_px must be >= 0");
}

/// Detection probability for an image of mean brightness b.
inline double detect_probability(double b, const MockDetectorConfig& c) noexcept {
  return std::clamp((b - c.brightness_floor) / (c.brightness_ref - c.brightness_floor), 0.0, 1.0);
}

/// Unit translation for a direction index drawn from the stream: +x, -x, +y, -y.
inline std::pair<int, int> jitter_offset(std::uint64_t draw, int px) noexcept {
  switch (draw % 4) {
    case 0: return {px, 0};
    case 1: return {-px, 0};
    case 2: return {0, px};
    default: return {0, -px};
  }
}

/// Each annotation draws, from the stream derive_seed(seed, id): u_emit,
/// u_score, then a jitter direction. It is emitted iff u_emit < q, with
/// score q * (0.5 + 0.5 * u_score) and its mask translated by jitter_px.
inline PredictionSet mock_detect(const Dataset& d, const fs::path& images_root,
                                 const MockDetectorConfig& cfg, unsigned workers = default_workers()) {
  validate_mock(cfg);
  std::map<std::int64_t, std::size_t> image_index;
  for (std::size_t i = 0; i < d.images.size(); ++i) image_index.emplace(d.images[i].id, i);
  std::vector<std::vector<std::size_t>> anns_of(d.images.size());
  for (std::size_t k = 0; k < d.annotations.size(); ++k) {
    auto it = image_index.find(d.annotations[k].image_id);
    if (it == image_index.end()) throw Error(ErrorCode::kUnknownReference, "annotation image not in dataset");
    anns_of[it->second].push_back(k);
  }
  for (const auto& r : d.images) {
    if (!fs::exists(images_root / r.file_name)) {
      throw Error(ErrorCode::kIo, "missing image file " + (images_root / r.file_name).string());
    }
  }

  std::vector<std::optional<PredictedInstance>> emitted(d.annotations.size());
  parallel_for(d.images.size(), workers, [&](std::size_t i) {
    const auto& rec = d.images[i];
    const double q = detect_probability(mean_brightness(load_image(images_root / rec.file_name)), cfg);
    for (std::size_t k : anns_of[i]) {
      const auto& a = d.annotations[k];
      SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(a.id)));
      const double u_emit = rng.uniform();
      const double u_score = rng.uniform();
      const std::uint64_t direction = rng.next();
      if (!(u_emit < q)) continue;
      BitMask mask = to_mask(a.segmentation, rec.width, rec.height);
      if (cfg.jitter_px > 0) {
        const auto [dx, dy] = jitter_offset(direction, cfg.jitter_px);
        mask = translate(mask, dx, dy);
      }
      PredictedInstance p;
      p.image_id = a.image_id;
      p.category_id = a.category_id;
      p.segmentation = rle_encode(mask);
      p.score = quantize(q * (0.5 + 0.5 * u_score));
      emitted[k] = std::move(p);
    }
  });
  PredictionSet out;
  for (auto& e : emitted) {
    if (e) out.instances.push_back(std::move(*e));
  }
  return out;
}

inline Json mock_to_json(const MockDetectorConfig& c) {
  return {{"brightness_floor", c.brightness_floor},
          {"brightness_ref", c.brightness_ref},
          {"jitter_px", c.jitter_px},
          {"seed", c.seed}};
}

/// Missing keys keep their defaults.
inline MockDetectorConfig parse_mock(const Json& j) {
  MockDetectorConfig c;
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "mock detector config must be an object");
  c.brightness_floor = j.value("brightness_floor", c.brightness_floor);
  c.brightness_ref = j.value("brightness_ref", c.brightness_ref);
  c.jitter_px = j.value("jitter_px", c.jitter_px);
  c.seed = j.value("seed", c.seed);
  validate_mock(c);
  return c;
}

// ---------------------------------------------------------------------------
// darkening sweep

/// Either the mock detector or an external command. Command placeholders:
/// {dataset} (variant directory holding annotations.json and images),
/// {predictions} (file the command must write) and {level}.
struct SweepDetector {
  std::optional<MockDetectorConfig> mock = MockDetectorConfig{};
  std::string command_template;
};

struct SweepConfig {
  std::vector<int> levels{0, 20, 40, 60, 80};
  SweepDetector detector;
  EvalConfig eval;
  unsigned workers = default_workers();
};

struct CurveRow {
  int level = 0;
  bool failed = false;
  std::string note;
  double map50 = 0.0;
  std::map<std::string, double> group_ap;  // at IoU 0.5
};

struct CurveTable {
  std::vector<CurveRow> rows;

  /// Union of group names over successful rows, sorted.
  std::vector<std::string> groups() const {
    std::set<std::string> names;
    for (const auto& r : rows) {
      for (const auto& [g, _] : r.group_ap) names.insert(g);
    }
    return {names.begin(), names.end()};
  }
};

inline std::string level_dir_name(int level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "level_%03d", level);
  return buf;
}

inline void validate_levels(const std::vector<int>& levels) {
  if (levels.empty()) throw Error(ErrorCode::kInvalidConfig, "no darkening levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0 || levels[i] > 100) throw Error(ErrorCode::kDarkenRange, "level outside [0,100]");
    if (i > 0 && levels[i] <= levels[i - 1]) throw Error(ErrorCode::kInvalidConfig, "levels must be strictly increasing");
  }
}

/// Per level: darken into out_dir/level_NNN, run the detector, evaluate and
/// write eval.json there. A level that fails becomes a FAILED row. Writes
/// out_dir/curve.csv and out_dir/sweep.json.
inline CurveTable darkening_sweep(const DatasetLocation& src, const SweepConfig& cfg, const fs::path& out_dir) {
  validate_levels(cfg.levels);
  validate_eval_config(cfg.eval);
  if (std::none_of(cfg.eval.iou_thresholds.begin(), cfg.eval.iou_thresholds.end(),
                   [](double t) { return std::abs(t - 0.5) < 1e-12; })) {
    throw Error(ErrorCode::kInvalidConfig, "sweep evaluation needs IoU threshold 0.5");
  }
  if (!cfg.detector.mock && cfg.detector.command_template.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "sweep needs a mock config or a command template");
  }
  if (cfg.detector.mock) validate_mock(*cfg.detector.mock);

  CurveTable table;
  for (int level : cfg.levels) {
    CurveRow row;
    row.level = level;
    const fs::path dir = out_dir / level_dir_name(level);
    try {
      const Dataset variant = darken_dataset_static(src, level, dir, cfg.workers);
      DarkenManifest manifest{0, level, {}};
      for (const auto& r : variant.images) manifest.entries.push_back({r.file_name, level});
      write_text_file(dir / kDarkenManifestFile, serialize_manifest(manifest));

      PredictionSet preds;
      if (cfg.detector.mock) {
        preds = mock_detect(variant, dir, *cfg.detector.mock, cfg.workers);
        write_text_file(dir / "predictions.json", serialize_predictions(preds));
      } else {
        const fs::path pred_path = fs::absolute(dir / "predictions.json");
        const auto argv = render_argv(cfg.detector.command_template,
                                      {{"dataset", fs::absolute(dir).string()},
                                       {"predictions", pred_path.string()},
                                       {"level", std::to_string(level)}});
        const int status = run_command(argv, dir / "detector.stdout.log", dir / "detector.stderr.log");
        if (status != 0) throw Error(ErrorCode::kExternalCommand, "detector exited with status " + std::to_string(status));
        preds = parse_predictions(read_text_file(pred_path), variant);
      }
      const EvalReport report = evaluate(variant, preds, cfg.eval);
      write_text_file(dir / "eval.json", report_to_json(report).dump() + "\n");
      row.map50 = *report.map50;
      for (const auto& g : report.groups) {
        if (std::abs(g.threshold - 0.5) < 1e-12) row.group_ap[g.group] = g.ap;
      }
    } catch (const Error& e) {
      row.failed = true;
      row.note = e.what();
    } catch (const std::exception& e) {
      row.failed = true;
      row.note = e.what();
    }
    table.rows.push_back(std::move(row));
  }

  write_text_file(out_dir / "curve.csv", [&] {
    std::ostringstream os;
    const auto groups = table.groups();
    os << "darkening_percent,map50";
    for (const auto& g : groups) os << ',' << g;
    os << '\n';
    for (const auto& r : table.rows) {
      os << r.level << ',' << (r.failed ? std::string("FAILED") : format_number(r.map50));
      for (const auto& g : groups) {
        os << ',';
        auto it = r.group_ap.find(g);
        if (!r.failed && it != r.group_ap.end()) os << format_number(it->second);
      }
      os << '\n';
    }
    return os.str();
  }());
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json row = {{"darkening_percent", r.level}, {"status", r.failed ? "FAILED" : "OK"}};
    if (r.failed) {
      row["note"] = r.note;
    } else {
      row["map50"] = quantize(r.map50);
      Json groups = Json::object();
      for (const auto& [g, ap] : r.group_ap) groups[g] = quantize(ap);
      row["group_ap"] = std::move(groups);
    }
    rows.push_back(std::move(row));
  }
  Json doc = {{"rows", std::move(rows)}};
  if (cfg.detector.mock) {
    doc["detector"] = {{"mock", mock_to_json(*cfg.detector.mock)}};
  } else {
    doc["detector"] = {{"command_template", cfg.detector.command_template}};
  }
  write_text_file(out_dir / "sweep.json", doc.dump(1) + "\n");
  return table;
}

// ---------------------------------------------------------------------------
// seeds

inline constexpr const char* kSeedEnv = "PALLETBENCH_SEED";

/// PALLETBENCH_SEED, when set to an unsigned integer, overrides `seed`.
inline std::uint64_t resolve_seed(std::uint64_t seed) {
  const char* env = std::getenv(kSeedEnv);
  if (!env || !*env) return seed;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw Error(ErrorCode::kInvalidConfig, std::string(kSeedEnv) + " is not an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace palletbench
