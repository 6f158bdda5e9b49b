// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// The ttt_lab command line. run_cli is the whole program; tools/ttt_lab.cpp
// only forwards argv.
//
// Exit codes: 0 success, 1 runtime or tolerance failure, 2 usage error
// (bad flags, missing or unreadable inputs).
//
// With --out <dir>, every command writes its outputs plus manifest.json:
//
//   {"tool": "ttt_lab", "version": ..., "subcommand": ..., "seed": ...,
//    "config": {<flag>: <resolved value as string>, ...},
//    "outputs": [<file names relative to the output dir>]}
//
// `ttt_lab replay --manifest <file> [--out <dir>]` reruns the recorded
// command; without --out it writes into the manifest's directory.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ttt_lab/cloud_metrics.hpp"
#include "ttt_lab/depth_metrics.hpp"
#include "ttt_lab/errors.hpp"
#include "ttt_lab/gradcheck.hpp"
#include "ttt_lab/io/csv.hpp"
#include "ttt_lab/io/files.hpp"
#include "ttt_lab/io/pfm.hpp"
#include "ttt_lab/io/ply.hpp"
#include "ttt_lab/io/tum.hpp"
#include "ttt_lab/parallel.hpp"
#include "ttt_lab/recall_bench.hpp"
#include "ttt_lab/stitcher.hpp"
#include "ttt_lab/trajectory_metrics.hpp"

#ifndef TTT_LAB_VERSION
#define TTT_LAB_VERSION "0.0.0"
#endif

namespace ttt::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Bad flag values or unusable inputs; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Manifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> outputs;

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "ttt_lab";
    j["version"] = TTT_LAB_VERSION;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = cfg;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
  }

  static Manifest from_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest m;
    try {
      if (j.at("tool").get<std::string>() != "ttt_lab") throw UsageError("manifest was not written by ttt_lab");
      m.subcommand = j.at("subcommand").get<std::string>();
      m.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& [k, v] : j.at("config").items()) m.config.emplace_back(k, v.get<std::string>());
      for (const auto& o : j.at("outputs")) m.outputs.push_back(o.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

namespace detail {

/// Output sink shared by all commands.
class Run {
 public:
  Run(std::string subcommand, std::uint64_t seed, const std::string& out_dir, std::ostream& out)
      : out_(out) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.seed = seed;
    if (!out_dir.empty()) {
      dir_ = fs::path(out_dir);
      std::error_code ec;
      fs::create_directories(*dir_, ec);
      if (ec) throw UsageError("cannot create output directory " + out_dir);
    }
  }

  void set(const std::string& key, const std::string& value) { manifest_.config.emplace_back(key, value); }

  bool has_dir() const { return dir_.has_value(); }
  std::ostream& out() { return out_; }

  void emit(const std::string& name, const std::string& content) {
    if (!dir_) return;
    const fs::path target = *dir_ / name;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    io::write_file_atomic(target, content);
    manifest_.outputs.push_back(name);
  }

  void finish() {
    if (dir_) io::write_file_atomic(*dir_ / "manifest.json", manifest_.to_json());
  }

 private:
  Manifest manifest_;
  std::optional<fs::path> dir_;
  std::ostream& out_;
};

inline std::string absolute_string(const std::string& path) {
  if (path.empty()) return path;
  return fs::absolute(fs::path(path)).lexically_normal().string();
}

/// Reads and parses an input file; any failure is a usage error naming the file.
template <typename Parse>
auto load_input(const std::string& path, Parse parse) {
  try {
    return parse(io::read_file(path));
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

inline Trajectory load_tum(const std::string& path) {
  return load_input(path, [](const std::string& text) { return io::parse_tum(text); });
}

inline PointCloud load_ply(const std::string& path, std::ostream& err) {
  std::vector<std::string> warnings;
  PointCloud cloud = load_input(path, [&](const std::string& text) { return io::parse_ply_ascii(text, &warnings); });
  for (const auto& w : warnings) err << "warning: " << path << ": " << w << '\n';
  return cloud;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

inline RecallDims parse_dims(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw UsageError("--dims expects n,c,ck,cv");
  long long v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t used = 0;
    try {
      v[i] = std::stoll(parts[i], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != parts[i].size() || v[i] < 1) throw UsageError("--dims entries must be positive integers");
  }
  return {v[0], v[1], v[2], v[3]};
}

inline std::string dims_string(const RecallDims& d) {
  return std::to_string(d.n) + "," + std::to_string(d.c) + "," + std::to_string(d.key_dim) + "," +
         std::to_string(d.value_dim);
}

inline std::string csv_of(const std::function<void(std::ostream&)>& body) {
  std::ostringstream s;
  body(s);
  return s.str();
}

inline std::vector<fs::path> list_pfm(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError(dir + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pfm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline Alignment parse_alignment(const std::string& s) {
  if (s == "sim3") return Alignment::Sim3;
  if (s == "se3") return Alignment::Se3;
  return Alignment::None;
}

// ---------------------------------------------------------------------------
// recall

struct RecallFlags {
  std::string rules = "full_attention,vanilla_rnn,ttt3r,hebbian,delta";
  std::size_t count = 64;
  std::string dims = "16,96,64,32";
  std::string key_mode = "orthonormal";
  std::size_t reset_period = 0;
  std::string gate_reduce = "sum";
  double softmax_scale = 0.0;
  double query_gain = 40.0;
  std::size_t pairs_per_frame = 1;
  std::string task = "standard";
  std::size_t distractors = 128;
};

inline int cmd_recall(const RecallFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  std::vector<RuleKind> rules;
  for (const auto& name : split(f.rules, ',')) {
    RuleKind rule;
    try {
      rule = parse_rule(name);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    if (!bench_supports(rule))
      throw UsageError("rule '" + name + "' is not supported by the recall bench (valid: " +
                       std::string(kValidRuleNames) + ")");
    rules.push_back(rule);
  }
  if (rules.empty()) throw UsageError("--rules is empty");
  const RecallDims dims = parse_dims(f.dims);
  KeyMode key_mode;
  try {
    key_mode = KeyMode::parse(f.key_mode);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (f.count < 1) throw UsageError("--count must be >= 1");
  if (f.pairs_per_frame < 1) throw UsageError("--pairs-per-frame must be >= 1");
  if (f.softmax_scale < 0.0) throw UsageError("--softmax-scale must be >= 0 (0 = auto)");
  const bool any_token = std::any_of(rules.begin(), rules.end(), [](const RuleKind& r) { return is_token_rule(r); });
  if ((any_token || f.task == "adversarial") && dims.c < dims.key_dim + dims.value_dim)
    throw UsageError("--dims needs c >= ck + cv for token-state rules");

  Run run("recall", seed, out_dir, out);
  std::string labels;
  for (const auto& r : rules) labels += (labels.empty() ? "" : ",") + rule_label(r);
  run.set("rules", labels);
  run.set("count", std::to_string(f.count));
  run.set("dims", dims_string(dims));
  run.set("key-mode", key_mode.label());
  run.set("reset-period", std::to_string(f.reset_period));
  run.set("gate-reduce", f.gate_reduce);
  run.set("softmax-scale", io::format_shortest(f.softmax_scale));
  run.set("query-gain", io::format_shortest(f.query_gain));
  run.set("pairs-per-frame", std::to_string(f.pairs_per_frame));
  run.set("task", f.task);
  run.set("distractors", std::to_string(f.distractors));

  std::optional<double> scale;
  if (f.softmax_scale > 0.0) scale = f.softmax_scale;
  RecallTask task;
  try {
    if (f.task == "adversarial") {
      AdversarialOptions opts;
      opts.true_pairs = f.count;
      opts.distractors = f.distractors;
      const double gate_scale = scale ? *scale : 1.0 / std::sqrt(static_cast<double>(dims.c));
      task = gen_adversarial_task(opts, dims, initial_state_queries(dims, seed), gate_scale, seed);
    } else {
      task = gen_recall_task(f.count, dims, key_mode, seed);
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());  // flag combination the task generator cannot satisfy
  }

  std::vector<StreamConfig> configs;
  for (const auto& r : rules) {
    StreamConfig cfg;
    cfg.rule = r;
    if (f.reset_period > 0) cfg.reset_period = f.reset_period;
    cfg.dims = dims;
    cfg.softmax_scale = scale;
    cfg.gate_reduce = f.gate_reduce == "mean" ? GateReduce::Mean : GateReduce::Sum;
    cfg.query_gain = f.query_gain;
    cfg.pairs_per_frame = f.pairs_per_frame;
    cfg.seed = seed;
    configs.push_back(cfg);
  }
  const ComparisonReport report = compare_rules(task, configs, threads_from_env());

  const std::string summary = csv_of([&](std::ostream& s) { write_summary_csv(s, report.rows); });
  out << summary;
  run.emit("curves.csv", csv_of([&](std::ostream& s) { write_curves_csv(s, report.runs); }));
  run.emit("gates.csv", csv_of([&](std::ostream& s) { write_gates_csv(s, report.runs); }));
  run.emit("summary.csv", summary);
  run.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckFlags {
  std::size_t trials = 100;
  double tol = 1e-6;
  double step = 1e-5;
};

inline std::string gradcheck_failure_csv(const GradcheckReport& r) {
  std::ostringstream s;
  s << "matrix,row,col,value\n";
  auto dump = [&](const char* name, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) s << name << ',' << i << ',' << j << ',' << io::format_real(m(i, j)) << '\n';
  };
  dump("S", r.worst.s.s);
  dump("K", r.worst.keys);
  dump("V", r.worst.values);
  dump("analytic", r.analytic);
  dump("numeric", r.numeric);
  return s.str();
}

inline int cmd_gradcheck(const GradcheckFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out,
                         std::ostream& err) {
  if (f.trials < 1) throw UsageError("--trials must be >= 1");
  if (!(f.tol >= 0.0)) throw UsageError("--tol must be >= 0");
  if (!(f.step > 0.0)) throw UsageError("--step must be > 0");
  Run run("gradcheck", seed, out_dir, out);
  run.set("trials", std::to_string(f.trials));
  run.set("tol", io::format_shortest(f.tol));
  run.set("step", io::format_shortest(f.step));

  const GradcheckReport report = run_gradcheck(f.trials, seed, f.step);
  const bool ok = report.max_rel_error <= f.tol;
  const io::MetricRows rows = {{"trials", static_cast<double>(report.trials)},
                               {"max_rel_error", report.max_rel_error},
                               {"worst_trial", static_cast<double>(report.worst_trial)},
                               {"tol", f.tol}};
  const std::string csv = csv_of([&](std::ostream& s) { io::write_metric_rows(s, rows); });
  out << csv;
  run.emit("gradcheck.csv", csv);
  if (!ok) {
    const std::string dump = gradcheck_failure_csv(report);
    if (run.has_dir()) {
      run.emit("gradcheck_failure.csv", dump);
    } else {
      io::write_file_atomic("gradcheck_failure.csv", dump);
    }
    err << "gradcheck: max relative error " << io::format_real(report.max_rel_error) << " exceeds tol "
        << io::format_real(f.tol) << " (trial " << report.worst_trial << ", dumped to gradcheck_failure.csv)\n";
  }
  run.finish();
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// traj-eval

struct TrajFlags {
  std::string est;
  std::string gt;
  std::string align = "sim3";
  std::size_t rpe_delta = 1;
  double max_dt = 0.02;
};

inline int cmd_traj_eval(const TrajFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  if (f.rpe_delta < 1) throw UsageError("--rpe-delta must be >= 1");
  if (!(f.max_dt >= 0.0)) throw UsageError("--max-dt must be >= 0");
  const Trajectory est = load_tum(f.est);
  const Trajectory gt = load_tum(f.gt);
  Run run("traj-eval", seed, out_dir, out);
  run.set("est", absolute_string(f.est));
  run.set("gt", absolute_string(f.gt));
  run.set("align", f.align);
  run.set("rpe-delta", std::to_string(f.rpe_delta));
  run.set("max-dt", io::format_shortest(f.max_dt));

  const auto matches = associate(est, gt, f.max_dt);
  if (matches.empty()) throw AssociationError("no poses associated within time tolerance", 0);
  const Sim3Transform t = align_trajectories(est, gt, matches, parse_alignment(f.align));
  const Trajectory aligned = transform_trajectory(t, est);
  const double ate_value = ate(aligned, gt, Alignment::None, f.max_dt);
  const RpeResult r = rpe(aligned, gt, f.rpe_delta, f.max_dt);

  std::ostringstream csv;
  csv << "ate,rpe_trans,rpe_rot\n"
      << io::format_real(ate_value) << ',' << io::format_real(r.trans) << ',' << io::format_real(r.rot_deg) << '\n';
  out << csv.str();
  run.emit("traj_metrics.csv", csv.str());
  run.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// depth-eval

struct DepthFlags {
  std::string pred;
  std::string gt;
  std::string mode = "seq-scale";
};

inline int cmd_depth_eval(const DepthFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  const auto pred_files = list_pfm(f.pred);
  const auto gt_files = list_pfm(f.gt);
  auto load_all = [](const std::vector<fs::path>& files) {
    std::vector<DepthMap> maps;
    for (const auto& p : files)
      maps.push_back(load_input(p.string(), [](const std::string& bytes) { return io::parse_pfm(bytes); }));
    return maps;
  };
  const auto preds = load_all(pred_files);
  const auto gts = load_all(gt_files);

  Run run("depth-eval", seed, out_dir, out);
  run.set("pred", absolute_string(f.pred));
  run.set("gt", absolute_string(f.gt));
  run.set("mode", f.mode);

  if (preds.size() != gts.size()) {
    throw DimensionError("frame count mismatch: " + std::to_string(preds.size()) + " predicted vs " +
                         std::to_string(gts.size()) + " ground-truth maps");
  }
  if (preds.empty()) throw UsageError("no .pfm files in " + f.pred);
  const DepthMode mode = f.mode == "metric" ? DepthMode::Metric : DepthMode::PerSequenceScale;
  const double scale = mode == DepthMode::Metric ? 1.0 : sequence_depth_scale(preds, gts);

  std::ostringstream frames;
  frames << "frame,name,abs_rel,delta_125,valid_pixels\n";
  double abs_rel_sum = 0.0;
  double delta_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const DepthResult r = depth_metrics(preds[i], gts[i], mode, scale);
    abs_rel_sum += r.abs_rel;
    delta_sum += r.delta_125;
    frames << i << ',' << pred_files[i].filename().string() << ',' << io::format_real(r.abs_rel) << ','
           << io::format_real(r.delta_125) << ',' << r.valid_pixels << '\n';
  }
  const double n = static_cast<double>(preds.size());
  const io::MetricRows rows = {
      {"abs_rel", abs_rel_sum / n}, {"delta_125", delta_sum / n}, {"frames", n}, {"scale", scale}};
  const std::string summary = csv_of([&](std::ostream& s) { io::write_metric_rows(s, rows); });
  out << summary;
  run.emit("depth_frames.csv", frames.str());
  run.emit("depth_summary.csv", summary);
  run.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// chamfer

struct ChamferFlags {
  std::string pred;
  std::string gt;
};

inline int cmd_chamfer(const ChamferFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out,
                       std::ostream& err) {
  const PointCloud pred = load_ply(f.pred, err);
  const PointCloud gt = load_ply(f.gt, err);
  Run run("chamfer", seed, out_dir, out);
  run.set("pred", absolute_string(f.pred));
  run.set("gt", absolute_string(f.gt));

  const std::size_t threads = threads_from_env();
  const ChamferResult c = chamfer(pred, gt, threads);
  io::MetricRows rows = {{"accuracy", c.accuracy}, {"completeness", c.completeness}, {"chamfer", c.chamfer}};
  if (pred.has_normals() && gt.has_normals()) rows.emplace_back("normal_consistency", normal_consistency(pred, gt, threads));
  const std::string csv = csv_of([&](std::ostream& s) { io::write_metric_rows(s, rows); });
  out << csv;
  run.emit("chamfer.csv", csv);
  run.finish();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stitch

struct StitchFlags {
  std::string chunks;
  std::string gt;
  std::size_t reset_period = 100;
  std::string overlap_check = "on";
};

inline std::string chunk_name(std::size_t k, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "chunk_%03zu%s", k, ext);
  return buf;
}

/// Chunk directory layout: anchors.tum (one pose per chunk, in order),
/// chunk_000.tum, chunk_001.tum, ... and optional chunk_<k>.ply.
inline std::vector<Chunk> load_chunk_dir(const std::string& dir, std::ostream& err) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError(dir + ": not a directory");
  const Trajectory anchors = load_tum((fs::path(dir) / "anchors.tum").string());
  std::vector<Chunk> chunks;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    Chunk c;
    c.anchor = anchors.poses[k];
    c.local_trajectory = load_tum((fs::path(dir) / chunk_name(k, ".tum")).string());
    const fs::path ply = fs::path(dir) / chunk_name(k, ".ply");
    if (fs::exists(ply)) c.local_cloud = load_ply(ply.string(), err);
    chunks.push_back(std::move(c));
  }
  if (fs::exists(fs::path(dir) / chunk_name(anchors.size(), ".tum")))
    throw UsageError(dir + ": more chunk files than anchors");
  return chunks;
}

inline int cmd_stitch(const StitchFlags& f, std::uint64_t seed, const std::string& out_dir, std::ostream& out,
                      std::ostream& err) {
  if (f.chunks.empty() == f.gt.empty()) throw UsageError("stitch needs exactly one of --chunks <dir> or --gt <tum>");
  if (f.reset_period < 1) throw UsageError("--reset-period must be >= 1");
  if (out_dir.empty()) throw UsageError("stitch needs --out <dir>");

  std::optional<Trajectory> gt;
  std::vector<Chunk> chunks;
  if (!f.gt.empty()) {
    gt = load_tum(f.gt);
    chunks = split_into_chunks(*gt, f.reset_period);
  } else {
    chunks = load_chunk_dir(f.chunks, err);
  }

  Run run("stitch", seed, out_dir, out);
  run.set("chunks", absolute_string(f.chunks));
  run.set("gt", absolute_string(f.gt));
  run.set("reset-period", std::to_string(f.reset_period));
  run.set("overlap-check", f.overlap_check);

  StitchOptions opts;
  opts.check_overlap = f.overlap_check == "on";
  const StitchResult result = stitch(chunks, opts);

  if (gt) {
    // The demo also leaves the localized chunks behind in the chunk-dir layout.
    Trajectory anchors;
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      anchors.poses.push_back(chunks[k].anchor);
      run.emit("chunks/" + chunk_name(k, ".tum"), io::write_tum(chunks[k].local_trajectory));
    }
    run.emit("chunks/anchors.tum", io::write_tum(anchors));
  }
  run.emit("stitched.tum", io::write_tum(result.trajectory));
  if (!result.cloud.empty()) run.emit("stitched.ply", io::write_ply_ascii(result.cloud));

  io::MetricRows rows = {{"chunks", static_cast<double>(chunks.size())},
                         {"poses", static_cast<double>(result.trajectory.size())},
                         {"points", static_cast<double>(result.cloud.size())}};
  if (gt) rows.emplace_back("ate", ate(result.trajectory, *gt, Alignment::None));
  const std::string csv = csv_of([&](std::ostream& s) { io::write_metric_rows(s, rows); });
  out << csv;
  run.emit("stitch.csv", csv);
  run.finish();
  return kExitOk;
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

namespace detail {

inline int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out,
                      std::ostream& err) {
  const Manifest m = load_input(manifest_path, [](const std::string& text) { return Manifest::from_json(text); });
  if (m.subcommand == "replay") throw UsageError("manifest records a replay");
  std::vector<std::string> args = {m.subcommand, "--seed=" + std::to_string(m.seed)};
  for (const auto& [k, v] : m.config)
    if (!v.empty()) args.push_back("--" + k + "=" + v);
  const std::string dir =
      out_dir.empty() ? fs::absolute(fs::path(manifest_path)).parent_path().string() : out_dir;
  args.push_back("--out=" + dir);
  return run_cli(args, out, err);
}

}  // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ttt_lab: recurrent-state update rules as test-time training, with 3D evaluation tools", "ttt_lab"};
  app.set_version_flag("--version", std::string(TTT_LAB_VERSION));
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed")->capture_default_str();
    sub->add_option("--out", out_dir, "Output directory (enables CSV files and manifest.json)");
  };

  detail::RecallFlags recall;
  CLI::App* recall_cmd = app.add_subcommand("recall", "Associative-recall forgetting curves per update rule");
  recall_cmd->add_option("--rules", recall.rules, "Comma list of rules: " + std::string(kValidRuleNames))
      ->capture_default_str();
  recall_cmd->add_option("--count", recall.count, "Number of key/value pairs")->capture_default_str();
  recall_cmd->add_option("--dims", recall.dims, "n,c,ck,cv")->capture_default_str();
  recall_cmd->add_option("--key-mode", recall.key_mode, "orthonormal | random_unit | correlated:<rho>")
      ->capture_default_str();
  recall_cmd->add_option("--reset-period", recall.reset_period, "Reset state every P frames (0 = off)")
      ->capture_default_str();
  recall_cmd->add_option("--gate-reduce", recall.gate_reduce, "Confidence gate reduction")
      ->check(CLI::IsMember({"sum", "mean"}))
      ->capture_default_str();
  recall_cmd->add_option("--softmax-scale", recall.softmax_scale, "Attention logit scale (0 = 1/sqrt(width))")
      ->capture_default_str();
  recall_cmd->add_option("--query-gain", recall.query_gain, "Recall query gain")->capture_default_str();
  recall_cmd->add_option("--pairs-per-frame", recall.pairs_per_frame, "Pairs ingested per frame")
      ->capture_default_str();
  recall_cmd->add_option("--task", recall.task, "standard | adversarial (random_unit keys plus distractors)")
      ->check(CLI::IsMember({"standard", "adversarial"}))
      ->capture_default_str();
  recall_cmd->add_option("--distractors", recall.distractors, "Distractor count for --task adversarial")
      ->capture_default_str();
  common(recall_cmd);

  detail::GradcheckFlags grad;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "Check the reconstruction gradient against finite differences");
  grad_cmd->add_option("--trials", grad.trials, "Random instances")->capture_default_str();
  grad_cmd->add_option("--tol", grad.tol, "Max relative error")->capture_default_str();
  grad_cmd->add_option("--step", grad.step, "Central-difference step")->capture_default_str();
  common(grad_cmd);

  detail::TrajFlags traj;
  CLI::App* traj_cmd = app.add_subcommand("traj-eval", "ATE and RPE of a TUM trajectory against ground truth");
  traj_cmd->add_option("--est", traj.est, "Estimated trajectory (TUM)")->required();
  traj_cmd->add_option("--gt", traj.gt, "Ground-truth trajectory (TUM)")->required();
  traj_cmd->add_option("--align", traj.align, "sim3 | se3 | none")
      ->check(CLI::IsMember({"sim3", "se3", "none"}))
      ->capture_default_str();
  traj_cmd->add_option("--rpe-delta", traj.rpe_delta, "RPE offset in frames")->capture_default_str();
  traj_cmd->add_option("--max-dt", traj.max_dt, "Association tolerance (s)")->capture_default_str();
  common(traj_cmd);

  detail::DepthFlags depth;
  CLI::App* depth_cmd = app.add_subcommand("depth-eval", "Abs Rel and delta<1.25 over directories of PFM maps");
  depth_cmd->add_option("--pred", depth.pred, "Directory of predicted .pfm maps")->required();
  depth_cmd->add_option("--gt", depth.gt, "Directory of ground-truth .pfm maps")->required();
  depth_cmd->add_option("--mode", depth.mode, "seq-scale | metric")
      ->check(CLI::IsMember({"seq-scale", "metric"}))
      ->capture_default_str();
  common(depth_cmd);

  detail::ChamferFlags cham;
  CLI::App* cham_cmd = app.add_subcommand("chamfer", "Chamfer distance and normal consistency of two PLY clouds");
  cham_cmd->add_option("--pred", cham.pred, "Reconstructed cloud (ASCII PLY)")->required();
  cham_cmd->add_option("--gt", cham.gt, "Ground-truth cloud (ASCII PLY)")->required();
  common(cham_cmd);

  detail::StitchFlags st;
  CLI::App* stitch_cmd = app.add_subcommand("stitch", "Chain chunk-local reconstructions by their anchor poses");
  stitch_cmd->add_option("--chunks", st.chunks, "Chunk directory (anchors.tum, chunk_<k>.tum/.ply)");
  stitch_cmd->add_option("--gt", st.gt, "Demo: split this trajectory at --reset-period and restitch it");
  stitch_cmd->add_option("--reset-period", st.reset_period, "Frames per chunk in demo mode")->capture_default_str();
  stitch_cmd->add_option("--overlap-check", st.overlap_check, "Verify anchors against the previous chunk")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  common(stitch_cmd);

  std::string manifest_path;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Rerun a command from its manifest.json");
  replay_cmd->add_option("--manifest", manifest_path, "Path to manifest.json")->required();
  replay_cmd->add_option("--out", out_dir, "Output directory (default: the manifest's directory)");

  std::vector<std::string> argv_store = {"ttt_lab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (recall_cmd->parsed()) return detail::cmd_recall(recall, seed, out_dir, out);
    if (grad_cmd->parsed()) return detail::cmd_gradcheck(grad, seed, out_dir, out, err);
    if (traj_cmd->parsed()) return detail::cmd_traj_eval(traj, seed, out_dir, out);
    if (depth_cmd->parsed()) return detail::cmd_depth_eval(depth, seed, out_dir, out);
    if (cham_cmd->parsed()) return detail::cmd_chamfer(cham, seed, out_dir, out, err);
    if (stitch_cmd->parsed()) return detail::cmd_stitch(st, seed, out_dir, out, err);
    if (replay_cmd->parsed()) return detail::cmd_replay(manifest_path, out_dir, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace ttt::cli
