#pragma once

// Subcommand orchestration: stenograph <synth|split|train|eval|stratify|explain>
//   --config run.json [--seed N] [--out DIR]
//
// Every command writes under a fixed directory with manifest.json (config echo,
// dataset digest, per-file digests) and digest.txt (digest over the output
// files only, so it is comparable across run locations).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stenograph/checkpoint.hpp"
#include "stenograph/dataset_io.hpp"
#include "stenograph/evaluate.hpp"
#include "stenograph/explain.hpp"
#include "stenograph/folds.hpp"
#include "stenograph/report.hpp"
#include "stenograph/survival.hpp"
#include "stenograph/synthgen.hpp"
#include "stenograph/trainer.hpp"

namespace stenograph::cli {

inline constexpr std::string_view kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  const char* env = std::getenv("STENOGRAPH_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::quiet;
  if (v == "debug" || v == "2") return LogLevel::debug;
  return LogLevel::info;
}

inline void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "[stenograph] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// Configuration

// Reads known keys of one JSON object; finish() rejects the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::config, path_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, path_ + "." + key + ": " + e.what());
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) fail(ErrorKind::config, "unknown config key " + path_ + "." + k);
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::array<double, kNumVessels> read_vessel_map(Section s, std::array<double, kNumVessels> out) {
  for (Vessel v : kVessels) s.get(std::string(vessel_name(v)).c_str(), out[index_of(v)]);
  s.finish();
  return out;
}

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path dataset;
  std::filesystem::path output;
  std::size_t threads = 1;
  bool closest_only = false;

  SynthCohortOptions synth;
  std::size_t k = 5;
  Net1DConfig net;
  TrainConfig train;
  std::vector<std::size_t> folds;  // empty: all
  AugConfig augment;
  RiskThresholds thresholds;
  int horizon_days = 365;
  EvalOptions eval;
  std::optional<std::filesystem::path> checkpoint;

  std::uint64_t run_seed() const {
    if (!seed) fail(ErrorKind::config, "seed is mandatory (config \"seed\" or --seed)");
    return *seed;
  }

  void validate() const {
    run_seed();
    if (dataset.empty()) fail(ErrorKind::config, "config needs \"dataset\"");
    if (output.empty()) fail(ErrorKind::config, "config needs \"output\"");
    if (k < 2) fail(ErrorKind::config, "split.k must be >= 2");
    for (std::size_t f : folds) {
      if (f >= k) fail(ErrorKind::config, "train.folds entry " + std::to_string(f) + " outside k");
    }
    if (horizon_days < 1) fail(ErrorKind::config, "risk.horizon_days must be >= 1");
    if (eval.n_boot < 1) fail(ErrorKind::config, "eval.n_boot must be >= 1");
    if (eval.bins < 1) fail(ErrorKind::config, "eval.bins must be >= 1");
    net.validate();
    train.validate();
    augment.validate();
    thresholds.validate();
  }

  // Echo of the resolved configuration (paths excluded from output digests).
  nlohmann::json echo() const {
    nlohmann::json prevalence = nlohmann::json::object(), cut = nlohmann::json::object();
    for (Vessel v : kVessels) {
      prevalence[std::string(vessel_name(v))] = synth.prevalence[index_of(v)];
      cut[std::string(vessel_name(v))] = thresholds[v];
    }
    nlohmann::json subgroups = nlohmann::json::array();
    for (Subgroup s : eval.subgroups) subgroups.push_back(subgroup_name(s));
    nlohmann::json j = {
        {"seed", run_seed()},
        {"dataset", dataset.string()},
        {"output", output.string()},
        {"threads", threads},
        {"closest_only", closest_only},
        {"synth",
         {{"n_patients", synth.n_patients},
          {"prevalence", prevalence},
          {"fs", synth.fs},
          {"duration_s", synth.duration_s},
          {"noise_mv", synth.noise_mv},
          {"multi_record_prob", synth.multi_record_prob},
          {"followup_days", synth.followup_days},
          {"base_event_prob", synth.base_event_prob},
          {"hazard_per_grade", synth.hazard_per_grade},
          {"dropout_prob", synth.dropout_prob}}},
        {"split", {{"k", k}}},
        {"model",
         {{"stem_channels", net.stem_channels},
          {"stem_stride", net.stem_stride},
          {"blocks", net.blocks},
          {"kernel", net.kernel},
          {"max_channels", net.max_channels}}},
        {"train",
         {{"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"peak_lr", train.peak_lr},
          {"warmup_fraction", train.warmup_fraction},
          {"weight_decay", train.weight_decay},
          {"pcgrad", train.pcgrad},
          {"uncertainty_weighting", train.uncertainty_weighting},
          {"consistency_weight", train.consistency_weight},
          {"folds", folds}}},
        {"augment",
         {{"max_shift_fraction", augment.max_shift_fraction},
          {"scale_half_range", augment.scale_half_range},
          {"noise_base_std", augment.noise_base_std},
          {"occlusion_min", augment.occlusion_min},
          {"occlusion_max", augment.occlusion_max},
          {"alpha_floor", augment.alpha_floor},
          {"shift", augment.shift},
          {"scale", augment.scale},
          {"noise", augment.noise},
          {"occlude", augment.occlude}}},
        {"risk", {{"thresholds", cut}, {"horizon_days", horizon_days}}},
        {"eval", {{"n_boot", eval.n_boot}, {"bins", eval.bins}, {"subgroups", subgroups}}}};
    if (checkpoint) j["eval"]["checkpoint"] = checkpoint->string();
    return j;
  }
};

inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section root(j, "config");
  std::uint64_t seed = 0;
  if (root.has("seed")) {
    root.get("seed", seed);
    c.seed = seed;
  }
  std::string dataset, output;
  root.get("dataset", dataset);
  root.get("output", output);
  auto resolve = [&](const std::string& p) { return p.empty() ? std::filesystem::path{} : base_dir / p; };
  c.dataset = resolve(dataset);
  c.output = resolve(output);
  root.get("threads", c.threads);
  root.get("closest_only", c.closest_only);

  if (root.has("synth")) {
    Section s = root.child("synth");
    s.get("n_patients", c.synth.n_patients);
    if (s.has("prevalence")) c.synth.prevalence = read_vessel_map(s.child("prevalence"), c.synth.prevalence);
    s.get("fs", c.synth.fs);
    s.get("duration_s", c.synth.duration_s);
    s.get("noise_mv", c.synth.noise_mv);
    s.get("multi_record_prob", c.synth.multi_record_prob);
    s.get("followup_days", c.synth.followup_days);
    s.get("base_event_prob", c.synth.base_event_prob);
    s.get("hazard_per_grade", c.synth.hazard_per_grade);
    s.get("dropout_prob", c.synth.dropout_prob);
    s.finish();
  }
  if (root.has("split")) {
    Section s = root.child("split");
    s.get("k", c.k);
    s.finish();
  }
  if (root.has("model")) {
    Section s = root.child("model");
    s.get("stem_channels", c.net.stem_channels);
    s.get("stem_stride", c.net.stem_stride);
    s.get("blocks", c.net.blocks);
    s.get("kernel", c.net.kernel);
    s.get("max_channels", c.net.max_channels);
    s.finish();
  }
  if (root.has("train")) {
    Section s = root.child("train");
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("peak_lr", c.train.peak_lr);
    s.get("warmup_fraction", c.train.warmup_fraction);
    s.get("weight_decay", c.train.weight_decay);
    s.get("pcgrad", c.train.pcgrad);
    s.get("uncertainty_weighting", c.train.uncertainty_weighting);
    s.get("consistency_weight", c.train.consistency_weight);
    s.get("folds", c.folds);
    s.finish();
  }
  if (root.has("augment")) {
    Section s = root.child("augment");
    s.get("max_shift_fraction", c.augment.max_shift_fraction);
    s.get("scale_half_range", c.augment.scale_half_range);
    s.get("noise_base_std", c.augment.noise_base_std);
    s.get("occlusion_min", c.augment.occlusion_min);
    s.get("occlusion_max", c.augment.occlusion_max);
    s.get("alpha_floor", c.augment.alpha_floor);
    s.get("shift", c.augment.shift);
    s.get("scale", c.augment.scale);
    s.get("noise", c.augment.noise);
    s.get("occlude", c.augment.occlude);
    s.finish();
  }
  if (root.has("risk")) {
    Section s = root.child("risk");
    if (s.has("thresholds")) c.thresholds.cutoff = read_vessel_map(s.child("thresholds"), c.thresholds.cutoff);
    s.get("horizon_days", c.horizon_days);
    s.finish();
  }
  if (root.has("eval")) {
    Section s = root.child("eval");
    s.get("n_boot", c.eval.n_boot);
    s.get("bins", c.eval.bins);
    std::vector<std::string> subgroups;
    s.get("subgroups", subgroups);
    for (const auto& name : subgroups) c.eval.subgroups.push_back(parse_subgroup(name));
    std::string ckpt;
    s.get("checkpoint", ckpt);
    if (!ckpt.empty()) c.checkpoint = resolve(ckpt);
    s.finish();
  }
  root.finish();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    fail(ErrorKind::config, "cannot read config " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Output directory bookkeeping

class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, std::string_view content) {
    write_text(dir_ / name, content);
    files_[name] = Digest().update(content).hex();
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  void record_file(const std::string& name) { files_[name] = file_digest(dir_ / name); }

  // Digest over (name, file digest) pairs in name order.
  std::string digest() const {
    Digest d;
    for (const auto& [name, hex] : files_) {
      d.update(name);
      d.update(hex);
    }
    return d.hex();
  }

  void finish(const RunConfig& cfg, const std::string& dataset_digest, nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [name, hex] : files_) files[name] = hex;
    nlohmann::json manifest = {{"command", command_},
                               {"version", kVersion},
                               {"checkpoint_format", kCheckpointVersion},
                               {"config", cfg.echo()},
                               {"dataset_digest", dataset_digest},
                               {"files", files},
                               {"output_digest", digest()}};
    for (auto& [k, v] : extra.items()) manifest[k] = v;
    write_text(dir_ / "manifest.json", manifest.dump(2) + "\n");
    write_text(dir_ / "digest.txt", digest() + "\n");
    log(LogLevel::info, command_ + ": wrote " + dir_.string() + " (digest " + digest() + ")");
  }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::map<std::string, std::string> files_;
};

// ---------------------------------------------------------------------------
// Shared steps

inline std::filesystem::path command_dir(const RunConfig& cfg, std::string_view cmd) { return cfg.output / cmd; }

inline Cohort load_cohort(const RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.dataset / "cohort.json")) {
    fail(ErrorKind::config, "dataset " + cfg.dataset.string() + " not found (run synth first)");
  }
  LoadOptions opt;
  opt.closest_only = cfg.closest_only;
  Cohort cohort = load_dataset(cfg.dataset, opt);
  if (cohort.empty()) fail(ErrorKind::data, "dataset has no records");
  log(LogLevel::info, "loaded " + std::to_string(cohort.size()) + " records from " + cfg.dataset.string());
  return cohort;
}

inline FoldAssignment load_folds(const std::filesystem::path& path, const Cohort& cohort) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::data, path.string() + " not found (run split first)");
  FoldAssignment f = folds_from_json(parse_json_file(path));
  for (const auto& r : cohort.records) f.fold_of(r.ecg.patient_id);
  return f;
}

struct Predictions {
  std::vector<double> probs;  // row-major [n x 4]
  std::vector<int> fold;      // -1 when a single checkpoint scored everything
  std::string source;
};

// Out-of-fold predictions from the trained fold checkpoints, or every record
// from one checkpoint when eval.checkpoint is set.
inline Predictions predict(const RunConfig& cfg, const Cohort& cohort, const ModelInputs& inputs) {
  Predictions out;
  out.probs.resize(cohort.size() * kNumVessels);
  out.fold.assign(cohort.size(), -1);
  if (cfg.checkpoint) {
    const ModelCheckpoint ckpt = load_checkpoint(*cfg.checkpoint, inputs.input_length());
    const Tensor p = predict_cohort(ckpt, inputs, cfg.threads);
    std::copy(p.data().begin(), p.data().end(), out.probs.begin());
    out.source = "single checkpoint (digest " + checkpoint_digest(ckpt) + ")";
    return out;
  }
  const auto train_dir = command_dir(cfg, "train");
  const FoldAssignment folds = load_folds(train_dir / "folds.json", cohort);
  for (std::size_t f = 0; f < folds.k; ++f) {
    const auto idx = folds.validation_indices(cohort, f);
    if (idx.empty()) continue;
    const auto path = train_dir / ("fold_" + std::to_string(f)) / "checkpoint.bin";
    if (!std::filesystem::exists(path)) {
      fail(ErrorKind::data, "missing " + path.string() + " (train all folds for out-of-fold predictions)");
    }
    const ModelCheckpoint ckpt = load_checkpoint(path, inputs.input_length());
    const Tensor p = ckpt.model().predict_proba(stack_inputs(inputs, idx), cfg.threads);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t t = 0; t < kNumVessels; ++t) out.probs[idx[i] * kNumVessels + t] = p.data()[i * kNumVessels + t];
      out.fold[idx[i]] = static_cast<int>(f);
    }
  }
  out.source = "out-of-fold (" + std::to_string(folds.k) + " folds)";
  return out;
}

inline std::string predictions_csv(const Cohort& cohort, const Predictions& p) {
  std::string s = "ecg_id,patient_id,fold";
  for (Vessel v : kVessels) s += ",prob_" + std::string(vessel_name(v));
  for (Vessel v : kVessels) s += ",grade_" + std::string(vessel_name(v));
  s += "\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& r = cohort.records[i];
    s += r.ecg.ecg_id + "," + r.ecg.patient_id + "," + std::to_string(p.fold[i]);
    for (std::size_t t = 0; t < kNumVessels; ++t) s += "," + fmt(p.probs[i * kNumVessels + t]);
    for (Vessel v : kVessels) s += "," + std::to_string(grade_code(r.labels.grade(v)));
    s += "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Commands

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

inline int cmd_synth(const RunConfig& cfg, const Overrides& ov) {
  const auto dir = ov.out ? *ov.out : cfg.dataset;
  SynthCohortOptions opt = cfg.synth;
  opt.seed = cfg.run_seed();
  log(LogLevel::info, "synth: " + std::to_string(opt.n_patients) + " patients");
  const SyntheticCohort synth = synth_cohort(opt);
  write_dataset(synth.cohort, dir);
  const std::string digest = dataset_digest(dir);
  nlohmann::json prevalence = nlohmann::json::object(), observed = nlohmann::json::object();
  for (Vessel v : kVessels) {
    std::size_t pos = 0;
    for (const auto& r : synth.cohort.records) pos += r.labels.severe(v);
    prevalence[std::string(vessel_name(v))] = opt.prevalence[index_of(v)];
    observed[std::string(vessel_name(v))] = static_cast<double>(pos) / static_cast<double>(synth.cohort.size());
  }
  const nlohmann::json manifest = {{"command", "synth"},
                                   {"version", kVersion},
                                   {"seed", opt.seed},
                                   {"n_patients", opt.n_patients},
                                   {"n_records", synth.cohort.size()},
                                   {"prevalence", prevalence},
                                   {"observed_prevalence", observed},
                                   {"fs", opt.fs},
                                   {"duration_s", opt.duration_s},
                                   {"dataset_digest", digest}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "digest.txt", digest + "\n");
  log(LogLevel::info, "synth: wrote " + std::to_string(synth.cohort.size()) + " records to " + dir.string() +
                          " (digest " + digest + ")");
  return 0;
}

inline int cmd_split(const RunConfig& cfg) {
  const Cohort cohort = load_cohort(cfg);
  const FoldAssignment folds = stratified_group_kfold(cohort, cfg.k, cfg.run_seed());
  // Reload check: every patient lands in exactly one fold.
  const FoldAssignment reloaded = folds_from_json(folds_to_json(folds, cfg.run_seed()));
  for (const auto& p : cohort.patients()) {
    if (reloaded.fold_of(p) != folds.fold_of(p)) fail(ErrorKind::data, "fold assignment failed to round-trip");
  }
  OutputDir out(command_dir(cfg, "split"), "split");
  out.write_json("folds.json", folds_to_json(folds, cfg.run_seed()));
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t f = 0; f < folds.k; ++f) {
    const auto idx = folds.validation_indices(cohort, f);
    nlohmann::json pos = nlohmann::json::object();
    for (Vessel v : kVessels) {
      std::size_t n = 0;
      for (std::size_t i : idx) n += cohort.records[i].labels.severe(v);
      pos[std::string(vessel_name(v))] = n;
    }
    summary.push_back({{"fold", f}, {"patients", folds.patients_in(f).size()}, {"records", idx.size()}, {"positives", pos}});
  }
  out.write_json("split_summary.json", {{"k", folds.k}, {"folds", summary}});
  out.finish(cfg, dataset_digest(cfg.dataset));
  return 0;
}

inline int cmd_train(const RunConfig& cfg) {
  const Cohort cohort = load_cohort(cfg);
  const auto split_path = command_dir(cfg, "split") / "folds.json";
  const FoldAssignment folds = load_folds(split_path, cohort);
  const ModelInputs inputs = prepare_inputs(cohort, cfg.threads);

  std::vector<std::size_t> fold_ids = cfg.folds;
  if (fold_ids.empty()) {
    for (std::size_t f = 0; f < folds.k; ++f) fold_ids.push_back(f);
  }
  OutputDir out(command_dir(cfg, "train"), "train");
  out.write("folds.json", read_text(split_path));
  nlohmann::json per_fold = nlohmann::json::array();
  std::optional<std::size_t> best_fold;
  double best_auc = 0.0;
  for (std::size_t f : fold_ids) {
    if (f >= folds.k) fail(ErrorKind::config, "fold " + std::to_string(f) + " outside k=" + std::to_string(folds.k));
    TrainOptions opt;
    opt.train = cfg.train;
    opt.train.seed = cfg.run_seed();
    opt.train.threads = cfg.threads;
    opt.augment = cfg.augment;
    opt.net = cfg.net;
    opt.net.seed = derive_seed(cfg.run_seed(), {hash_tag("init"), f});
    const auto t0 = std::chrono::steady_clock::now();
    opt.on_epoch = [&](const EpochLog& e) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char buf[160];
      std::snprintf(buf, sizeof buf, "train: fold %zu epoch %d macro-AUC %.4f lr %.2e (%.0f s)", f, e.epoch,
                    e.macro_auc, e.lr, s);
      log(LogLevel::info, buf);
    };
    const TrainResult result = train_fold(cohort, inputs, folds, f, opt);
    const std::string sub = "fold_" + std::to_string(f);
    save_checkpoint(result.best, out.path() / sub / "checkpoint.bin");
    out.record_file(sub + "/checkpoint.bin");
    std::string csv = train_log_header() + "\n";
    for (const auto& e : result.log) csv += train_log_row(e) + "\n";
    out.write(sub + "/train_log.csv", csv);
    const double auc = result.best.provenance.val_macro_auc;
    per_fold.push_back({{"fold", f},
                        {"best_epoch", result.best.provenance.epoch},
                        {"val_macro_auc", json_number(auc)},
                        {"n_train", folds.training_indices(cohort, f).size()},
                        {"n_val", folds.validation_indices(cohort, f).size()},
                        {"checkpoint_digest", checkpoint_digest(result.best)}});
    if (std::isfinite(auc) && (!best_fold || auc > best_auc)) {
      best_fold = f;
      best_auc = auc;
    }
  }
  nlohmann::json summary = {{"folds", per_fold}};
  summary["best_fold"] = best_fold ? nlohmann::json(*best_fold) : nlohmann::json(nullptr);
  summary["best_val_macro_auc"] = best_fold ? nlohmann::json(best_auc) : nlohmann::json(nullptr);
  out.write_json("summary.json", summary);
  out.finish(cfg, dataset_digest(cfg.dataset));
  return 0;
}

inline int cmd_eval(const RunConfig& cfg) {
  const Cohort cohort = load_cohort(cfg);
  const ModelInputs inputs = prepare_inputs(cohort, cfg.threads);
  const Predictions pred = predict(cfg, cohort, inputs);
  EvalOptions opt = cfg.eval;
  opt.seed = cfg.run_seed();
  opt.threads = cfg.threads;
  const EvalReport report = evaluate_predictions(pred.probs, cohort, opt);

  OutputDir out(command_dir(cfg, "eval"), "eval");
  nlohmann::json j = to_json(report);
  j["predictions"] = pred.source;
  j["n_records"] = cohort.size();
  out.write_json("report.json", j);
  out.write("predictions.csv", predictions_csv(cohort, pred));
  out.write("roc_points.csv", roc_points_csv(report));
  out.write("calibration_bins.csv", calibration_bins_csv(report));
  out.write("grade_boxes.csv", grade_boxes_csv(report));
  const GroupEval& all = report.group("all");
  out.write("roc.svg", roc_svg(all));
  out.write("calibration.svg", calibration_svg(all));
  out.write("grade_boxes.svg", grade_boxes_svg(all));
  out.write("subgroups.svg", subgroups_svg(report));
  for (std::size_t g = 1; g < report.groups.size(); ++g) {
    const std::string tag = "subgroup_" + std::to_string(g);
    out.write(tag + "_roc.svg", roc_svg(report.groups[g]));
  }
  for (const auto& v : all.vessels) {
    log(LogLevel::info, "eval: " + std::string(vessel_name(v.vessel)) + " AUC " + (v.auc ? fmt(*v.auc) : "undefined"));
  }
  out.finish(cfg, dataset_digest(cfg.dataset), {{"predictions", pred.source}});
  return 0;
}

inline int cmd_stratify(const RunConfig& cfg) {
  const Cohort cohort = load_cohort(cfg);
  if (!cohort.has_follow_up()) fail(ErrorKind::data, "stratify needs follow-up for every record");
  const ModelInputs inputs = prepare_inputs(cohort, cfg.threads);
  const Predictions pred = predict(cfg, cohort, inputs);
  std::vector<FollowUp> fu;
  for (const auto& r : cohort.records) fu.push_back(*r.follow_up);
  const RiskReport report = risk_report(pred.probs, fu, cfg.thresholds, cfg.horizon_days);

  OutputDir out(command_dir(cfg, "stratify"), "stratify");
  out.write("risk_groups.csv", risk_groups_csv(report, cohort, pred.probs));
  out.write("incidence.csv", incidence_csv(report));
  nlohmann::json lr = logrank_json(report);
  lr["predictions"] = pred.source;
  out.write_json("logrank.json", lr);
  out.write("incidence.svg", incidence_svg(report, cfg.horizon_days));
  for (const auto& v : report.vessels) {
    log(LogLevel::info, "stratify: " + std::string(vessel_name(v.vessel)) + " high " + std::to_string(v.n_high) +
                            " low " + std::to_string(v.n_low) + (v.test ? " p " + fmt(v.test->p) : " " + v.note));
  }
  out.finish(cfg, dataset_digest(cfg.dataset), {{"predictions", pred.source}});
  return 0;
}

inline int cmd_explain(const RunConfig& cfg) {
  const Cohort cohort = load_cohort(cfg);
  std::vector<std::array<RiskGroup, kNumVessels>> groups(cohort.size());
  std::string source;
  {
    const ModelInputs inputs = prepare_inputs(cohort, cfg.threads);
    const Predictions pred = predict(cfg, cohort, inputs);
    source = pred.source;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      for (Vessel v : kVessels) groups[i][index_of(v)] = stratify(pred.probs[i * kNumVessels + index_of(v)], v, cfg.thresholds);
    }
  }

  // Beats are computed per chunk in parallel and folded in record order.
  std::array<WaveformAccumulator, kNumVessels> acc;
  std::size_t total_peaks = 0, total_beats = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t c0 = 0; c0 < cohort.size(); c0 += kChunk) {
    const std::size_t c1 = std::min(cohort.size(), c0 + kChunk);
    std::vector<BeatMatrix> beats(c1 - c0);
    std::vector<std::size_t> peaks(c1 - c0);
    parallel_for(c1 - c0, cfg.threads, [&](std::size_t i) {
      const auto& rec = cohort.records[c0 + i].ecg;
      const auto r = detect_r_peaks(rec);
      peaks[i] = r.size();
      beats[i] = segment_beats(rec, r);
    });
    for (std::size_t i = 0; i < beats.size(); ++i) {
      total_peaks += peaks[i];
      total_beats += beats[i].n_beats;
      for (Vessel v : kVessels) acc[index_of(v)].add(beats[i], groups[c0 + i][index_of(v)]);
    }
  }

  OutputDir out(command_dir(cfg, "explain"), "explain");
  nlohmann::json vessels = nlohmann::json::array();
  for (Vessel v : kVessels) {
    const WaveformSummary summary = acc[index_of(v)].summary();
    const std::string name(vessel_name(v));
    nlohmann::json j = {{"vessel", name}, {"threshold", cfg.thresholds[v]}, {"warnings", summary.warnings}};
    for (const auto& g : summary.groups) {
      j[std::string(risk_group_name(g.group))] = {{"records", g.records}, {"beats", g.beats}};
    }
    if (summary.groups.size() < 2) {
      j["omitted"] = true;
      for (const auto& w : summary.warnings) log(LogLevel::info, "explain: " + name + ": " + w);
      vessels.push_back(j);
      continue;
    }
    out.write("waveforms_" + name + ".csv", waveforms_csv(summary));
    out.write("waveforms_" + name + ".svg", waveforms_svg(summary, v));
    nlohmann::json st = nlohmann::json::array();
    try {
      for (const auto& s : st_separation(summary)) {
        st.push_back({{"lead", kLeadNames[s.lead]},
                      {"high_mean", s.high_mean},
                      {"low_mean", s.low_mean},
                      {"diff", s.diff},
                      {"se", s.se},
                      {"ratio", json_number(s.ratio)}});
      }
      j["st_separation"] = st;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_metric) throw;
      j["st_separation"] = std::string("undefined: ") + e.what();
    }
    vessels.push_back(j);
  }
  const auto st = st_window_samples();
  out.write_json("explain.json", {{"records", cohort.size()},
                                  {"r_peaks", total_peaks},
                                  {"beats", total_beats},
                                  {"beat_window_s", {-kBeatPre, kBeatPost}},
                                  {"beat_samples", kBeatSamples},
                                  {"st_window_samples", {st.first, st.last}},
                                  {"predictions", source},
                                  {"vessels", vessels}});
  out.finish(cfg, dataset_digest(cfg.dataset), {{"predictions", source}});
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data:
    case ErrorKind::shape:
    case ErrorKind::version:
    case ErrorKind::corrupt_file: return 3;
    case ErrorKind::numerical:
    case ErrorKind::undefined_metric: return 4;
  }
  return 1;
}

inline int report_error(std::string_view kind, const std::string& message, int code) {
  const nlohmann::json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  return code;
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"synth", "split", "train", "eval", "stratify", "explain"};
  return c;
}

inline int run(std::vector<std::string> args) {
  CLI::App app("stenograph: multi-vessel stenosis prediction from 12-lead ECG", "stenograph");
  app.set_version_flag("--version", std::string(kVersion));
  std::string command, config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("command", command, "synth | split | train | eval | stratify | explain")
      ->required()
      ->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", out, "dataset directory for synth, output root otherwise");
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config", e.what(), 2);
  }
  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    Overrides ov{seed, out ? std::optional<std::filesystem::path>(*out) : std::nullopt};
    if (out && command != "synth") cfg.output = *out;
    cfg.validate();
    cfg.threads = resolve_threads(cfg.threads);
    if (command == "synth") return cmd_synth(cfg, ov);
    if (command == "split") return cmd_split(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "stratify") return cmd_stratify(cfg);
    return cmd_explain(cfg);
  } catch (const Error& e) {
    return report_error(error_kind_name(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("data", e.what(), 3);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace stenograph::cli
