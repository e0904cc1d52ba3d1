#include "xltrack/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "binio.hpp"
#include "xltrack/checkpoint.hpp"
#include "xltrack/errors.hpp"

namespace fs = std::filesystem;

namespace xltrack {

namespace {

// Exclusive ownership of a run directory for the lifetime of this object.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / "lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw IoError("run directory " + dir.string() +
                    " is locked by another process (remove " + path_.string() +
                    " if that process is gone)");
    }
    ::close(fd);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

std::string sanitize(const std::string& label) {
  std::string out = label;
  std::replace(out.begin(), out.end(), ':', '_');
  return out;
}

std::string tracker_label(TrajectoryKind kind, InputSource source, const std::string& variant) {
  std::string label = "tracker:" + trajectory_kind_to_string(kind) + ":" +
                      source_to_string(source);
  if (variant != "full") label += ":" + variant;
  return label;
}

bool ablation_has(const AblationBlock& a, TrajectoryKind kind, InputSource source) {
  return !a.variants.empty() &&
         std::find(a.kinds.begin(), a.kinds.end(), kind) != a.kinds.end() &&
         std::find(a.sources.begin(), a.sources.end(), source) != a.sources.end();
}

std::vector<std::string> variants_for(const ExperimentConfig& cfg, TrajectoryKind kind,
                                      InputSource source) {
  std::vector<std::string> out{"full"};
  if (ablation_has(cfg.tracker.ablation, kind, source)) {
    for (const auto& v : cfg.tracker.ablation.variants) out.push_back(v);
  }
  return out;
}

bool wants_recon_source(const ExperimentConfig& cfg) {
  return std::find(cfg.features.sources.begin(), cfg.features.sources.end(),
                   InputSource::ReconRis) != cfg.features.sources.end();
}

struct StageContext {
  const ExperimentConfig& cfg;
  fs::path run;
  RunReport& report;
};

fs::path data_dir(const StageContext& ctx, TrajectoryKind kind) {
  return ctx.run / "data" / trajectory_kind_to_string(kind);
}

fs::path features_dir(const StageContext& ctx, TrajectoryKind kind, InputSource source) {
  return ctx.run / "features" / trajectory_kind_to_string(kind) / source_to_string(source);
}

fs::path tracker_ckpt(const StageContext& ctx, TrajectoryKind kind, InputSource source,
                      const std::string& variant) {
  return ctx.run / "models" /
         ("tracker_" + trajectory_kind_to_string(kind) + "_" + source_to_string(source) +
          "_" + variant + ".ckpt");
}

void write_curve_file(const fs::path& path, const std::string& stage_name,
                      const std::vector<double>& train, const std::vector<double>& val) {
  std::vector<LossCurveRow> rows;
  rows.reserve(train.size());
  for (std::size_t e = 0; e < train.size(); ++e) {
    rows.push_back({stage_name, static_cast<int>(e), train[e], val[e]});
  }
  write_loss_curves_csv(path.string(), rows);
}

void stage_generate(StageContext& ctx) {
  const ScenarioGeometry geom = ctx.cfg.geometry.build();
  std::ostringstream summary;
  std::int64_t warnings = 0;
  for (TrajectoryKind kind : ctx.cfg.trajectories.kinds) {
    const Dataset ds = generate_dataset(ctx.cfg.generation_params(kind), geom);
    save_dataset(ds, data_dir(ctx, kind).string());
    warnings += ds.fresnel_warnings;
    summary << trajectory_kind_to_string(kind) << ": records = " << ds.records.size()
            << ", near_field_warnings = " << ds.fresnel_warnings << "\n";
  }
  ctx.report.fresnel_warnings = warnings;
  std::ofstream f(ctx.run / "data" / "summary.txt", std::ios::binary);
  f << summary.str();
}

std::string stage_train_recon(StageContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (!wants_recon_source(cfg)) {
    return "nothing to do: no reconstructed source configured";
  }
  const Dataset ds = load_dataset(data_dir(ctx, cfg.recon.train_kind).string());
  std::vector<const SlotRecord*> train_recs, val_recs;
  for (const SlotRecord& r : ds.records) {
    if (r.snr_db != cfg.recon.train_snr_db) continue;
    if (r.split == Split::Train &&
        static_cast<int>(train_recs.size()) < cfg.recon.max_train_records) {
      train_recs.push_back(&r);
    } else if (r.split == Split::Test &&
               static_cast<int>(val_recs.size()) < cfg.recon.max_val_records) {
      val_recs.push_back(&r);
    }
  }
  Rng init_rng(derive_seed(cfg.execution.master_seed, "recon-init", 0));
  ReconModel model(cfg.recon_config(), init_rng);
  const LossCurve curve = train_recon(model, train_recs, val_recs, cfg.recon_hyper());
  save_recon(model, (ctx.run / "models" / "recon.ckpt").string());
  write_curve_file(ctx.run / "curves" / "recon.csv", "recon", curve.train, curve.val);
  return "trained on " + std::to_string(train_recs.size()) + " records";
}

void stage_extract(StageContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const FeatureParams params = cfg.feature_params();
  const bool wants_recon = wants_recon_source(cfg);
  std::optional<ReconModel> recon;
  if (wants_recon) recon = load_recon((ctx.run / "models" / "recon.ckpt").string());

  bool extractors_saved = false;
  for (TrajectoryKind kind : cfg.trajectories.kinds) {
    const Dataset ds = load_dataset(data_dir(ctx, kind).string());
    std::vector<std::vector<cxd>> recon_signals;
    if (wants_recon) {
      std::vector<const SlotRecord*> recs;
      recs.reserve(ds.records.size());
      for (const SlotRecord& r : ds.records) recs.push_back(&r);
      recon_signals = recon_forward_batch(*recon, recs);
    }
    for (InputSource source : cfg.features.sources) {
      const FeatureSet set = extract_features(ds, source, params,
                                              wants_recon ? &recon_signals : nullptr);
      save_features(set, features_dir(ctx, kind, source).string());
    }
    if (!extractors_saved) {
      // Frozen projector weights, persisted for auditability.
      for (InputSource source : {InputSource::Bs, InputSource::TrueRis}) {
        CnnExtractor ex = make_cnn_extractor(ds, source, params);
        std::vector<nn::CheckpointEntry> entries;
        nn::append_params(entries, ex.parameters());
        const char* name = source == InputSource::Bs ? "cnn_bs.ckpt" : "cnn_ris.ckpt";
        nn::save_checkpoint((ctx.run / "models" / name).string(), entries);
      }
      extractors_saved = true;
    }
  }
}

void stage_train_tracker(StageContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  int skipped = 0;
  for (TrajectoryKind kind : cfg.trajectories.kinds) {
    for (InputSource source : cfg.features.sources) {
      const FeatureSet set = load_features(features_dir(ctx, kind, source).string());
      SequenceBuildResult seq = build_sequences(set, cfg.tracker.t_window);
      skipped += seq.skipped_trajectories;
      std::vector<SequenceSample> train_s, val_s;
      for (SequenceSample& s : seq.samples) {
        (s.split == Split::Train ? train_s : val_s).push_back(std::move(s));
      }
      for (const std::string& variant : variants_for(cfg, kind, source)) {
        const std::string label = tracker_label(kind, source, variant);
        const TrackerConfig tc = cfg.tracker_config(set.feature_length(), variant);
        TrackerTrainResult res =
            train_tracker(train_s, val_s, tc, cfg.tracker_hyper(label));
        save_tracker(res.model, tracker_ckpt(ctx, kind, source, variant).string());
        write_curve_file(ctx.run / "curves" / (sanitize(label) + ".csv"), label,
                         res.curve.train, res.curve.val);
      }
    }
  }
  ctx.report.skipped_sequences = skipped;
}

std::string stage_evaluate(StageContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const int n_elements = cfg.geometry.n1 * cfg.geometry.n2;
  std::vector<MseCsvRow> rows;
  std::vector<AblationCsvRow> ablation_rows;
  std::string notes;
  for (TrajectoryKind kind : cfg.trajectories.kinds) {
    for (InputSource source : cfg.features.sources) {
      const FeatureSet set = load_features(features_dir(ctx, kind, source).string());
      SequenceBuildResult seq = build_sequences(set, cfg.tracker.t_window);
      std::vector<SequenceSample> test_s;
      for (SequenceSample& s : seq.samples) {
        if (s.split == Split::Test) test_s.push_back(std::move(s));
      }
      if (test_s.empty()) {
        notes += "no test sequences for " + trajectory_kind_to_string(kind) + "/" +
                 source_to_string(source) + "; rows omitted. ";
        continue;
      }
      for (const std::string& variant : variants_for(cfg, kind, source)) {
        TrackerModel model = load_tracker(tracker_ckpt(ctx, kind, source, variant).string());
        const std::vector<MseGroup> groups = evaluate(model, test_s);
        for (const MseGroup& g : groups) {
          const MseCsvRow row{g.snr_db, g.kind, g.source, n_elements, g.mse_m2, g.n_samples};
          if (variant == "full") rows.push_back(row);
          if (ablation_has(cfg.tracker.ablation, kind, source)) {
            ablation_rows.push_back({variant, row});
          }
        }
      }
    }
  }
  sort_mse_rows(rows);
  fs::create_directories(ctx.run / "results");
  write_mse_csv((ctx.run / "results" / "mse_vs_snr.csv").string(), rows);
  write_ablation_csv((ctx.run / "results" / "mse_ablation.csv").string(), ablation_rows);

  // Aggregate the per-stage loss curves in a deterministic label order.
  std::vector<LossCurveRow> curves;
  std::vector<std::string> labels{"recon"};
  for (TrajectoryKind kind : cfg.trajectories.kinds) {
    for (InputSource source : cfg.features.sources) {
      for (const std::string& variant : variants_for(cfg, kind, source)) {
        labels.push_back(tracker_label(kind, source, variant));
      }
    }
  }
  for (const std::string& label : labels) {
    const fs::path p = ctx.run / "curves" / (sanitize(label) + ".csv");
    if (!fs::exists(p)) continue;
    for (LossCurveRow& r : read_loss_curves_csv(p.string())) curves.push_back(std::move(r));
  }
  write_loss_curves_csv((ctx.run / "results" / "loss_curves.csv").string(), curves);

  ctx.report.mse_rows = std::move(rows);
  ctx.report.ablation_rows = std::move(ablation_rows);
  return notes;
}

}  // namespace

bool RunReport::failed() const {
  return std::any_of(stages.begin(), stages.end(),
                     [](const StageRecord& s) { return s.failed; });
}

RunReport run_pipeline(const ExperimentConfig& cfg, const std::vector<Stage>& stages,
                       const PipelineOptions& opts) {
  RunReport report;
  report.config_hash = cfg.hash();
  report.master_seed = cfg.execution.master_seed;
  if (stages.empty()) return report;

  // Dependency order == declaration order; run each requested stage once.
  std::vector<Stage> ordered;
  for (Stage s : all_stages()) {
    if (std::find(stages.begin(), stages.end(), s) != stages.end()) ordered.push_back(s);
  }

  const fs::path run = fs::path(opts.out_root) / report.config_hash;
  report.run_dir = run.string();
  fs::create_directories(run);
  for (const char* sub : {"data", "models", "features", "curves", "results"}) {
    fs::create_directories(run / sub);
  }
  const std::string serialized = serialize_config(cfg);
  const fs::path cfg_path = run / "config.json";
  if (fs::exists(cfg_path)) {
    std::ifstream f(cfg_path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    if (ss.str() != serialized) {
      throw IoError("run directory " + run.string() +
                    " holds a different config with the same hash; refusing to mix runs");
    }
  } else {
    std::ofstream f(cfg_path, std::ios::binary);
    f << serialized;
  }

  RunLock lock(run);
  StageContext ctx{cfg, run, report};
  for (Stage s : ordered) {
    StageRecord rec;
    rec.stage = s;
    const fs::path marker = run / (stage_to_string(s) + ".done");
    if (fs::exists(marker) && !opts.force) {
      rec.skipped = true;
      rec.note = "marker present";
      report.stages.push_back(rec);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (s) {
        case Stage::Generate: stage_generate(ctx); break;
        case Stage::TrainRecon: rec.note = stage_train_recon(ctx); break;
        case Stage::ExtractFeatures: stage_extract(ctx); break;
        case Stage::TrainTracker: stage_train_tracker(ctx); break;
        case Stage::Evaluate: rec.note = stage_evaluate(ctx); break;
      }
      std::ofstream m(marker, std::ios::binary);
      m << "ok\n";
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.note = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.stages.push_back(rec);
    if (rec.failed) break;
  }
  write_run_report(report, (run / "results" / "run_report.txt").string());
  return report;
}

void write_run_report(const RunReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << "config_hash = " << report.config_hash << "\n";
  f << "master_seed = " << report.master_seed << "\n";
  f << "run_dir = " << report.run_dir << "\n";
  f << "fresnel_warnings = " << report.fresnel_warnings << "\n";
  f << "skipped_sequences = " << report.skipped_sequences << "\n";
  for (const StageRecord& s : report.stages) {
    f << "stage " << stage_to_string(s.stage) << ": "
      << (s.failed ? "failed" : s.skipped ? "skipped" : "ok");
    char buf[32];
    std::snprintf(buf, sizeof(buf), " (%.3f s)", s.seconds);
    f << buf;
    if (!s.note.empty()) f << " - " << s.note;
    f << "\n";
  }
  f << "mse_rows = " << report.mse_rows.size() << "\n";
  f << "ablation_rows = " << report.ablation_rows.size() << "\n";
}

}  // namespace xltrack
