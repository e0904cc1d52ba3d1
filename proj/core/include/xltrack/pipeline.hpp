#pragma once

#include <string>
#include <vector>

#include "xltrack/config.hpp"
#include "xltrack/report.hpp"

namespace xltrack {

struct StageRecord {
  Stage stage = Stage::Generate;
  double seconds = 0.0;
  bool skipped = false;  // marker present and --force not given, or nothing to do
  bool failed = false;
  std::string note;
};

struct RunReport {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string run_dir;
  std::vector<StageRecord> stages;
  std::vector<MseCsvRow> mse_rows;
  std::vector<AblationCsvRow> ablation_rows;
  std::int64_t fresnel_warnings = 0;
  int skipped_sequences = 0;

  bool failed() const;
};

struct PipelineOptions {
  std::string out_root = "out";
  bool force = false;  // rerun requested stages even when their marker exists
};

// Executes the requested stages in dependency order inside the run directory
// out_root/<config hash>/, holding its lock file for the duration. Every stage
// is idempotent: a completion marker makes later invocations skip it unless
// forced. A stage failure is recorded and aborts the stages after it. An empty
// stage list returns an empty report without touching the filesystem.
RunReport run_pipeline(const ExperimentConfig& cfg, const std::vector<Stage>& stages,
                       const PipelineOptions& opts);

// Writes results/run_report.txt (human-oriented status; not a stable artifact).
void write_run_report(const RunReport& report, const std::string& path);

}  // namespace xltrack
