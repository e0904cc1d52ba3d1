#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xltrack/features.hpp"

namespace xltrack {

// One data line of mse_vs_snr.csv; column order is part of the contract:
// snr_db, trajectory_kind, input_source, n_elements, mse_m2, n_samples.
struct MseCsvRow {
  double snr_db = 0.0;
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  InputSource source = InputSource::TrueRis;
  int n_elements = 0;
  double mse_m2 = 0.0;
  std::int64_t n_samples = 0;
};

// mse_ablation.csv adds the model variant in front of the same columns.
struct AblationCsvRow {
  std::string variant;  // full | stacked_lstm | lstm
  MseCsvRow row;
};

// loss_curves.csv: stage, epoch, train_loss, val_loss. Epoch 0 is the
// pre-training evaluation.
struct LossCurveRow {
  std::string stage;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

// Writers render numbers with 17 significant digits so a re-parse reproduces
// the doubles exactly; rows are written in the order given.
void write_mse_csv(const std::string& path, const std::vector<MseCsvRow>& rows);
void write_ablation_csv(const std::string& path, const std::vector<AblationCsvRow>& rows);
void write_loss_curves_csv(const std::string& path, const std::vector<LossCurveRow>& rows);

std::vector<MseCsvRow> read_mse_csv(const std::string& path);
std::vector<LossCurveRow> read_loss_curves_csv(const std::string& path);

// Deterministic presentation order: ascending SNR, then kind, then source name.
void sort_mse_rows(std::vector<MseCsvRow>& rows);

}  // namespace xltrack
