#include "xltrack/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "xltrack/errors.hpp"

namespace xltrack {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);  // binary: no CRLF translation anywhere
  if (!f) throw IoError("cannot write " + path);
  return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError("malformed number '" + s + "' in " + path);
  }
  return v;
}

}  // namespace

void sort_mse_rows(std::vector<MseCsvRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const MseCsvRow& a, const MseCsvRow& b) {
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    const std::string ka = trajectory_kind_to_string(a.kind);
    const std::string kb = trajectory_kind_to_string(b.kind);
    if (ka != kb) return ka < kb;
    return source_to_string(a.source) < source_to_string(b.source);
  });
}

void write_mse_csv(const std::string& path, const std::vector<MseCsvRow>& rows) {
  auto f = open_out(path);
  f << "snr_db,trajectory_kind,input_source,n_elements,mse_m2,n_samples\n";
  for (const MseCsvRow& r : rows) {
    f << binio::fmt_double(r.snr_db) << ',' << trajectory_kind_to_string(r.kind) << ','
      << source_to_string(r.source) << ',' << r.n_elements << ','
      << binio::fmt_double(r.mse_m2) << ',' << r.n_samples << '\n';
  }
}

void write_ablation_csv(const std::string& path, const std::vector<AblationCsvRow>& rows) {
  auto f = open_out(path);
  f << "model_variant,snr_db,trajectory_kind,input_source,n_elements,mse_m2,n_samples\n";
  for (const AblationCsvRow& a : rows) {
    const MseCsvRow& r = a.row;
    f << a.variant << ',' << binio::fmt_double(r.snr_db) << ','
      << trajectory_kind_to_string(r.kind) << ',' << source_to_string(r.source) << ','
      << r.n_elements << ',' << binio::fmt_double(r.mse_m2) << ',' << r.n_samples << '\n';
  }
}

void write_loss_curves_csv(const std::string& path, const std::vector<LossCurveRow>& rows) {
  auto f = open_out(path);
  f << "stage,epoch,train_loss,val_loss\n";
  for (const LossCurveRow& r : rows) {
    f << r.stage << ',' << r.epoch << ',' << binio::fmt_double(r.train_loss) << ','
      << binio::fmt_double(r.val_loss) << '\n';
  }
}

std::vector<MseCsvRow> read_mse_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line != "snr_db,trajectory_kind,input_source,n_elements,mse_m2,n_samples") {
    throw IoError(path + " does not start with the expected header");
  }
  std::vector<MseCsvRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) throw IoError("malformed row in " + path + ": " + line);
    MseCsvRow r;
    r.snr_db = parse_double(fields[0], path);
    r.kind = trajectory_kind_from_string(fields[1]);
    r.source = source_from_string(fields[2]);
    r.n_elements = static_cast<int>(parse_double(fields[3], path));
    r.mse_m2 = parse_double(fields[4], path);
    r.n_samples = static_cast<std::int64_t>(parse_double(fields[5], path));
    rows.push_back(r);
  }
  return rows;
}

std::vector<LossCurveRow> read_loss_curves_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "stage,epoch,train_loss,val_loss") {
    throw IoError(path + " does not start with the expected header");
  }
  std::vector<LossCurveRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw IoError("malformed row in " + path + ": " + line);
    LossCurveRow r;
    r.stage = fields[0];
    r.epoch = static_cast<int>(parse_double(fields[1], path));
    r.train_loss = parse_double(fields[2], path);
    r.val_loss = parse_double(fields[3], path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace xltrack
