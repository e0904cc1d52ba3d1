#include "xltrack/features.hpp"

#include <filesystem>
#include <fstream>

#include "binio.hpp"
#include "xltrack/errors.hpp"

namespace fs = std::filesystem;

namespace xltrack {

InputSource source_from_string(const std::string& s) {
  if (s == "bs") return InputSource::Bs;
  if (s == "true_ris") return InputSource::TrueRis;
  if (s == "recon_ris") return InputSource::ReconRis;
  throw ConfigError("unknown input source '" + s + "' (expected bs|true_ris|recon_ris)");
}

std::string source_to_string(InputSource s) {
  switch (s) {
    case InputSource::Bs: return "bs";
    case InputSource::TrueRis: return "true_ris";
    case InputSource::ReconRis: return "recon_ris";
  }
  throw DomainError("unhandled input source");
}

CnnExtractor make_cnn_extractor(const Dataset& ds, InputSource source,
                                const FeatureParams& params) {
  CnnConfig cfg = params.cnn;
  const bool bs = source == InputSource::Bs;
  cfg.in_h = bs ? ds.geometry.m1 : ds.geometry.n1;
  cfg.in_w = bs ? ds.geometry.m2 : ds.geometry.n2;
  // One weight chain per input grid: both RIS-side sources share the same
  // frozen projector so their features are directly comparable.
  const char* label = bs ? "cnn:bs" : "cnn:ris";
  Rng rng(derive_seed(ds.params.master_seed, label, 0));
  return CnnExtractor(cfg, rng);
}

FeatureSet extract_features(const Dataset& ds, InputSource source,
                            const FeatureParams& params,
                            const std::vector<std::vector<cxd>>* recon_signals) {
  const bool bs = source == InputSource::Bs;
  if (source == InputSource::ReconRis) {
    if (recon_signals == nullptr || recon_signals->size() != ds.records.size()) {
      throw ShapeError("extract_features: reconstructed signals missing or misaligned "
                       "with the dataset records");
    }
  }
  const CnnExtractor cnn = make_cnn_extractor(ds, source, params);
  std::optional<AoaExtractor> aoa;
  if (!bs && params.aoa_enabled) aoa.emplace(ds.geometry, params.aoa);

  FeatureSet out;
  out.source = source;
  out.kind = ds.params.kind;
  out.cnn_length = params.cnn.n_f;
  out.tf_length = 4;
  out.aoa_length = aoa ? aoa->feature_length() : 0;
  out.records.reserve(ds.records.size());

  const int d1 = bs ? ds.geometry.m1 : ds.geometry.n1;
  const int d2 = bs ? ds.geometry.m2 : ds.geometry.n2;
  const std::string label = "feat:" + source_to_string(source);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const SlotRecord& rec = ds.records[i];
    const std::vector<cxd>& sig = bs ? rec.y
                                  : source == InputSource::TrueRis
                                      ? rec.y_r
                                      : (*recon_signals)[i];
    const std::vector<double> c = cnn.features(preprocess_ris(sig, d1, d2));
    const std::vector<double> t = tf_features(sig).as_vector();
    std::vector<double> a;
    if (aoa) {
      Rng rec_rng(derive_seed(ds.params.master_seed, label, i));
      a = aoa->features(sig, rec.snr_db, rec_rng);
    }
    FeatureRecord fr;
    fr.traj_id = rec.traj_id;
    fr.step = rec.step;
    fr.kind = rec.kind;
    fr.split = rec.split;
    fr.snr_db = rec.snr_db;
    fr.position = rec.position;
    fr.features = final_features(std::move(c), std::move(t), std::move(a)).final;
    out.records.push_back(std::move(fr));
  }
  return out;
}

void save_features(const FeatureSet& set, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!f) throw IoError("cannot write feature manifest in " + dir);
    f << "source = " << source_to_string(set.source) << "\n";
    f << "kind = " << trajectory_kind_to_string(set.kind) << "\n";
    f << "cnn_length = " << set.cnn_length << "\n";
    f << "tf_length = " << set.tf_length << "\n";
    f << "aoa_length = " << set.aoa_length << "\n";
    f << "n_records = " << set.records.size() << "\n";
  }
  std::string buf;
  const std::size_t stride = 8 + static_cast<std::size_t>(set.feature_length());
  buf.reserve(set.records.size() * stride * 8);
  for (const FeatureRecord& r : set.records) {
    if (static_cast<int>(r.features.size()) != set.feature_length()) {
      throw ShapeError("save_features: record feature length " +
                       std::to_string(r.features.size()) + " != declared " +
                       std::to_string(set.feature_length()));
    }
    binio::append_f64_le(buf, static_cast<double>(r.traj_id));
    binio::append_f64_le(buf, static_cast<double>(r.step));
    binio::append_f64_le(buf, static_cast<double>(static_cast<int>(r.kind)));
    binio::append_f64_le(buf, static_cast<double>(static_cast<int>(r.split)));
    binio::append_f64_le(buf, r.snr_db);
    binio::append_f64_le(buf, r.position.x);
    binio::append_f64_le(buf, r.position.y);
    binio::append_f64_le(buf, r.position.z);
    for (double v : r.features) binio::append_f64_le(buf, v);
  }
  std::ofstream f(fs::path(dir) / "records.bin", std::ios::binary);
  if (!f) throw IoError("cannot write feature records in " + dir);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

namespace {

int manifest_int(const std::map<std::string, std::string>& m, const std::string& key,
                 const std::string& dir) {
  auto it = m.find(key);
  if (it == m.end()) throw IoError("feature manifest in " + dir + " missing key " + key);
  return std::stoi(it->second);
}

std::string manifest_str(const std::map<std::string, std::string>& m, const std::string& key,
                         const std::string& dir) {
  auto it = m.find(key);
  if (it == m.end()) throw IoError("feature manifest in " + dir + " missing key " + key);
  return it->second;
}

}  // namespace

FeatureSet load_features(const std::string& dir) {
  const auto m = read_manifest((fs::path(dir) / "manifest.txt").string());
  FeatureSet set;
  set.source = source_from_string(manifest_str(m, "source", dir));
  set.kind = trajectory_kind_from_string(manifest_str(m, "kind", dir));
  set.cnn_length = manifest_int(m, "cnn_length", dir);
  set.tf_length = manifest_int(m, "tf_length", dir);
  set.aoa_length = manifest_int(m, "aoa_length", dir);
  const int n_records = manifest_int(m, "n_records", dir);

  std::ifstream f(fs::path(dir) / "records.bin", std::ios::binary);
  if (!f) throw IoError("cannot open feature records in " + dir);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::size_t stride = (8 + static_cast<std::size_t>(set.feature_length())) * 8;
  if (buf.size() != stride * static_cast<std::size_t>(n_records)) {
    throw IoError("feature records in " + dir + " have unexpected size " +
                  std::to_string(buf.size()) + " (expected " +
                  std::to_string(stride * n_records) + ")");
  }
  set.records.resize(n_records);
  const char* cur = buf.data();
  for (FeatureRecord& r : set.records) {
    r.traj_id = static_cast<std::int64_t>(binio::read_f64_le(cur)); cur += 8;
    r.step = static_cast<int>(binio::read_f64_le(cur)); cur += 8;
    r.kind = static_cast<TrajectoryKind>(static_cast<int>(binio::read_f64_le(cur))); cur += 8;
    r.split = static_cast<Split>(static_cast<int>(binio::read_f64_le(cur))); cur += 8;
    r.snr_db = binio::read_f64_le(cur); cur += 8;
    r.position.x = binio::read_f64_le(cur); cur += 8;
    r.position.y = binio::read_f64_le(cur); cur += 8;
    r.position.z = binio::read_f64_le(cur); cur += 8;
    r.features.resize(set.feature_length());
    for (double& v : r.features) { v = binio::read_f64_le(cur); cur += 8; }
  }
  return set;
}

}  // namespace xltrack
