#include "xltrack/dataset.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xltrack/errors.hpp"

namespace xltrack {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_position(const Position3D& p) {
  return fmt_double(p.x) + "," + fmt_double(p.y) + "," + fmt_double(p.z);
}

Position3D parse_position(const std::string& s) {
  Position3D p;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.z) != 3) {
    throw IoError("manifest: bad position triple '" + s + "'");
  }
  return p;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::string fmt_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

void append_f64_le(std::string& buf, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double read_f64_le(const char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) {
    u |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<double>(u);
}

PhaseProfile derive_omega(const GenerationParams& p, int n) {
  if (!p.omega_random) return PhaseProfile::ones(n);
  Rng rng(derive_seed(p.master_seed, "omega"));
  return PhaseProfile::random(n, rng);
}

constexpr int kStartRedrawCap = 1000;

Trajectory draw_trajectory(const GenerationParams& p, Rng& rng) {
  if (p.kind == TrajectoryKind::RandomWalk) {
    for (;;) {
      const auto s = rng.point_in_box(p.bounds.x_max, p.bounds.y_max, p.bounds.z_max);
      return random_walk({s[0], s[1], s[2]}, p.steps, p.bounds, rng);
    }
  }
  // Wave and spiral paths can exit the box for an unlucky start; re-draw the
  // start point until the whole path fits.
  for (int attempt = 0; attempt < kStartRedrawCap; ++attempt) {
    const auto s = rng.point_in_box(p.bounds.x_max, p.bounds.y_max, p.bounds.z_max);
    const Position3D start{s[0], s[1], s[2]};
    try {
      if (p.kind == TrajectoryKind::Wave) {
        return wave(start, p.steps, p.wave_amplitude, p.wave_wavelength,
                    p.wave_span, p.bounds);
      }
      return spiral(start, p.steps, p.spiral_a, p.spiral_b, p.spiral_dtheta,
                    p.bounds);
    } catch (const DomainError&) {
      // path left the workspace; try another start
    }
  }
  throw DomainError(
      "generate_dataset: no valid start found in " + std::to_string(kStartRedrawCap) +
      " draws for kind '" + trajectory_kind_to_string(p.kind) +
      "'; motion parameters are too large for the workspace");
}

}  // namespace

void GenerationParams::validate() const {
  std::vector<std::string> issues;
  if (count < 1) issues.push_back("trajectory count must be >= 1");
  if (steps < 2) issues.push_back("steps must be >= 2");
  if (snr_grid_db.empty()) issues.push_back("snr grid must not be empty");
  if (split_fraction < 0.0 || split_fraction > 1.0) {
    issues.push_back("split fraction must lie in [0, 1]");
  }
  if (n_scatterers < 0) issues.push_back("scatterer count must be >= 0");
  if (los_power < 0.0 || scatter_power_ratio < 0.0) {
    issues.push_back("path powers must be >= 0");
  }
  try {
    bounds.validate();
  } catch (const Error& e) {
    issues.push_back(e.what());
  }
  if (!issues.empty()) throw ConfigError(issues);
}

int Dataset::train_trajectories() const {
  int c = static_cast<int>(std::floor(params.count * params.split_fraction));
  if (params.count >= 1 && c < 1) c = 1;
  if (c > params.count) c = params.count;
  return c;
}

Dataset generate_dataset(const GenerationParams& params,
                         const ScenarioGeometry& geom) {
  params.validate();

  Dataset ds;
  ds.params = params;
  ds.geometry = geom;
  ds.omega = derive_omega(params, geom.n());

  const cxd pilot = pilot_from_dbm(params.transmit_power_dbm);
  const ComplexMatrix H = bs_ris_channel(geom, params.beta);
  UplinkOptions opts;
  opts.beta = params.beta;

  const int train_count = ds.train_trajectories();
  const std::string kind_label =
      "traj:" + trajectory_kind_to_string(params.kind);

  ds.records.reserve(static_cast<std::size_t>(params.count) * params.steps *
                     params.snr_grid_db.size());
  for (int t = 0; t < params.count; ++t) {
    Rng rng(derive_seed(params.master_seed, kind_label, t));
    const Trajectory traj = draw_trajectory(params, rng);
    const ScattererSet scat = ScattererSet::random(
        params.n_scatterers, params.bounds.x_max, params.bounds.y_max,
        params.bounds.z_max, params.los_power, params.scatter_power_ratio, rng);
    const Split split = (t < train_count) ? Split::Train : Split::Test;

    for (int k = 0; k < params.steps; ++k) {
      const Position3D& p = traj.points[k];
      // Clean pass fixes the per-record signal power the SNR grid refers to.
      const UplinkResult clean =
          simulate_uplink(p, scat, geom, ds.omega, pilot, 0.0, rng, H, opts);
      double sig_power = 0.0;
      for (const auto& v : clean.y.samples) sig_power += std::norm(v);

      for (const double snr_db : params.snr_grid_db) {
        const double snr_lin = std::pow(10.0, snr_db / 10.0);
        const double noise_var = sig_power / (geom.m() * snr_lin);
        UplinkOptions rec_opts = opts;
        if (params.ris_noise) {
          double ris_power = 0.0;
          for (const auto& v : clean.y_r.samples) ris_power += std::norm(v);
          rec_opts.ris_noise = true;
          rec_opts.ris_noise_variance = ris_power / (geom.n() * snr_lin);
        }
        UplinkResult res = simulate_uplink(p, scat, geom, ds.omega, pilot,
                                           noise_var, rng, H, rec_opts);
        if (res.fresnel) ++ds.fresnel_warnings;

        SlotRecord rec;
        rec.traj_id = t;
        rec.step = k;
        rec.kind = params.kind;
        rec.split = split;
        rec.snr_db = snr_db;
        rec.position = p;
        rec.y = std::move(res.y.samples);
        rec.y_r = std::move(res.y_r.samples);
        ds.records.push_back(std::move(rec));
      }
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("save_dataset: cannot create '" + dir + "': " + ec.message());

  const auto& p = ds.params;
  const auto& g = ds.geometry;
  std::ostringstream man;
  man << "format = xltrack-dataset-v1\n";
  man << "kind = " << trajectory_kind_to_string(p.kind) << "\n";
  man << "count = " << p.count << "\n";
  man << "steps = " << p.steps << "\n";
  man << "n_records = " << ds.records.size() << "\n";
  man << "snr_grid = " << fmt_double_list(p.snr_grid_db) << "\n";
  man << "n1 = " << g.n1 << "\n";
  man << "n2 = " << g.n2 << "\n";
  man << "m1 = " << g.m1 << "\n";
  man << "m2 = " << g.m2 << "\n";
  man << "spacing = " << fmt_double(g.spacing) << "\n";
  man << "wavelength = " << fmt_double(g.wavelength) << "\n";
  man << "ris_center = " << fmt_position(g.ris_center) << "\n";
  man << "bs_center = " << fmt_position(g.bs_center) << "\n";
  man << "ris_normal = " << axis_to_string(g.ris_normal) << "\n";
  man << "bs_normal = " << axis_to_string(g.bs_normal) << "\n";
  man << "bounds = " << fmt_double(p.bounds.x_max) << "," << fmt_double(p.bounds.y_max)
      << "," << fmt_double(p.bounds.z_max) << "\n";
  man << "wave_amplitude = " << fmt_double(p.wave_amplitude) << "\n";
  man << "wave_wavelength = " << fmt_double(p.wave_wavelength) << "\n";
  man << "wave_span = " << fmt_double(p.wave_span) << "\n";
  man << "spiral_a = " << fmt_double(p.spiral_a) << "\n";
  man << "spiral_b = " << fmt_double(p.spiral_b) << "\n";
  man << "spiral_dtheta = " << fmt_double(p.spiral_dtheta) << "\n";
  man << "n_scatterers = " << p.n_scatterers << "\n";
  man << "los_power = " << fmt_double(p.los_power) << "\n";
  man << "scatter_power_ratio = " << fmt_double(p.scatter_power_ratio) << "\n";
  man << "omega_mode = " << (p.omega_random ? "random" : "ones") << "\n";
  man << "transmit_power_dbm = " << fmt_double(p.transmit_power_dbm) << "\n";
  man << "beta = " << fmt_double(p.beta.real()) << "," << fmt_double(p.beta.imag()) << "\n";
  man << "ris_noise = " << (p.ris_noise ? 1 : 0) << "\n";
  man << "split_fraction = " << fmt_double(p.split_fraction) << "\n";
  man << "train_trajectories = " << ds.train_trajectories() << "\n";
  man << "master_seed = " << p.master_seed << "\n";
  man << "fresnel_warnings = " << ds.fresnel_warnings << "\n";
  {
    // Fingerprint of the array layout; consumers refuse to mix artifacts
    // produced under different geometries.
    std::ostringstream gstr;
    gstr << g.n1 << "|" << g.n2 << "|" << g.m1 << "|" << g.m2 << "|"
         << fmt_double(g.spacing) << "|" << fmt_double(g.wavelength) << "|"
         << fmt_position(g.ris_center) << "|" << fmt_position(g.bs_center) << "|"
         << axis_to_string(g.ris_normal) << "|" << axis_to_string(g.bs_normal);
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, fnv1a64(gstr.str()));
    man << "geometry_hash = " << hex << "\n";
  }

  {
    std::ofstream f(fs::path(dir) / "manifest.txt", std::ios::binary);
    if (!f) throw IoError("save_dataset: cannot write manifest in '" + dir + "'");
    f << man.str();
  }

  std::string buf;
  buf.reserve(ds.records.size() * (8 + 2 * (g.m() + g.n())) * 8);
  for (const auto& r : ds.records) {
    append_f64_le(buf, static_cast<double>(r.traj_id));
    append_f64_le(buf, static_cast<double>(r.step));
    append_f64_le(buf, static_cast<double>(static_cast<int>(r.kind)));
    append_f64_le(buf, static_cast<double>(static_cast<int>(r.split)));
    append_f64_le(buf, r.snr_db);
    append_f64_le(buf, r.position.x);
    append_f64_le(buf, r.position.y);
    append_f64_le(buf, r.position.z);
    for (const auto& v : r.y) {
      append_f64_le(buf, v.real());
      append_f64_le(buf, v.imag());
    }
    for (const auto& v : r.y_r) {
      append_f64_le(buf, v.real());
      append_f64_le(buf, v.imag());
    }
  }
  std::ofstream f(fs::path(dir) / "records.bin", std::ios::binary);
  if (!f) throw IoError("save_dataset: cannot write records in '" + dir + "'");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("save_dataset: short write to '" + dir + "/records.bin'");
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw IoError("manifest '" + path + "': malformed line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

namespace {
const std::string& need(const std::map<std::string, std::string>& kv,
                        const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError("manifest '" + path + "': missing key '" + key + "'");
  return it->second;
}
}  // namespace

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string man_path = (fs::path(dir) / "manifest.txt").string();
  const auto kv = read_manifest(man_path);
  if (need(kv, "format", man_path) != "xltrack-dataset-v1") {
    throw IoError("load_dataset: unsupported format '" + kv.at("format") + "'");
  }

  Dataset ds;
  GenerationParams& p = ds.params;
  p.kind = trajectory_kind_from_string(need(kv, "kind", man_path));
  p.count = std::stoi(need(kv, "count", man_path));
  p.steps = std::stoi(need(kv, "steps", man_path));
  p.snr_grid_db = parse_double_list(need(kv, "snr_grid", man_path));
  const auto b = parse_double_list(need(kv, "bounds", man_path));
  if (b.size() != 3) throw IoError("manifest: bounds needs 3 values");
  p.bounds = {b[0], b[1], b[2]};
  p.wave_amplitude = std::stod(need(kv, "wave_amplitude", man_path));
  p.wave_wavelength = std::stod(need(kv, "wave_wavelength", man_path));
  p.wave_span = std::stod(need(kv, "wave_span", man_path));
  p.spiral_a = std::stod(need(kv, "spiral_a", man_path));
  p.spiral_b = std::stod(need(kv, "spiral_b", man_path));
  p.spiral_dtheta = std::stod(need(kv, "spiral_dtheta", man_path));
  p.n_scatterers = std::stoi(need(kv, "n_scatterers", man_path));
  p.los_power = std::stod(need(kv, "los_power", man_path));
  p.scatter_power_ratio = std::stod(need(kv, "scatter_power_ratio", man_path));
  p.omega_random = need(kv, "omega_mode", man_path) == "random";
  p.transmit_power_dbm = std::stod(need(kv, "transmit_power_dbm", man_path));
  const auto beta = parse_double_list(need(kv, "beta", man_path));
  if (beta.size() != 2) throw IoError("manifest: beta needs 2 values");
  p.beta = {beta[0], beta[1]};
  p.ris_noise = std::stoi(need(kv, "ris_noise", man_path)) != 0;
  p.split_fraction = std::stod(need(kv, "split_fraction", man_path));
  p.master_seed = std::stoull(need(kv, "master_seed", man_path));
  ds.fresnel_warnings = std::stoll(need(kv, "fresnel_warnings", man_path));

  ds.geometry = build_geometry(
      std::stoi(need(kv, "n1", man_path)), std::stoi(need(kv, "n2", man_path)),
      std::stoi(need(kv, "m1", man_path)), std::stoi(need(kv, "m2", man_path)),
      std::stod(need(kv, "spacing", man_path)),
      parse_position(need(kv, "ris_center", man_path)),
      parse_position(need(kv, "bs_center", man_path)),
      axis_from_string(need(kv, "ris_normal", man_path)),
      axis_from_string(need(kv, "bs_normal", man_path)),
      std::stod(need(kv, "wavelength", man_path)));
  ds.omega = derive_omega(p, ds.geometry.n());

  const std::size_t n_records = std::stoull(need(kv, "n_records", man_path));
  const std::size_t doubles_per_record =
      8 + 2 * (static_cast<std::size_t>(ds.geometry.m()) + ds.geometry.n());

  std::ifstream f(fs::path(dir) / "records.bin", std::ios::binary);
  if (!f) throw IoError("load_dataset: cannot open '" + dir + "/records.bin'");
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() != n_records * doubles_per_record * 8) {
    throw IoError("load_dataset: '" + dir + "/records.bin' holds " +
                  std::to_string(bytes.size()) + " bytes, manifest implies " +
                  std::to_string(n_records * doubles_per_record * 8));
  }

  ds.records.resize(n_records);
  const char* cur = bytes.data();
  for (auto& r : ds.records) {
    r.traj_id = static_cast<std::int64_t>(read_f64_le(cur)); cur += 8;
    r.step = static_cast<int>(read_f64_le(cur)); cur += 8;
    r.kind = static_cast<TrajectoryKind>(static_cast<int>(read_f64_le(cur))); cur += 8;
    r.split = static_cast<Split>(static_cast<int>(read_f64_le(cur))); cur += 8;
    r.snr_db = read_f64_le(cur); cur += 8;
    r.position.x = read_f64_le(cur); cur += 8;
    r.position.y = read_f64_le(cur); cur += 8;
    r.position.z = read_f64_le(cur); cur += 8;
    r.y.resize(ds.geometry.m());
    for (auto& v : r.y) {
      const double re = read_f64_le(cur); cur += 8;
      const double im = read_f64_le(cur); cur += 8;
      v = {re, im};
    }
    r.y_r.resize(ds.geometry.n());
    for (auto& v : r.y_r) {
      const double re = read_f64_le(cur); cur += 8;
      const double im = read_f64_le(cur); cur += 8;
      v = {re, im};
    }
  }
  return ds;
}

}  // namespace xltrack
