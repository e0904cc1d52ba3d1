#include "xltrack/aoa.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "xltrack/errors.hpp"
#include "xltrack/signal_features.hpp"

namespace xltrack {

namespace {

using EigenCxMat = Eigen::MatrixXcd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::vector<SubArray> partition_subarrays(int n1, int n2, int k_rows, int k_cols) {
  if (n1 <= 0 || n2 <= 0) throw DomainError("partition_subarrays: grid dims must be positive");
  if (k_rows <= 0 || k_cols <= 0)
    throw DomainError("partition_subarrays: tile counts must be positive");
  if (n1 % k_rows != 0 || n2 % k_cols != 0) {
    throw DomainError("partition_subarrays: grid " + std::to_string(n1) + "x" +
                      std::to_string(n2) + " not divisible into " + std::to_string(k_rows) +
                      "x" + std::to_string(k_cols) + " tiles");
  }
  const int na = n1 / k_rows;  // azimuth axis = first in-plane direction
  const int ne = n2 / k_cols;  // elevation axis = second in-plane direction
  std::vector<SubArray> subs;
  subs.reserve(static_cast<std::size_t>(k_rows) * k_cols);
  for (int tr = 0; tr < k_rows; ++tr) {
    for (int tc = 0; tc < k_cols; ++tc) {
      SubArray s;
      s.index = tr * k_cols + tc;
      s.elevation_count = ne;
      s.azimuth_count = na;
      s.parent_indices.resize(static_cast<std::size_t>(ne) * na);
      for (int ie = 0; ie < ne; ++ie) {
        for (int ia = 0; ia < na; ++ia) {
          const int parent_i1 = tr * na + ia;
          const int parent_i2 = tc * ne + ie;
          s.parent_indices[static_cast<std::size_t>(ie) * na + ia] = parent_i1 * n2 + parent_i2;
        }
      }
      subs.push_back(std::move(s));
    }
  }
  return subs;
}

AngleGrid make_angle_grid(double step_deg) {
  if (!(step_deg > 0.0)) throw ConfigError("angle grid step must be positive");
  const double n_steps_f = 180.0 / step_deg;
  const int n_steps = static_cast<int>(std::lround(n_steps_f));
  if (n_steps < 1 || std::abs(n_steps * step_deg - 180.0) > 1e-9) {
    throw ConfigError("angle grid step must divide 180 degrees");
  }
  AngleGrid g;
  g.step_deg = step_deg;
  g.theta.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    g.theta[k] = std::min(k * step_deg, 180.0) * std::numbers::pi / 180.0;
  }
  g.phi = g.theta;
  return g;
}

std::vector<cxd> subarray_steering(const SubArray& sub, double spacing,
                                   double wavelength, double theta, double phi) {
  const double k_wave = kTwoPi / wavelength;
  const double ce = std::cos(theta);
  const double ca = std::sin(theta) * std::cos(phi);
  std::vector<cxd> a(static_cast<std::size_t>(sub.size()));
  for (int ie = 0; ie < sub.elevation_count; ++ie) {
    for (int ia = 0; ia < sub.azimuth_count; ++ia) {
      const double phase = -k_wave * spacing * (ie * ce + ia * ca);
      a[static_cast<std::size_t>(ie) * sub.azimuth_count + ia] =
          cxd{std::cos(phase), std::sin(phase)};
    }
  }
  return a;
}

ComplexMatrix snapshots_from_signal(const std::vector<cxd>& y_r, const SubArray& sub,
                                    int s_count, double noise_variance, Rng& rng,
                                    bool preprocess) {
  if (s_count < 2) throw DomainError("snapshots: need at least 2 snapshots");
  if (noise_variance < 0.0) throw DomainError("snapshots: negative noise variance");
  const int p = sub.size();
  for (int idx : sub.parent_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= y_r.size()) {
      throw ShapeError("snapshots: sub-array index " + std::to_string(idx) +
                       " outside signal of length " + std::to_string(y_r.size()));
    }
  }
  ComplexMatrix snaps(p, s_count);
  std::vector<cxd> col(static_cast<std::size_t>(p));
  for (int s = 0; s < s_count; ++s) {
    for (int i = 0; i < p; ++i) {
      col[i] = y_r[sub.parent_indices[i]];
      if (noise_variance > 0.0) col[i] += rng.complex_normal(noise_variance);
    }
    if (preprocess) col = dft(minmax_normalize(col));
    for (int i = 0; i < p; ++i) snaps.at(i, s) = col[i];
  }
  return snaps;
}

ComplexMatrix subarray_snapshots(const Position3D& p, const ScattererSet& scat,
                                 const ScenarioGeometry& geom, const SubArray& sub,
                                 int s_count, double noise_variance, Rng& rng,
                                 bool preprocess, cxd pilot) {
  std::vector<cxd> y_r = mu_ris_channel(p, scat, geom);
  for (cxd& v : y_r) v *= pilot;
  return snapshots_from_signal(y_r, sub, s_count, noise_variance, rng, preprocess);
}

CovarianceEstimate covariance(const ComplexMatrix& snapshots) {
  if (snapshots.rows <= 0 || snapshots.cols <= 0)
    throw ShapeError("covariance: empty snapshot matrix");
  const int p = snapshots.rows, s = snapshots.cols;
  RowMajorMap x(snapshots.data.data(), p, s);
  const Eigen::VectorXcd mean = x.rowwise().mean();
  EigenCxMat centered = x.colwise() - mean;
  EigenCxMat r = (centered * centered.adjoint()) / static_cast<double>(s);
  r = 0.5 * (r + r.adjoint()).eval();
  CovarianceEstimate out;
  out.snapshots = s;
  out.r = ComplexMatrix(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) out.r.at(i, j) = r(i, j);
  return out;
}

MusicWorkspace make_music_workspace(int elevation_count, int azimuth_count,
                                    double spacing, double wavelength,
                                    const AngleGrid& grid, bool apply_dft) {
  if (elevation_count <= 0 || azimuth_count <= 0)
    throw DomainError("music workspace: tile dims must be positive");
  if (!(spacing > 0.0) || !(wavelength > 0.0))
    throw DomainError("music workspace: spacing and wavelength must be positive");
  MusicWorkspace ws;
  ws.elevation_count = elevation_count;
  ws.azimuth_count = azimuth_count;
  ws.p = elevation_count * azimuth_count;
  ws.dft_applied = apply_dft;
  ws.grid = grid;
  const int n_theta = static_cast<int>(grid.theta.size());
  const int n_phi = static_cast<int>(grid.phi.size());
  const std::size_t g_total = static_cast<std::size_t>(n_theta) * n_phi;
  ws.steering.resize(static_cast<std::size_t>(ws.p) * g_total);
  const double k_wave = kTwoPi / wavelength;
  std::size_t g = 0;
  for (int gt = 0; gt < n_theta; ++gt) {
    const double ce = std::cos(grid.theta[gt]);
    const double st = std::sin(grid.theta[gt]);
    for (int gp = 0; gp < n_phi; ++gp, ++g) {
      const double ca = st * std::cos(grid.phi[gp]);
      cxd* colp = ws.steering.data() + g * ws.p;
      std::size_t i = 0;
      for (int ie = 0; ie < elevation_count; ++ie) {
        for (int ia = 0; ia < azimuth_count; ++ia, ++i) {
          const double phase = -k_wave * spacing * (ie * ce + ia * ca);
          colp[i] = cxd{std::cos(phase), std::sin(phase)};
        }
      }
    }
  }
  if (apply_dft) {
    // Same per-column transform the snapshot pipeline applies; the DFT matrix
    // is unitary up to scale, so subspace geometry is preserved.
    EigenCxMat f(ws.p, ws.p);
    for (int k = 0; k < ws.p; ++k) {
      for (int i = 0; i < ws.p; ++i) {
        const double ang = -kTwoPi * static_cast<double>(k) * static_cast<double>(i) /
                           static_cast<double>(ws.p);
        f(k, i) = cxd{std::cos(ang), std::sin(ang)};
      }
    }
    Eigen::Map<EigenCxMat> a(ws.steering.data(), ws.p, static_cast<Eigen::Index>(g_total));
    a = (f * a).eval();
  }
  ws.column_norm2.resize(g_total);
  Eigen::Map<const EigenCxMat> a(ws.steering.data(), ws.p, static_cast<Eigen::Index>(g_total));
  for (std::size_t c = 0; c < g_total; ++c)
    ws.column_norm2[c] = a.col(static_cast<Eigen::Index>(c)).squaredNorm();
  return ws;
}

MusicResult music_aoa(const CovarianceEstimate& cov, const MusicWorkspace& ws,
                      int n_sources) {
  const int p = ws.p;
  if (cov.r.rows != p || cov.r.cols != p) {
    throw ShapeError("music: covariance is " + std::to_string(cov.r.rows) + "x" +
                     std::to_string(cov.r.cols) + " but workspace expects " +
                     std::to_string(p));
  }
  if (n_sources < 1 || n_sources >= p) {
    throw DomainError("music: source count must lie in [1, " + std::to_string(p - 1) + "]");
  }
  RowMajorMap rmap(cov.r.data.data(), p, p);
  EigenCxMat r = rmap;
  Eigen::SelfAdjointEigenSolver<EigenCxMat> es(r);
  if (es.info() != Eigen::Success) {
    throw NumericError("music: eigendecomposition failed for covariance of size " +
                       std::to_string(p));
  }
  // Ascending eigenvalues: signal subspace = last n_sources columns. The noise
  // projector is I - Es*Es^H, so a^H En En^H a = |a|^2 - |Es^H a|^2 exactly.
  const EigenCxMat es_sig = es.eigenvectors().rightCols(n_sources);
  const int n_phi = static_cast<int>(ws.grid.phi.size());
  const std::size_t g_total = ws.column_norm2.size();
  Eigen::Map<const EigenCxMat> a(ws.steering.data(), p, static_cast<Eigen::Index>(g_total));
  const EigenCxMat q = es_sig.adjoint() * a;  // n_sources x G

  MusicResult best;
  double best_val = -1.0;
  for (std::size_t g = 0; g < g_total; ++g) {
    double denom = ws.column_norm2[g] - q.col(static_cast<Eigen::Index>(g)).squaredNorm();
    if (denom < 1e-18) denom = 1e-18;
    const double val = 1.0 / denom;
    if (val > best_val) {
      best_val = val;
      best.theta_index = static_cast<int>(g) / n_phi;
      best.phi_index = static_cast<int>(g) % n_phi;
    }
  }
  best.peak = best_val;
  best.theta = ws.grid.theta[best.theta_index];
  best.phi = ws.grid.phi[best.phi_index];
  return best;
}

MusicResult music_aoa(const CovarianceEstimate& cov, const SubArray& sub,
                      double spacing, double wavelength, const AngleGrid& grid,
                      int n_sources, bool dft_applied) {
  const MusicWorkspace ws = make_music_workspace(sub.elevation_count, sub.azimuth_count,
                                                 spacing, wavelength, grid, dft_applied);
  return music_aoa(cov, ws, n_sources);
}

AoaExtractor::AoaExtractor(const ScenarioGeometry& geom, const AoaConfig& cfg) : cfg_(cfg) {
  if (cfg.snapshots < 2) throw ConfigError("aoa snapshot count must be at least 2");
  subs_ = partition_subarrays(geom.n1, geom.n2, cfg.k_rows, cfg.k_cols);
  const AngleGrid grid = make_angle_grid(cfg.grid_step_deg);
  ws_ = make_music_workspace(subs_[0].elevation_count, subs_[0].azimuth_count,
                             geom.spacing, geom.wavelength, grid, cfg.preprocess);
  if (cfg.n_sources < 1 || cfg.n_sources >= ws_.p) {
    throw ConfigError("aoa source count must lie in [1, tile size - 1]");
  }
}

std::vector<double> AoaExtractor::features(const std::vector<cxd>& y_r, double snr_db,
                                           Rng& rng) const {
  std::vector<double> out;
  out.reserve(feature_length());
  const double snr_lin = std::pow(10.0, snr_db / 10.0);
  for (const SubArray& sub : subs_) {
    double power = 0.0;
    for (int idx : sub.parent_indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= y_r.size()) {
        throw ShapeError("aoa features: signal shorter than the element grid");
      }
      power += std::norm(y_r[idx]);
    }
    const double sigma2 = power / (static_cast<double>(sub.size()) * snr_lin);
    const ComplexMatrix snaps =
        snapshots_from_signal(y_r, sub, cfg_.snapshots, sigma2, rng, cfg_.preprocess);
    const MusicResult res = music_aoa(covariance(snaps), ws_, cfg_.n_sources);
    out.push_back(res.theta);
    out.push_back(res.phi);
  }
  return out;
}

}  // namespace xltrack
