#pragma once

#include <vector>

#include "xltrack/channel.hpp"
#include "xltrack/geometry.hpp"

namespace xltrack {

// One rectangular tile of the RIS element grid. Local element order is
// elevation-major: local index = n_e * azimuth_count + n_a, where the azimuth
// axis is the grid's first in-plane direction and elevation the second. That
// ordering makes the tile's steering vector the Kronecker product of the
// per-axis factors (elevation factor outer).
struct SubArray {
  int index = 0;            // row-major over (tile_row, tile_col)
  int elevation_count = 0;  // elements along the elevation axis
  int azimuth_count = 0;    // elements along the azimuth axis
  std::vector<int> parent_indices;  // into the parent grid's flat order

  int size() const { return elevation_count * azimuth_count; }
};

// Split an n1 x n2 grid into k_rows x k_cols contiguous tiles.
// Requires n1 % k_rows == 0 and n2 % k_cols == 0.
std::vector<SubArray> partition_subarrays(int n1, int n2, int k_rows, int k_cols);

// Uniform search grid over [0, 180] degrees in both angles, step included an
// integral number of times. Values stored in radians, theta-major flattening.
struct AngleGrid {
  double step_deg = 1.0;
  std::vector<double> theta;  // radians, ascending
  std::vector<double> phi;    // radians, ascending
};

AngleGrid make_angle_grid(double step_deg);

// Far-field steering vector of a tile for (theta, phi):
// entry(n_e, n_a) = exp(-j*(2*pi/lambda)*d*(n_e*cos(theta) + n_a*sin(theta)*cos(phi))).
std::vector<cxd> subarray_steering(const SubArray& sub, double spacing,
                                   double wavelength, double theta, double phi);

// S observation columns for one tile: each column is the tile's slice of y_r
// plus independent CN(0, noise_variance) noise. With preprocessing on, every
// column is min/max-normalized then DFT-transformed before being stored.
ComplexMatrix snapshots_from_signal(const std::vector<cxd>& y_r, const SubArray& sub,
                                    int s_count, double noise_variance, Rng& rng,
                                    bool preprocess = true);

// Physics-level variant: builds y_r = h(p) * pilot first.
ComplexMatrix subarray_snapshots(const Position3D& p, const ScattererSet& scat,
                                 const ScenarioGeometry& geom, const SubArray& sub,
                                 int s_count, double noise_variance, Rng& rng,
                                 bool preprocess = true, cxd pilot = cxd{1.0, 0.0});

// Sample covariance (1/S) * sum_s (x_s - mean)(x_s - mean)^H of the snapshot
// columns, symmetrized to be exactly Hermitian.
struct CovarianceEstimate {
  ComplexMatrix r;
  int snapshots = 0;
};

CovarianceEstimate covariance(const ComplexMatrix& snapshots);

// Precomputed grid steering matrix for one tile shape. When the snapshot
// pipeline applies the per-column DFT, the same transform is applied to the
// steering columns so the subspace comparison stays consistent.
struct MusicWorkspace {
  int elevation_count = 0, azimuth_count = 0, p = 0;
  bool dft_applied = false;
  AngleGrid grid;
  std::vector<cxd> steering;        // column-major p x (n_theta * n_phi)
  std::vector<double> column_norm2; // squared 2-norm per steering column
};

MusicWorkspace make_music_workspace(int elevation_count, int azimuth_count,
                                    double spacing, double wavelength,
                                    const AngleGrid& grid, bool apply_dft);

struct MusicResult {
  double theta = 0.0, phi = 0.0;  // radians
  int theta_index = 0, phi_index = 0;
  double peak = 0.0;  // pseudo-spectrum value at the maximum
};

// Subspace spectrum search: eigendecompose the covariance, take the
// (p - n_sources)-dimensional noise subspace, and maximize
// 1 / (a^H E_n E_n^H a) over the grid. Ties resolve to the smallest theta,
// then the smallest phi.
MusicResult music_aoa(const CovarianceEstimate& cov, const MusicWorkspace& ws,
                      int n_sources);

// Convenience overload that builds the workspace on the fly.
MusicResult music_aoa(const CovarianceEstimate& cov, const SubArray& sub,
                      double spacing, double wavelength, const AngleGrid& grid,
                      int n_sources, bool dft_applied = false);

struct AoaConfig {
  int k_rows = 2, k_cols = 2;
  double grid_step_deg = 1.0;
  int n_sources = 1;
  int snapshots = 64;
  bool preprocess = true;
};

// Per-record angle features: for each tile, in tile order, the estimated
// (theta, phi) pair -> 2 * k_rows * k_cols values, radians. Snapshot noise is
// scaled per tile from the slice power and the requested SNR.
class AoaExtractor {
 public:
  AoaExtractor(const ScenarioGeometry& geom, const AoaConfig& cfg);

  std::vector<double> features(const std::vector<cxd>& y_r, double snr_db,
                               Rng& rng) const;

  const std::vector<SubArray>& subarrays() const { return subs_; }
  const MusicWorkspace& workspace() const { return ws_; }
  int feature_length() const { return 2 * static_cast<int>(subs_.size()); }

 private:
  AoaConfig cfg_;
  std::vector<SubArray> subs_;
  MusicWorkspace ws_;
};

}  // namespace xltrack
