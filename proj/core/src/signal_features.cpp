#include "xltrack/signal_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xltrack/errors.hpp"

namespace xltrack {

std::vector<double> normalize_signal(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(v.size(), 0.0);
  if (hi == lo) return out;  // constant sequence -> all zeros
  const double inv = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) * inv;
  return out;
}

std::vector<cxd> minmax_normalize(const std::vector<cxd>& v) {
  if (v.empty()) return {};
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) < std::abs(v[lo])) lo = i;
    if (std::abs(v[i]) > std::abs(v[hi])) hi = i;
  }
  std::vector<cxd> out(v.size(), cxd{0.0, 0.0});
  const cxd denom = v[hi] - v[lo];
  if (std::abs(denom) < 1e-15) return out;  // flat spread -> all zeros
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - v[lo]) / denom;
  return out;
}

std::vector<cxd> dft(const std::vector<cxd>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  // Twiddle table exp(-j*2*pi*m/N); index by (k*n) mod N.
  std::vector<cxd> w(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    w[m] = cxd{std::cos(ang), std::sin(ang)};
  }
  std::vector<cxd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cxd acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * w[(k * i) % n];
    out[k] = acc;
  }
  return out;
}

double spectral_entropy(const std::vector<double>& energies, bool* degenerate) {
  if (degenerate) *degenerate = false;
  double total = 0.0;
  for (double e : energies) {
    if (e < 0.0) throw DomainError("spectral_entropy: negative energy component");
    total += e;
  }
  if (total <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double h = 0.0;
  for (double e : energies) {
    if (e <= 0.0) continue;  // 0*ln(0) := 0
    const double p = e / total;
    h -= p * std::log(p);
  }
  return h;
}

TfFeatures tf_features(const std::vector<cxd>& y_hat) {
  if (y_hat.empty()) throw ShapeError("tf_features: empty input signal");
  const std::size_t n = y_hat.size();
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(y_hat[i]);
  const std::vector<double> norm = normalize_signal(mags);

  TfFeatures out;
  double mean = 0.0;
  for (double v : norm) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : norm) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  out.mean = mean;
  out.variance = var;

  std::vector<cxd> cx(n);
  for (std::size_t i = 0; i < n; ++i) cx[i] = cxd{norm[i], 0.0};
  const std::vector<cxd> spectrum = dft(cx);
  std::vector<double> energies(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    energies[k] = std::norm(spectrum[k]);
    total += energies[k];
  }
  out.energy = total;
  out.entropy = spectral_entropy(energies, &out.degenerate);
  return out;
}

nn::Tensor preprocess_ris(const std::vector<cxd>& y_hat, int n1, int n2) {
  if (n1 <= 0 || n2 <= 0) throw ShapeError("preprocess_ris: non-positive grid dims");
  const std::size_t n = static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
  if (y_hat.size() != n) {
    throw ShapeError("preprocess_ris: signal length " + std::to_string(y_hat.size()) +
                     " does not match grid " + std::to_string(n1) + "x" + std::to_string(n2));
  }
  nn::Tensor t = nn::Tensor::zeros({2, n1, n2});
  for (std::size_t i = 0; i < n; ++i) {
    t.data[i] = y_hat[i].real();
    t.data[n + i] = y_hat[i].imag();
  }
  return t;
}

namespace {

int pooled_side(int side, int pool) {
  if (side < pool) {
    throw ShapeError("cnn feature stack: spatial side " + std::to_string(side) +
                     " smaller than pool window " + std::to_string(pool));
  }
  return (side - pool) / pool + 1;
}

}  // namespace

int CnnConfig::flattened_length() const {
  int h = pooled_side(in_h, pool);
  int w = pooled_side(in_w, pool);
  h = pooled_side(h, pool);
  w = pooled_side(w, pool);
  return filters2 * h * w;
}

void CnnConfig::validate() const {
  std::vector<std::string> issues;
  if (in_h <= 0 || in_w <= 0) issues.push_back("cnn input dims must be positive");
  if (filters1 <= 0 || filters2 <= 0) issues.push_back("cnn filter counts must be positive");
  if (kernel <= 0 || kernel % 2 == 0) issues.push_back("cnn kernel must be odd and positive");
  if (pool <= 0) issues.push_back("cnn pool window must be positive");
  if (n_f <= 0) issues.push_back("cnn feature length must be positive");
  if (!issues.empty()) throw ConfigError(issues);
  flattened_length();  // throws if pooling underflows
}

CnnExtractor::CnnExtractor(const CnnConfig& c, Rng& rng) : cfg(c) {
  cfg.validate();
  const int pad = (cfg.kernel - 1) / 2;
  conv1 = nn::Conv2dLayer("cnnfe.conv1", 2, cfg.filters1, cfg.kernel, 1, pad, rng);
  conv2 = nn::Conv2dLayer("cnnfe.conv2", cfg.filters1, cfg.filters2, cfg.kernel, 1, pad, rng);
  fc = nn::DenseLayer("cnnfe.fc", cfg.flattened_length(), cfg.n_f, rng);
}

std::vector<double> CnnExtractor::features(const nn::Tensor& input) const {
  if (input.shape != std::vector<int>{2, cfg.in_h, cfg.in_w}) {
    throw ShapeError("cnn features: expected input 2x" + std::to_string(cfg.in_h) + "x" +
                     std::to_string(cfg.in_w) + ", got " + nn::shape_str(input.shape));
  }
  nn::Variable x(input);
  nn::Variable h = nn::relu(conv1(x));
  h = nn::pool2d(h, nn::PoolKind::Max, cfg.pool, cfg.pool);
  h = nn::relu(conv2(h));
  h = nn::pool2d(h, nn::PoolKind::Max, cfg.pool, cfg.pool);
  h = fc(nn::flatten(h));
  return h.value().data;
}

std::vector<nn::Parameter*> CnnExtractor::parameters() {
  return {&conv1.weight, &conv1.bias, &conv2.weight, &conv2.bias, &fc.weight, &fc.bias};
}

FeatureVector final_features(std::vector<double> cnn, std::vector<double> tf,
                             std::vector<double> aoa) {
  FeatureVector out;
  out.cnn = std::move(cnn);
  out.tf = std::move(tf);
  out.aoa = std::move(aoa);
  out.final.reserve(out.cnn.size() + out.tf.size() + out.aoa.size());
  out.final.insert(out.final.end(), out.cnn.begin(), out.cnn.end());
  out.final.insert(out.final.end(), out.tf.begin(), out.tf.end());
  out.final.insert(out.final.end(), out.aoa.begin(), out.aoa.end());
  return out;
}

}  // namespace xltrack
