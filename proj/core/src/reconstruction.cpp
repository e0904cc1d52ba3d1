#include "xltrack/reconstruction.hpp"

#include <cmath>

#include "xltrack/checkpoint.hpp"
#include "xltrack/errors.hpp"
#include "xltrack/optimizer.hpp"

namespace xltrack {

using nn::Mode;
using nn::Tensor;
using nn::Variable;

void ReconConfig::validate() const {
  std::vector<std::string> issues;
  if (m1 < 1 || m2 < 1) issues.push_back("recon: BS grid dims must be positive");
  if (n1 < 1 || n2 < 1) issues.push_back("recon: RIS grid dims must be positive");
  if (upsample_h < 1 || upsample_w < 1) {
    issues.push_back("recon: upsample target must be positive");
  }
  if (n_dense_modules < 1) issues.push_back("recon: need at least one dense module");
  if (blocks_per_module < 1) issues.push_back("recon: need at least one block per module");
  if (growth_channels < 1) issues.push_back("recon: growth channels must be positive");
  if (initial_channels < 1) issues.push_back("recon: initial channels must be positive");
  // Every transition needs at least a 2x2 map to pool.
  int sh = upsample_h, sw = upsample_w;
  for (int i = 0; i < n_dense_modules; ++i) {
    if (sh < 2 || sw < 2) {
      issues.push_back("recon: spatial dims collapse below 2x2 at transition " +
                       std::to_string(i) + " (" + std::to_string(sh) + "x" +
                       std::to_string(sw) + "); raise the upsample target or drop modules");
      break;
    }
    sh = (sh - 2) / 2 + 1;
    sw = (sw - 2) / 2 + 1;
  }
  if (!issues.empty()) throw ConfigError(issues);
}

Tensor preprocess_bs(const std::vector<cxd>& y, int m1, int m2, int target_h,
                     int target_w, nn::UpsampleMode mode) {
  if (static_cast<int>(y.size()) != m1 * m2) {
    throw ShapeError("preprocess_bs: signal length " + std::to_string(y.size()) +
                     " vs grid " + std::to_string(m1) + "x" + std::to_string(m2));
  }
  Tensor base({2, m1, m2});
  for (int i = 0; i < m1 * m2; ++i) {
    base.data[i] = y[i].real();
    base.data[m1 * m2 + i] = y[i].imag();
  }
  if (target_h == m1 && target_w == m2) return base;
  const Variable up = nn::upsample(Variable(std::move(base)), target_h, target_w, mode);
  return up.value();
}

namespace {

// Channel/spatial trace of the stack; shared by the constructor and loaders.
struct StackTrace {
  std::vector<int> module_in_channels;      // channels entering each module
  std::vector<int> transition_in_channels;  // channels entering each transition
  int final_channels = 0;
  int final_h = 0, final_w = 0;
};

StackTrace trace_stack(const ReconConfig& cfg) {
  StackTrace t;
  int c = cfg.initial_channels;
  int sh = cfg.upsample_h, sw = cfg.upsample_w;
  for (int i = 0; i < cfg.n_dense_modules; ++i) {
    t.module_in_channels.push_back(c);
    c += cfg.blocks_per_module * cfg.growth_channels;
    t.transition_in_channels.push_back(c);
    c = c / 2;  // 1x1 compression, floor
    sh = (sh - 2) / 2 + 1;
    sw = (sw - 2) / 2 + 1;
  }
  t.final_channels = c;
  t.final_h = sh;
  t.final_w = sw;
  return t;
}

}  // namespace

ReconModel::ReconModel(const ReconConfig& cfg_, Rng& rng) : cfg(cfg_) {
  cfg.validate();
  const StackTrace trace = trace_stack(cfg);

  tri = nn::Conv2dLayer("recon.tri", 2, cfg.initial_channels, 1, 1, 0, rng);
  for (int i = 0; i < cfg.n_dense_modules; ++i) {
    std::vector<ReconDenseBlock> blocks;
    int c = trace.module_in_channels[i];
    for (int b = 0; b < cfg.blocks_per_module; ++b) {
      const std::string name =
          "recon.m" + std::to_string(i) + "b" + std::to_string(b);
      ReconDenseBlock blk;
      blk.bn = nn::BatchNormLayer(name + ".bn", c);
      blk.conv = nn::Conv2dLayer(name + ".conv", c, cfg.growth_channels, 3, 1, 1, rng);
      blocks.push_back(std::move(blk));
      c += cfg.growth_channels;
    }
    modules.push_back(std::move(blocks));
    ReconTransition trans;
    trans.conv = nn::Conv2dLayer("recon.t" + std::to_string(i) + ".conv",
                                 trace.transition_in_channels[i],
                                 trace.transition_in_channels[i] / 2, 1, 1, 0, rng);
    transitions.push_back(std::move(trans));
  }
  head = nn::DenseLayer("recon.head",
                        trace.final_channels * trace.final_h * trace.final_w,
                        cfg.output_length(), rng);
  target_mean = Tensor::zeros({cfg.output_length()});
  target_std = Tensor::full({cfg.output_length()}, 1.0);
}

int ReconModel::head_input_length() const { return head.weight.value().dim(1); }

std::vector<nn::Parameter*> ReconModel::parameters() {
  std::vector<nn::Parameter*> out{&tri.weight, &tri.bias};
  for (auto& blocks : modules) {
    for (auto& blk : blocks) {
      out.push_back(&blk.bn.gamma);
      out.push_back(&blk.bn.beta);
      out.push_back(&blk.conv.weight);
      out.push_back(&blk.conv.bias);
    }
  }
  for (auto& t : transitions) {
    out.push_back(&t.conv.weight);
    out.push_back(&t.conv.bias);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

Variable dense_block_forward(const Variable& t, ReconDenseBlock& block, Mode mode) {
  const int channel_axis = (t.value().ndim() == 4) ? 1 : 0;
  const Variable grown = block.conv(nn::relu(block.bn(t, mode)));
  return nn::concat({t, grown}, channel_axis);
}

Variable transition_forward(const Variable& t, ReconTransition& trans) {
  return nn::pool2d(trans.conv(t), nn::PoolKind::Avg, 2, 2);
}

Variable recon_net_forward(ReconModel& model, const Variable& input, Mode mode) {
  Variable t = model.tri(input);
  for (std::size_t i = 0; i < model.modules.size(); ++i) {
    for (auto& blk : model.modules[i]) t = dense_block_forward(t, blk, mode);
    t = transition_forward(t, model.transitions[i]);
  }
  const bool batched = (t.value().ndim() == 4);
  if (batched) {
    const int B = t.value().dim(0);
    const int rest = static_cast<int>(t.value().size()) / B;
    t = nn::reshape(t, {B, rest});
  } else {
    t = nn::flatten(t);
  }
  return model.head(nn::relu(t));
}

namespace {

Tensor pack_target(const std::vector<cxd>& y_r) {
  const int n = static_cast<int>(y_r.size());
  Tensor t({2 * n});
  for (int i = 0; i < n; ++i) {
    t.data[i] = y_r[i].real();
    t.data[n + i] = y_r[i].imag();
  }
  return t;
}

Tensor batch_inputs(const ReconConfig& cfg,
                    const std::vector<const SlotRecord*>& recs,
                    std::size_t begin, std::size_t end) {
  const int B = static_cast<int>(end - begin);
  Tensor out({B, 2, cfg.upsample_h, cfg.upsample_w});
  const std::int64_t stride = 2LL * cfg.upsample_h * cfg.upsample_w;
  for (int b = 0; b < B; ++b) {
    const Tensor one = preprocess_bs(recs[begin + b]->y, cfg.m1, cfg.m2,
                                     cfg.upsample_h, cfg.upsample_w,
                                     cfg.upsample_mode);
    std::copy(one.data.begin(), one.data.end(), out.data.begin() + b * stride);
  }
  return out;
}

Tensor batch_targets(const ReconModel& model,
                     const std::vector<const SlotRecord*>& recs,
                     std::size_t begin, std::size_t end) {
  const int n2 = model.cfg.output_length();
  const int B = static_cast<int>(end - begin);
  Tensor out({B, n2});
  for (int b = 0; b < B; ++b) {
    const Tensor t = pack_target(recs[begin + b]->y_r);
    if (t.size() != n2) {
      throw ShapeError("train_recon: record y_r length " +
                       std::to_string(t.size() / 2) + " vs configured N " +
                       std::to_string(n2 / 2));
    }
    for (int i = 0; i < n2; ++i) {
      out.data[static_cast<std::int64_t>(b) * n2 + i] =
          (t.data[i] - model.target_mean[i]) / model.target_std[i];
    }
  }
  return out;
}

double eval_loss(ReconModel& model, const std::vector<const SlotRecord*>& recs,
                 int batch_size) {
  if (recs.empty()) throw ConfigError("train_recon: evaluation set is empty");
  double acc = 0.0;
  for (std::size_t b = 0; b < recs.size(); b += batch_size) {
    const std::size_t e = std::min(recs.size(), b + batch_size);
    const Variable in(batch_inputs(model.cfg, recs, b, e));
    const Variable target(batch_targets(model, recs, b, e));
    const Variable out = recon_net_forward(model, in, Mode::Eval);
    const Variable loss = nn::mse_loss(out, target);
    acc += loss.value()[0] * static_cast<double>(e - b);
  }
  return acc / static_cast<double>(recs.size());
}

}  // namespace

LossCurve train_recon(ReconModel& model,
                      const std::vector<const SlotRecord*>& train,
                      const std::vector<const SlotRecord*>& val,
                      const ReconHyper& hyper) {
  if (train.empty()) throw ConfigError("train_recon: training set is empty");
  if (val.empty()) throw ConfigError("train_recon: validation set is empty");
  if (hyper.epochs < 0 || hyper.batch_size < 1) {
    throw ConfigError("train_recon: epochs must be >= 0 and batch size >= 1");
  }

  // Per-component target statistics from the training set; a zero-variance
  // component degrades to predicting its mean.
  {
    const int n2 = model.cfg.output_length();
    Tensor mean = Tensor::zeros({n2});
    Tensor var = Tensor::zeros({n2});
    for (const SlotRecord* r : train) {
      const Tensor t = pack_target(r->y_r);
      for (int i = 0; i < n2; ++i) mean[i] += t.data[i];
    }
    for (int i = 0; i < n2; ++i) mean[i] /= static_cast<double>(train.size());
    for (const SlotRecord* r : train) {
      const Tensor t = pack_target(r->y_r);
      for (int i = 0; i < n2; ++i) {
        const double d = t.data[i] - mean[i];
        var[i] += d * d;
      }
    }
    for (int i = 0; i < n2; ++i) {
      const double sd = std::sqrt(var[i] / static_cast<double>(train.size()));
      model.target_std[i] = std::max(sd, 1e-12);
    }
    model.target_mean = std::move(mean);
  }

  nn::Adam opt(model.parameters(), {hyper.learning_rate, 0.9, 0.999, 1e-8});

  LossCurve curve;
  curve.train.push_back(eval_loss(model, train, hyper.batch_size));
  curve.val.push_back(eval_loss(model, val, hyper.batch_size));

  double best_val = curve.val[0];
  int since_best = 0;
  std::vector<const SlotRecord*> shuffled(train);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, "recon-epoch", epoch));
    const auto perm = rng.permutation(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) shuffled[i] = train[perm[i]];

    double acc = 0.0;
    for (std::size_t b = 0; b < shuffled.size(); b += hyper.batch_size) {
      const std::size_t e = std::min(shuffled.size(), b + hyper.batch_size);
      const Variable in(batch_inputs(model.cfg, shuffled, b, e));
      const Variable target(batch_targets(model, shuffled, b, e));
      const Variable out = recon_net_forward(model, in, Mode::Train);
      const Variable loss = nn::mse_loss(out, target);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) {
        throw NumericError("train_recon: loss went non-finite at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(b / hyper.batch_size) +
                           "; lower the learning rate");
      }
      acc += lv * static_cast<double>(e - b);
      opt.zero_grad();
      nn::backward(loss);
      opt.step();
    }
    curve.train.push_back(acc / static_cast<double>(shuffled.size()));
    const double vl = eval_loss(model, val, hyper.batch_size);
    if (!std::isfinite(vl)) {
      throw NumericError("train_recon: validation loss went non-finite at epoch " +
                         std::to_string(epoch));
    }
    curve.val.push_back(vl);

    if (vl < best_val) {
      best_val = vl;
      since_best = 0;
    } else if (hyper.patience > 0 && ++since_best >= hyper.patience) {
      break;
    }
  }
  return curve;
}

ComplexSignal recon_forward(const std::vector<cxd>& y, ReconModel& model) {
  const Variable in(preprocess_bs(y, model.cfg.m1, model.cfg.m2,
                                  model.cfg.upsample_h, model.cfg.upsample_w,
                                  model.cfg.upsample_mode));
  const Variable out = recon_net_forward(model, in, Mode::Eval);
  const int n = model.cfg.n1 * model.cfg.n2;

  ComplexSignal sig;
  sig.role = SignalRole::ReconYr;
  sig.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    const double re = out.value()[i] * model.target_std[i] + model.target_mean[i];
    const double im =
        out.value()[n + i] * model.target_std[n + i] + model.target_mean[n + i];
    sig.samples[i] = {re, im};
  }
  return sig;
}

std::vector<std::vector<cxd>> recon_forward_batch(
    ReconModel& model, const std::vector<const SlotRecord*>& records,
    int batch_size) {
  std::vector<std::vector<cxd>> out(records.size());
  const int n = model.cfg.n1 * model.cfg.n2;
  for (std::size_t b = 0; b < records.size(); b += batch_size) {
    const std::size_t e = std::min(records.size(), b + batch_size);
    const Variable in(batch_inputs(model.cfg, records, b, e));
    const Variable res = recon_net_forward(model, in, Mode::Eval);
    for (std::size_t r = b; r < e; ++r) {
      const std::int64_t row = static_cast<std::int64_t>(r - b) * 2 * n;
      auto& dst = out[r];
      dst.resize(n);
      for (int i = 0; i < n; ++i) {
        const double re =
            res.value()[row + i] * model.target_std[i] + model.target_mean[i];
        const double im = res.value()[row + n + i] * model.target_std[n + i] +
                          model.target_mean[n + i];
        dst[i] = {re, im};
      }
    }
  }
  return out;
}

void save_recon(const ReconModel& model, const std::string& path) {
  std::vector<nn::CheckpointEntry> entries;
  const ReconConfig& c = model.cfg;
  entries.push_back(
      {"recon.meta",
       Tensor({11},
              {static_cast<double>(c.m1), static_cast<double>(c.m2),
               static_cast<double>(c.n1), static_cast<double>(c.n2),
               static_cast<double>(c.upsample_h), static_cast<double>(c.upsample_w),
               static_cast<double>(c.n_dense_modules),
               static_cast<double>(c.blocks_per_module),
               static_cast<double>(c.growth_channels),
               static_cast<double>(c.initial_channels),
               c.upsample_mode == nn::UpsampleMode::Bilinear ? 1.0 : 0.0})});
  nn::append_params(entries, const_cast<ReconModel&>(model).parameters());
  for (const auto& blocks : model.modules) {
    for (const auto& blk : blocks) {
      const std::string base = blk.bn.gamma.name();  // "...bn.gamma"
      const std::string prefix = base.substr(0, base.size() - 6);
      entries.push_back({prefix + ".running_mean", blk.bn.stats.running_mean});
      entries.push_back({prefix + ".running_var", blk.bn.stats.running_var});
    }
  }
  entries.push_back({"recon.target_mean", model.target_mean});
  entries.push_back({"recon.target_std", model.target_std});
  nn::save_checkpoint(path, entries);
}

ReconModel load_recon(const std::string& path) {
  const auto entries = nn::load_checkpoint(path);
  const auto meta_it = entries.find("recon.meta");
  if (meta_it == entries.end() || meta_it->second.size() != 11) {
    throw IoError("load_recon: '" + path + "' lacks a valid recon.meta entry");
  }
  const Tensor& m = meta_it->second;
  ReconConfig cfg;
  cfg.m1 = static_cast<int>(m[0]);
  cfg.m2 = static_cast<int>(m[1]);
  cfg.n1 = static_cast<int>(m[2]);
  cfg.n2 = static_cast<int>(m[3]);
  cfg.upsample_h = static_cast<int>(m[4]);
  cfg.upsample_w = static_cast<int>(m[5]);
  cfg.n_dense_modules = static_cast<int>(m[6]);
  cfg.blocks_per_module = static_cast<int>(m[7]);
  cfg.growth_channels = static_cast<int>(m[8]);
  cfg.initial_channels = static_cast<int>(m[9]);
  cfg.upsample_mode =
      (m[10] != 0.0) ? nn::UpsampleMode::Bilinear : nn::UpsampleMode::Nearest;

  Rng rng(0);
  ReconModel model(cfg, rng);
  nn::restore_params(entries, model.parameters());
  for (auto& blocks : model.modules) {
    for (auto& blk : blocks) {
      const std::string base = blk.bn.gamma.name();
      const std::string prefix = base.substr(0, base.size() - 6);
      const auto rm = entries.find(prefix + ".running_mean");
      const auto rv = entries.find(prefix + ".running_var");
      if (rm == entries.end() || rv == entries.end()) {
        throw IoError("load_recon: missing running stats for '" + prefix + "'");
      }
      blk.bn.stats.running_mean = rm->second;
      blk.bn.stats.running_var = rv->second;
    }
  }
  const auto tm = entries.find("recon.target_mean");
  const auto ts = entries.find("recon.target_std");
  if (tm == entries.end() || ts == entries.end()) {
    throw IoError("load_recon: missing target statistics");
  }
  model.target_mean = tm->second;
  model.target_std = ts->second;
  return model;
}

}  // namespace xltrack
