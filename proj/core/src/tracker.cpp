#include "xltrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "xltrack/checkpoint.hpp"
#include "xltrack/errors.hpp"

namespace xltrack {

using nn::Mode;
using nn::Variable;

SequenceBuildResult build_sequences(const FeatureSet& fs, int t_window) {
  if (t_window < 1) throw DomainError("build_sequences: window must be at least 1");
  // Timelines keyed by (trajectory, snr); windows never cross either boundary.
  std::map<std::pair<std::int64_t, double>, std::vector<const FeatureRecord*>> timelines;
  for (const FeatureRecord& r : fs.records) {
    timelines[{r.traj_id, r.snr_db}].push_back(&r);
  }
  SequenceBuildResult out;
  std::set<std::int64_t> skipped;
  for (auto& [key, recs] : timelines) {
    std::sort(recs.begin(), recs.end(),
              [](const FeatureRecord* a, const FeatureRecord* b) { return a->step < b->step; });
    const int len = static_cast<int>(recs.size());
    if (len <= t_window) {
      skipped.insert(key.first);
      continue;
    }
    for (int k = 0; k + t_window < len; ++k) {
      SequenceSample s;
      s.features.reserve(t_window);
      for (int j = 0; j < t_window; ++j) s.features.push_back(recs[k + j]->features);
      const FeatureRecord& tgt = *recs[k + t_window];
      s.target = tgt.position;
      s.traj_id = key.first;
      s.snr_db = key.second;
      s.kind = tgt.kind;
      s.split = tgt.split;
      s.source = fs.source;
      out.samples.push_back(std::move(s));
    }
  }
  out.skipped_trajectories = static_cast<int>(skipped.size());
  return out;
}

void TrackerConfig::validate() const {
  std::vector<std::string> issues;
  if (input_dim <= 0) issues.push_back("tracker input dimension must be positive");
  if (t_window < 1) issues.push_back("tracker window must be at least 1");
  if (layers < 1) issues.push_back("tracker encoder needs at least one layer");
  if (hidden <= 0) issues.push_back("tracker hidden size must be positive");
  if (decoder_hidden <= 0) issues.push_back("tracker decoder hidden size must be positive");
  if (dropout < 0.0 || dropout >= 1.0) issues.push_back("tracker dropout must lie in [0, 1)");
  if (!issues.empty()) throw ConfigError(issues);
}

TrackerModel::TrackerModel(const TrackerConfig& c, Rng& rng) : cfg(c) {
  cfg.validate();
  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? cfg.input_dim : cfg.encoder_out_dim();
    const std::string base = "tracker.enc" + std::to_string(l);
    fwd.emplace_back(base + ".fwd", in, cfg.hidden, rng);
    if (cfg.bidirectional) bwd.emplace_back(base + ".bwd", in, cfg.hidden, rng);
  }
  projection = nn::DenseLayer("tracker.proj", cfg.encoder_out_dim(), cfg.decoder_hidden, rng);
  decoder = nn::LstmCell("tracker.dec", 3, cfg.decoder_hidden, rng);
  head = nn::DenseLayer("tracker.head", cfg.decoder_hidden, 3, rng);
  feat_mean.assign(cfg.input_dim, 0.0);
  feat_std.assign(cfg.input_dim, 1.0);
}

std::vector<nn::Parameter*> TrackerModel::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& cell : fwd) for (auto* p : cell.parameters()) out.push_back(p);
  for (auto& cell : bwd) for (auto* p : cell.parameters()) out.push_back(p);
  out.push_back(&projection.weight);
  out.push_back(&projection.bias);
  for (auto* p : decoder.parameters()) out.push_back(p);
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

Variable encoder_forward(const std::vector<Variable>& steps, TrackerModel& model,
                         Mode mode, Rng& rng) {
  if (steps.empty()) throw ShapeError("encoder: empty input sequence");
  std::vector<Variable> seq = steps;
  Variable context_raw;
  for (int l = 0; l < model.cfg.layers; ++l) {
    if (model.cfg.bidirectional) {
      nn::BiUnrollResult r = nn::bilstm_unroll(seq, model.fwd[l], model.bwd[l]);
      seq = std::move(r.outputs);
      if (l == model.cfg.layers - 1) {
        context_raw = nn::concat({r.fwd_final.hidden, r.bwd_final.hidden}, 1);
      }
    } else {
      nn::UnrollResult r = nn::lstm_unroll(seq, model.fwd[l]);
      seq = std::move(r.hidden);
      if (l == model.cfg.layers - 1) context_raw = r.final_state.hidden;
    }
    const bool last = l == model.cfg.layers - 1;
    if (!last && model.cfg.dropout > 0.0) {
      for (Variable& v : seq) v = nn::dropout(v, model.cfg.dropout, mode, rng);
    }
  }
  return model.projection(context_raw);
}

Variable decoder_forward(const Variable& context, TrackerModel& model, Mode mode, Rng& rng) {
  const auto& shape = context.value().shape;
  if (shape.size() != 2 || shape[1] != model.cfg.decoder_hidden) {
    throw ShapeError("decoder: context shape " + nn::shape_str(shape) +
                     " does not match decoder hidden size " +
                     std::to_string(model.cfg.decoder_hidden));
  }
  const int batch = shape[0];
  nn::LstmState init{context,
                     Variable(nn::Tensor::zeros({batch, model.cfg.decoder_hidden}))};
  const Variable token(nn::Tensor::zeros({batch, 3}));
  auto [h, st] = nn::lstm_step(token, init, model.decoder);
  (void)st;
  if (model.cfg.dropout > 0.0) h = nn::dropout(h, model.cfg.dropout, mode, rng);
  return model.head(h);
}

Variable tracker_forward(const std::vector<Variable>& steps, TrackerModel& model,
                         Mode mode, Rng& rng) {
  return decoder_forward(encoder_forward(steps, model, mode, rng), model, mode, rng);
}

PackedBatch pack_batch(const TrackerModel& model,
                       const std::vector<const SequenceSample*>& batch) {
  if (batch.empty()) throw ShapeError("pack_batch: empty batch");
  const int b = static_cast<int>(batch.size());
  const int t = model.cfg.t_window;
  const int f = model.cfg.input_dim;
  PackedBatch out;
  out.steps.reserve(t);
  for (int step = 0; step < t; ++step) {
    nn::Tensor x = nn::Tensor::zeros({b, f});
    for (int i = 0; i < b; ++i) {
      const SequenceSample& s = *batch[i];
      if (static_cast<int>(s.features.size()) != t ||
          static_cast<int>(s.features[step].size()) != f) {
        throw ShapeError("pack_batch: sample does not match the model's window/feature dims");
      }
      for (int j = 0; j < f; ++j) {
        x.data[static_cast<std::size_t>(i) * f + j] =
            (s.features[step][j] - model.feat_mean[j]) / model.feat_std[j];
      }
    }
    out.steps.emplace_back(Variable(std::move(x)));
  }
  out.targets = nn::Tensor::zeros({b, 3});
  for (int i = 0; i < b; ++i) {
    out.targets.data[static_cast<std::size_t>(i) * 3 + 0] = batch[i]->target.x;
    out.targets.data[static_cast<std::size_t>(i) * 3 + 1] = batch[i]->target.y;
    out.targets.data[static_cast<std::size_t>(i) * 3 + 2] = batch[i]->target.z;
  }
  return out;
}

namespace {

// Mean squared Euclidean error of eval-mode predictions, batched.
double eval_mse(TrackerModel& model, const std::vector<SequenceSample>& samples,
                int batch_size) {
  Rng rng(0);  // eval mode draws nothing
  double sum = 0.0;
  std::size_t done = 0;
  while (done < samples.size()) {
    const std::size_t take = std::min<std::size_t>(batch_size, samples.size() - done);
    std::vector<const SequenceSample*> batch(take);
    for (std::size_t i = 0; i < take; ++i) batch[i] = &samples[done + i];
    PackedBatch packed = pack_batch(model, batch);
    Variable pred = tracker_forward(packed.steps, model, Mode::Eval, rng);
    const auto& pv = pred.value().data;
    for (std::size_t i = 0; i < take; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double d = pv[i * 3 + j] - packed.targets.data[i * 3 + j];
        sum += d * d;
      }
    }
    done += take;
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

TrackerTrainResult train_tracker(const std::vector<SequenceSample>& train,
                                 const std::vector<SequenceSample>& val,
                                 const TrackerConfig& cfg, const TrackerHyper& hyper) {
  cfg.validate();
  std::vector<std::string> issues;
  if (train.empty()) issues.push_back("tracker training set is empty");
  if (val.empty()) issues.push_back("tracker validation set is empty");
  if (hyper.epochs < 0) issues.push_back("tracker epoch count must be non-negative");
  if (hyper.batch_size < 1) issues.push_back("tracker batch size must be positive");
  if (!issues.empty()) throw ConfigError(issues);

  TrackerTrainResult out;
  Rng init_rng(derive_seed(hyper.seed, "tracker-init", 0));
  out.model = TrackerModel(cfg, init_rng);
  TrackerModel& model = out.model;

  // Per-dimension standardization from every training timestep.
  std::vector<double> mean(cfg.input_dim, 0.0), var(cfg.input_dim, 0.0);
  const double count = static_cast<double>(train.size()) * cfg.t_window;
  for (const SequenceSample& s : train)
    for (const auto& step : s.features) {
      if (static_cast<int>(step.size()) != cfg.input_dim)
        throw ShapeError("tracker training: feature dimension mismatch");
      for (int j = 0; j < cfg.input_dim; ++j) mean[j] += step[j];
    }
  for (double& m : mean) m /= count;
  for (const SequenceSample& s : train)
    for (const auto& step : s.features)
      for (int j = 0; j < cfg.input_dim; ++j) {
        const double d = step[j] - mean[j];
        var[j] += d * d;
      }
  model.feat_mean = mean;
  for (int j = 0; j < cfg.input_dim; ++j) {
    model.feat_std[j] = std::max(std::sqrt(var[j] / count), 1e-12);
  }

  nn::Adam opt(model.parameters(), nn::AdamConfig{hyper.lr, 0.9, 0.999, 1e-8});
  out.curve.train.push_back(eval_mse(model, train, 64));
  out.curve.val.push_back(eval_mse(model, val, 64));

  const std::size_t n = train.size();
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng perm_rng(derive_seed(hyper.seed, "tracker-epoch", epoch));
    Rng drop_rng(derive_seed(hyper.seed, "tracker-dropout", epoch));
    const std::vector<std::size_t> order = perm_rng.permutation(n);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t take = std::min<std::size_t>(hyper.batch_size, n - start);
      std::vector<const SequenceSample*> batch(take);
      for (std::size_t i = 0; i < take; ++i) batch[i] = &train[order[start + i]];
      PackedBatch packed = pack_batch(model, batch);
      Variable pred = tracker_forward(packed.steps, model, Mode::Train, drop_rng);
      Variable target(std::move(packed.targets));
      // x3 turns the per-component mean into the squared Euclidean mean (m^2).
      Variable loss = nn::scale(nn::mse_loss(pred, target), 3.0);
      const double lv = loss.value().data[0];
      if (!std::isfinite(lv)) {
        throw NumericError("tracker training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(n_batches));
      }
      epoch_loss += lv;
      ++n_batches;
      nn::backward(loss);
      opt.step();
      opt.zero_grad();
    }
    out.curve.train.push_back(epoch_loss / static_cast<double>(n_batches));
    out.curve.val.push_back(eval_mse(model, val, 64));
  }
  return out;
}

std::vector<MseGroup> evaluate(TrackerModel& model,
                               const std::vector<SequenceSample>& samples,
                               int batch_size) {
  Rng rng(0);
  std::map<std::tuple<double, int, int>, std::pair<double, std::int64_t>> groups;
  std::size_t done = 0;
  while (done < samples.size()) {
    const std::size_t take = std::min<std::size_t>(batch_size, samples.size() - done);
    std::vector<const SequenceSample*> batch(take);
    for (std::size_t i = 0; i < take; ++i) batch[i] = &samples[done + i];
    PackedBatch packed = pack_batch(model, batch);
    Variable pred = tracker_forward(packed.steps, model, Mode::Eval, rng);
    const auto& pv = pred.value().data;
    for (std::size_t i = 0; i < take; ++i) {
      const SequenceSample& s = *batch[i];
      double err = 0.0;
      for (int j = 0; j < 3; ++j) {
        const double d = pv[i * 3 + j] - packed.targets.data[i * 3 + j];
        err += d * d;
      }
      auto& acc = groups[{s.snr_db, static_cast<int>(s.kind), static_cast<int>(s.source)}];
      acc.first += err;
      acc.second += 1;
    }
    done += take;
  }
  std::vector<MseGroup> out;
  out.reserve(groups.size());
  for (const auto& [key, acc] : groups) {
    MseGroup g;
    g.snr_db = std::get<0>(key);
    g.kind = static_cast<TrajectoryKind>(std::get<1>(key));
    g.source = static_cast<InputSource>(std::get<2>(key));
    g.mse_m2 = acc.first / static_cast<double>(acc.second);
    g.n_samples = acc.second;
    out.push_back(g);
  }
  return out;
}

void save_tracker(const TrackerModel& model, const std::string& path) {
  std::vector<nn::CheckpointEntry> entries;
  nn::Tensor meta = nn::Tensor::zeros({8});
  meta.data = {static_cast<double>(model.cfg.input_dim),
               static_cast<double>(model.cfg.t_window),
               static_cast<double>(model.cfg.layers),
               static_cast<double>(model.cfg.hidden),
               static_cast<double>(model.cfg.decoder_hidden),
               model.cfg.dropout,
               model.cfg.bidirectional ? 1.0 : 0.0,
               1.0};
  entries.push_back({"tracker.meta", std::move(meta)});
  nn::append_params(entries, const_cast<TrackerModel&>(model).parameters());
  entries.push_back({"tracker.feat_mean", nn::Tensor::from_vector(model.feat_mean)});
  entries.push_back({"tracker.feat_std", nn::Tensor::from_vector(model.feat_std)});
  nn::save_checkpoint(path, entries);
}

TrackerModel load_tracker(const std::string& path) {
  const auto entries = nn::load_checkpoint(path);
  auto it = entries.find("tracker.meta");
  if (it == entries.end() || it->second.data.size() != 8) {
    throw IoError("tracker checkpoint " + path + " missing its meta record");
  }
  const auto& m = it->second.data;
  TrackerConfig cfg;
  cfg.input_dim = static_cast<int>(m[0]);
  cfg.t_window = static_cast<int>(m[1]);
  cfg.layers = static_cast<int>(m[2]);
  cfg.hidden = static_cast<int>(m[3]);
  cfg.decoder_hidden = static_cast<int>(m[4]);
  cfg.dropout = m[5];
  cfg.bidirectional = m[6] != 0.0;
  Rng rng(0);
  TrackerModel model(cfg, rng);
  nn::restore_params(entries, model.parameters());
  auto grab = [&](const char* name, std::vector<double>& dst) {
    auto e = entries.find(name);
    if (e == entries.end() || static_cast<int>(e->second.data.size()) != cfg.input_dim) {
      throw IoError("tracker checkpoint " + path + " missing stats entry " + name);
    }
    dst = e->second.data;
  };
  grab("tracker.feat_mean", model.feat_mean);
  grab("tracker.feat_std", model.feat_std);
  return model;
}

int plateau_epoch(const std::vector<double>& val_losses, int window, double tolerance) {
  // val_losses[0] is the pre-training point; epochs are 1-based from there.
  if (window < 1) throw DomainError("plateau detection needs a positive window");
  const int n = static_cast<int>(val_losses.size());
  for (int e = 1; e + window - 1 < n; ++e) {
    double lo = val_losses[e], hi = val_losses[e];
    for (int k = e; k < e + window; ++k) {
      lo = std::min(lo, val_losses[k]);
      hi = std::max(hi, val_losses[k]);
    }
    if (hi - lo <= tolerance * std::max(std::abs(hi), 1e-12)) return e;
  }
  return -1;
}

}  // namespace xltrack
