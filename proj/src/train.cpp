#include "vmreg/train.hpp"

#include <algorithm>
#include <cmath>

namespace vmreg {

namespace {

constexpr int kValChunk = 512;

Batch slice_batch(const Dataset& d, const std::vector<int>& order, int lo, int hi) {
  Batch b;
  int n = hi - lo;
  b.x = Tensor(n, d.dim());
  b.target_bit = Tensor(n, 2);
  for (int i = 0; i < n; ++i) {
    int src = order[static_cast<std::size_t>(lo + i)];
    for (int j = 0; j < d.dim(); ++j) b.x.at(i, j) = d.x.at(src, j);
    Biternion t = angle_to_biternion(d.phi[static_cast<std::size_t>(src)]);
    b.target_bit.at(i, 0) = t.c;
    b.target_bit.at(i, 1) = t.s;
  }
  return b;
}

using Snapshot = std::vector<std::vector<Tensor>>;

Snapshot snapshot(const std::vector<ParamSet*>& sets) {
  Snapshot s;
  for (ParamSet* p : sets) s.push_back(p->values);
  return s;
}

void restore(const std::vector<ParamSet*>& sets, const Snapshot& snap) {
  for (std::size_t i = 0; i < sets.size(); ++i) sets[i]->values = snap[i];
}

double dataset_loss(Objective& obj, const Dataset& data, Rng& noise_rng) {
  double acc = 0.0;
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  for (int lo = 0; lo < data.size(); lo += kValChunk) {
    int hi = std::min(lo + kValChunk, data.size());
    Batch b = slice_batch(data, order, lo, hi);
    std::vector<Tensor> noise = draw_noise(obj, b.size(), noise_rng);
    acc += objective_loss(obj, b, noise) * (hi - lo);
  }
  return acc / static_cast<double>(data.size());
}

}  // namespace

void TrainConfig::validate() const {
  head.validate();
  if (batch_size < 1) throw ConfigMismatch("TrainConfig: batch_size < 1");
  if (max_epochs < 1) throw ConfigMismatch("TrainConfig: max_epochs < 1");
  if (patience < 0 || patience > max_epochs) {
    throw ConfigMismatch("TrainConfig: patience must lie in [0, max_epochs]");
  }
  if (!(adam.alpha > 0.0)) throw ConfigMismatch("TrainConfig: learning rate must be positive");
}

double validation_loss(PredictiveModel& model, const Dataset& data, std::uint64_t noise_seed) {
  auto obj = make_objective(model);
  Rng noise_rng(noise_seed);
  return dataset_loss(*obj, data, noise_rng);
}

TrainedModel train(const TrainConfig& config, const Dataset& train_data, const Dataset& val_data) {
  config.validate();
  if (train_data.size() < 1 || val_data.size() < 1) throw EmptyInput("train: empty dataset");
  if (train_data.multi() || val_data.multi()) {
    throw ConfigMismatch("train: expected single-angle datasets (train per-angle models)");
  }
  if (train_data.dim() != val_data.dim()) throw ConfigMismatch("train: feature dims disagree");

  TrainedModel out;
  out.model = make_model(config.head, train_data.dim(), config.hidden, Rng::derive(config.seed, 100));
  auto obj = make_objective(out.model);
  std::vector<ParamSet*> sets = obj->param_sets();

  std::vector<AdamState> adam;
  adam.reserve(sets.size());
  for (ParamSet* p : sets) adam.emplace_back(*p, config.adam);

  Rng shuffle_rng(Rng::derive(config.seed, 101));
  Rng noise_rng(Rng::derive(config.seed, 102));
  std::uint64_t val_noise_seed = Rng::derive(config.seed, 103);

  std::vector<int> order(static_cast<std::size_t>(train_data.size()));
  for (int i = 0; i < train_data.size(); ++i) order[static_cast<std::size_t>(i)] = i;

  double best_val = std::numeric_limits<double>::infinity();
  Snapshot best_params = snapshot(sets);
  int since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int lo = 0; lo < train_data.size(); lo += config.batch_size) {
      int hi = std::min(lo + config.batch_size, train_data.size());
      Batch b = slice_batch(train_data, order, lo, hi);
      std::vector<Tensor> noise = draw_noise(*obj, b.size(), noise_rng);
      epoch_loss += loss_and_gradients(*obj, b, noise) * (hi - lo);
      for (std::size_t s = 0; s < sets.size(); ++s) adam_step(adam[s], *sets[s]);
    }
    for (ParamSet* p : sets) {
      if (!p->all_finite()) {
        throw NonFiniteLoss("train: parameters diverged at epoch " + std::to_string(epoch));
      }
    }

    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(train_data.size());
    Rng val_rng(val_noise_seed);  // same stream every epoch: comparable estimates
    stats.val_loss = dataset_loss(*obj, val_data, val_rng);
    out.history.push_back(stats);

    if (stats.val_loss < best_val) {
      best_val = stats.val_loss;
      best_params = snapshot(sets);
      out.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  restore(sets, best_params);

  if (config.head.tag == HeadKind::Tag::kFixedKappa && !config.head.fixed_kappa) {
    // Post-training concentration fit on the validation predictions.
    HeadOutputs pred = forward(out.model.spec, out.model.params, val_data.x);
    std::vector<Angle> mus;
    mus.reserve(static_cast<std::size_t>(val_data.size()));
    for (int i = 0; i < val_data.size(); ++i) {
      mus.push_back(biternion_to_angle(Biternion{pred.biternion.at(i, 0), pred.biternion.at(i, 1)}));
    }
    out.model.fitted_kappa = select_fixed_kappa(mus, val_data.phi);
  }
  return out;
}

SearchResult random_search(const HeadKind& head, const SearchSpace& space, int budget,
                           const Dataset& train_data, const Dataset& val_data, std::uint64_t seed) {
  if (budget < 1) throw ConfigMismatch("random_search: budget < 1");
  Rng cfg_rng(Rng::derive(seed, 7));
  SearchResult result;
  bool have_best = false;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int trial = 0; trial < budget; ++trial) {
    // Fixed number of draws per trial keeps the stream prefix-stable.
    double lr = std::exp(cfg_rng.uniform(std::log(space.lr_lo), std::log(space.lr_hi)));
    int batch = space.batch_sizes[cfg_rng.index(space.batch_sizes.size())];
    int width = space.widths[cfg_rng.index(space.widths.size())];
    int depth = space.depths[cfg_rng.index(space.depths.size())];
    Activation act = space.activations[cfg_rng.index(space.activations.size())];

    TrainConfig cfg;
    cfg.head = head;
    cfg.hidden.assign(static_cast<std::size_t>(depth), LayerSpec{width, act});
    cfg.adam.alpha = lr;
    cfg.batch_size = batch;
    cfg.max_epochs = space.max_epochs;
    cfg.patience = space.patience;
    cfg.seed = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(trial));

    SearchEntry entry;
    entry.config = cfg;
    try {
      TrainedModel m = train(cfg, train_data, val_data);
      entry.val_loss = m.history[static_cast<std::size_t>(m.best_epoch)].val_loss;
      result.leaderboard.push_back(entry);
      if (entry.val_loss < best_loss) {
        best_loss = entry.val_loss;
        result.best = std::move(m);
        have_best = true;
      }
    } catch (const NonFiniteLoss&) {
      entry.diverged = true;
      result.diverged.push_back(entry);
    } catch (const DegenerateVector&) {
      entry.diverged = true;
      result.diverged.push_back(entry);
    }
  }
  if (!have_best) throw NonFiniteLoss("random_search: every trial diverged");
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const SearchEntry& a, const SearchEntry& b) { return a.val_loss < b.val_loss; });
  return result;
}

}  // namespace vmreg
