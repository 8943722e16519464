#pragma once

#include <limits>

#include "vmreg/decision.hpp"
#include "vmreg/synthetic.hpp"

namespace vmreg {

struct TrainConfig {
  HeadKind head;
  std::vector<LayerSpec> hidden{{48, Activation::kTanh}, {48, Activation::kTanh}};
  AdamConfig adam;
  int batch_size = 64;
  int max_epochs = 500;
  int patience = 20;  // epochs without validation improvement before stopping
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainedModel {
  int format_version = 1;
  PredictiveModel model;
  std::vector<EpochStats> history;
  int best_epoch = -1;  // index into history of the restored parameters
};

/// Adam over shuffled mini-batches of the head's own loss; keeps the best
/// validation-epoch parameters and stops after `patience` epochs without
/// improvement. FixedKappa heads without a configured kappa get it fitted on
/// the validation predictions afterwards.
TrainedModel train(const TrainConfig& config, const Dataset& train_data, const Dataset& val_data);

/// Validation loss of a model under its own objective with a fixed noise
/// stream (comparable across calls).
double validation_loss(PredictiveModel& model, const Dataset& data, std::uint64_t noise_seed);

struct SearchSpace {
  double lr_lo = 1e-4, lr_hi = 1e-2;  // log-uniform
  std::vector<int> batch_sizes{32, 64, 128};
  std::vector<int> widths{16, 32, 48, 64};
  std::vector<int> depths{1, 2};
  std::vector<Activation> activations{Activation::kTanh, Activation::kRelu};
  int max_epochs = 150;
  int patience = 10;
};

struct SearchEntry {
  TrainConfig config;
  double val_loss = std::numeric_limits<double>::infinity();
  bool diverged = false;
};

struct SearchResult {
  TrainedModel best;
  std::vector<SearchEntry> leaderboard;  // finished runs, best first
  std::vector<SearchEntry> diverged;     // runs that hit non-finite losses
};

/// Samples `budget` configurations (log-uniform learning rate, uniform
/// choices elsewhere), trains each, and returns the best by validation loss.
/// Configuration draws are a fixed-length prefix stream: the first k trials
/// of a budget-n search coincide with a budget-k search at the same seed.
SearchResult random_search(const HeadKind& head, const SearchSpace& space, int budget,
                           const Dataset& train_data, const Dataset& val_data, std::uint64_t seed);

}  // namespace vmreg
