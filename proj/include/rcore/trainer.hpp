#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcore/augmentation.hpp"
#include "rcore/data.hpp"
#include "rcore/evaluation.hpp"
#include "rcore/label_space.hpp"
#include "rcore/losses.hpp"
#include "rcore/model.hpp"

namespace rcore {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double base_lr = 0.004;
  int warmup_epochs = 3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int eval_every = 1;  // epochs between full diagnostics
  std::uint64_t seed = 0;
  std::string checkpoint_dir;  // empty: no checkpoints written
};

struct TrainSetup {
  TrainConfig train;
  LossWeights weights;
  VocaConfig voca;
  bool enable_vocamix = false;
};

// Linear warmup to base_lr over warmup_steps, then cosine decay reaching 0
// at total_steps. Continuous at the warmup boundary.
double lr_at(long step, long warmup_steps, long total_steps, double base_lr);

struct EpochRecord {
  int epoch = 0;  // 1-based completed epoch
  double mean_l_com = 0, mean_l_comp = 0, mean_l_torc = 0, mean_l_margin = 0, mean_total = 0;
  double gamma = 0, delta = 0;
  double wall_seconds = 0;
  std::optional<EvalReport> eval;
};

struct RunLog {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;   // one row per evaluated epoch
  std::string to_json() const;  // full record
};

// Deterministic mini-batch training with AdamW-style updates, warmup plus
// cosine decay, epoch-scheduled loss weights and optional VOCAMix. RNG use is
// split into named substreams (data order, vocamix application, donors,
// lambda draws, temporal shuffles) so toggling one feature never perturbs
// another's draws.
RunLog train(ModelParams& params, const ClipDataset& train_ds, const std::vector<Clip>& val_clips,
             const CompositionSpace& space, const CoOccurrenceStats& stats,
             const TrainSetup& setup);

}  // namespace rcore
