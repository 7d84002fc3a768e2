#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcore/config.hpp"
#include "rcore/data.hpp"
#include "rcore/evaluation.hpp"
#include "rcore/trainer.hpp"

namespace rcore {

// Composition space whose vocabulary order matches the synthetic label ids.
CompositionSpace space_from_synth(const SynthConfig& cfg);

// A ready-to-train synthetic benchmark: training clips, a mixed seen/unseen
// evaluation split, and the label-space statistics derived from training.
struct Benchmark {
  ClipDataset train;
  std::vector<Clip> val;
  CompositionSpace space;
  CoOccurrenceStats stats;
  ModelConfig model_cfg;
};

Benchmark make_benchmark(const SynthConfig& synth, int feature_dim, int conv_width,
                         double temperature);

std::vector<std::string> preset_names();
bool is_known_preset(const std::string& name);

// Fully materialized configuration for a preset at a given seed; overrides
// are applied on top by the caller before running.
ConfigDoc resolve_preset_config(const std::string& preset, std::uint64_t seed);

SynthConfig synth_config_from(const ConfigDoc& doc);
ModelConfig model_config_from(const ConfigDoc& doc, const SynthConfig& synth);
TrainConfig train_config_from(const ConfigDoc& doc);
LossWeights loss_weights_from(const ConfigDoc& doc);
VocaConfig voca_config_from(const ConfigDoc& doc);

// Baseline: no VOCAMix, no temporal-order regularizer, no margin loss.
TrainSetup baseline_setup_from(const ConfigDoc& doc);
// Full configuration with every component enabled per the document.
TrainSetup rcore_setup_from(const ConfigDoc& doc);

// Runs the resolved configuration, writing all artifacts into outdir
// (created if needed). The resolved document itself is written first.
void run_experiment(const ConfigDoc& doc, const std::string& outdir);

}  // namespace rcore
