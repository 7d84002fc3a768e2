#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcore/data.hpp"
#include "rcore/label_space.hpp"
#include "rcore/metrics.hpp"
#include "rcore/model.hpp"

namespace rcore {

struct InferenceConfig {
  enum class Mode { open_world, closed_world };
  Mode mode = Mode::open_world;
  // Added to every unseen-composition score before the argmax; 0 means the
  // unbiased protocol.
  double bias = 0.0;
  std::vector<std::size_t> candidate_set;  // required (nonempty) for closed_world
};

struct SamplePrediction {
  std::size_t comp = 0;
  int verb = 0;
  int obj = 0;
};

// comp argmax over the allowed set of score + bias*[unseen]; verb/object
// argmax of the component logits. Ties break toward the lowest flat index.
SamplePrediction predict(const std::vector<double>& comp_scores,
                         const std::vector<double>& verb_logits,
                         const std::vector<double>& obj_logits, const InferenceConfig& cfg,
                         const CompositionSpace& space);

// Cached per-clip forward values for repeated inference sweeps.
struct EvalSample {
  std::vector<double> comp_scores;  // raw pre-softmax composition scores
  std::vector<double> verb_logits;
  std::vector<double> obj_logits;
  int verb_gt = 0, obj_gt = 0;
  std::size_t comp_gt = 0;
  bool gt_seen = false;
  double cos_rev = 0.0;  // cos(f^V, f^V_rev)
  int verb_pred_orig = 0;
  int verb_pred_shuf = 0;
};

// One forward pass per clip plus the reversed/shuffled verb-feature probes.
// The shuffle permutation is drawn fresh per clip from rng.
std::vector<EvalSample> evaluate_clips(const ModelParams& params, const std::vector<Clip>& clips,
                                       const CompositionSpace& space, Rng& rng);

EvalReport build_report(const std::vector<EvalSample>& samples, const InferenceConfig& cfg,
                        const CompositionSpace& space, const CoOccurrenceStats& stats);

struct CalibrationPoint {
  double bias = 0, seen_acc = 0, unseen_acc = 0, hm = 0;
};

struct CalibrationResult {
  double chosen_bias = 0.0;
  std::vector<CalibrationPoint> points;

  std::vector<std::pair<double, double>> curve() const;  // (seen, unseen) pairs
  std::string to_csv() const;  // bias,seen_acc,unseen_acc,hm
};

std::vector<double> default_bias_sweep();  // 101 values over [-5, 5]

// Maximizes the seen/unseen harmonic mean on the given samples; ties prefer
// the smaller |bias|. Errors when the split lacks seen or unseen samples.
CalibrationResult calibrate_bias(const std::vector<EvalSample>& samples,
                                 const CompositionSpace& space,
                                 const std::vector<double>& sweep);

struct ShuffledProbeResult {
  double orig_verb_acc = 0;
  double shuffled_verb_acc = 0;
  double gap = 0;
};

ShuffledProbeResult shuffled_probe(const std::vector<EvalSample>& samples);

double reversed_cosine_probe(const std::vector<EvalSample>& samples);

std::string probes_to_json(const ShuffledProbeResult& shuffled, double mean_cos_rev);

}  // namespace rcore
