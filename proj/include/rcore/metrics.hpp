#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcore/label_space.hpp"

namespace rcore {

// Per-split evaluation summary. All accuracies are percents in [0,100].
struct EvalReport {
  double acc_verb_seen = 0, acc_verb_unseen = 0;
  double acc_obj_seen = 0, acc_obj_unseen = 0;
  double acc_comp_seen = 0, acc_comp_unseen = 0;
  double hm_verb = 0, hm_obj = 0, hm_comp = 0;
  double cg_seen = 0, cg_unseen = 0;
  double fsp = 0;
  std::optional<double> fcp;  // undefined when no unseen sample is predicted seen
  std::optional<double> auc;
  double mean_cos_rev = 0;
  std::vector<long> confusion_verb;  // n_verbs * n_verbs counts, row = ground truth
  int n_verbs = 0;

  std::string to_json() const;
  static const char* csv_header();  // learning-curve row layout
  std::string csv_row(int epoch) const;
};

double harmonic_mean(double a, double b);

// acc_c - acc_v * acc_o / 100, all arguments percents.
double compositional_gap(double acc_v, double acc_o, double acc_c);

// Fraction (percent) of unseen-labeled samples whose predicted composition is
// seen. comp_preds are flat composition indices of unseen-labeled samples.
double fsp_ratio(const std::vector<std::size_t>& comp_preds, const CompositionSpace& space);

// Among unseen-labeled samples predicted seen, the percent predicted inside
// the frequent set. nullopt when no prediction lands in a seen composition.
std::optional<double> fcp_ratio(const std::vector<std::size_t>& comp_preds,
                                const CoOccurrenceStats& stats, const CompositionSpace& space);

// Area under the (seen_acc, unseen_acc) calibration curve with endpoints
// extended to (0, max unseen) and (max seen, 0). Arguments are percents; the
// area unit is percent^2 / 100 so a 50x50 rectangle scores 25.
double auc_seen_unseen(const std::vector<std::pair<double, double>>& curve);

struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<long> counts;       // n*n, row = ground truth
  std::vector<double> normalized; // rows sum to 1 for nonempty rows

  long at(int gt, int pred) const { return counts[static_cast<std::size_t>(gt) * n_classes + pred]; }
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& gts,
                                 int n_classes);

double accuracy_percent(const std::vector<int>& preds, const std::vector<int>& gts);

}  // namespace rcore
