#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "rcore/augmentation.hpp"
#include "rcore/tensor.hpp"

namespace rcore {

struct WeightSchedule {
  double start_epoch = 0.0;
  double end_epoch = 0.0;
  double peak = 0.0;

  // 0 before start, linear ramp to peak at end, clamped afterwards.
  double at(double epoch) const;
};

struct LossWeights {
  double alpha = 0.2;  // component loss
  double beta = 1.0;   // composition loss
  WeightSchedule gamma_schedule{5.0, 10.0, 1.0};   // temporal-order regularizer
  WeightSchedule delta_schedule{15.0, 20.0, 0.8};  // margin loss
  double margin_m = 1.0;
  int top_k = 10;
  bool enable_cos = true;
  bool enable_ent = true;
};

// L_V + L_O: cross-entropy on verb logits against a hard label plus
// cross-entropy on object logits against a soft label.
Tensor component_loss(const Tensor& verb_logits, const Tensor& obj_logits, int y_verb,
                      const SoftLabel& soft_obj);

// -log(y_hat[g]) for a probability vector y_hat.
Tensor composition_loss(const Tensor& y_hat, std::size_t g);

// cos(f^V, f^V_rev); errors on zero vectors (a dead encoder).
Tensor torc_cos(const Tensor& f_v, const Tensor& f_v_rev);

// sum_i p_i log p_i where p = softmax(cos(f_shuffled, e^V_i)/tau); this is
// negative entropy, minimized at the uniform distribution.
Tensor torc_ent(const Tensor& f_v_shuffled, const Tensor& verb_embed, double tau);

Tensor torc_loss(const Tensor& f_v, const Tensor& f_v_rev, const Tensor& f_v_shuffled,
                 const Tensor& verb_embed, double tau, bool enable_cos, bool enable_ent);

// Hinge over the frequent-but-incorrect competitors among the top-K scores:
// sum_{c in C} max(0, log y_hat(c) - log y_hat(g) + m) with
// C = (top-K by y_hat, g excluded) intersected with freq_set.
Tensor margin_loss(const Tensor& y_hat, std::size_t g, const std::set<std::size_t>& freq_set,
                   int top_k, double m);

// The candidate set used by margin_loss, exposed for verification.
std::vector<std::size_t> margin_candidates(const std::vector<double>& y_hat, std::size_t g,
                                           const std::set<std::size_t>& freq_set, int top_k);

struct LossParts {
  Tensor l_com;
  Tensor l_comp;
  Tensor l_torc;
  Tensor l_margin;
};

// alpha*L_com + beta*L_comp + gamma(epoch)*L_TORC + delta(epoch)*L_M
Tensor total_loss(const LossParts& parts, const LossWeights& weights, double epoch);

}  // namespace rcore
