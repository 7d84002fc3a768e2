#include "rcore/losses.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace rcore {

double WeightSchedule::at(double epoch) const {
  if (peak == 0.0) return 0.0;
  if (epoch <= start_epoch) return 0.0;
  if (epoch >= end_epoch) return peak;
  return peak * (epoch - start_epoch) / (end_epoch - start_epoch);
}

Tensor component_loss(const Tensor& verb_logits, const Tensor& obj_logits, int y_verb,
                      const SoftLabel& soft_obj) {
  if (y_verb < 0 || static_cast<std::size_t>(y_verb) >= verb_logits.size())
    throw std::out_of_range("component_loss: verb label out of range");
  if (soft_obj.size() != obj_logits.size())
    throw std::invalid_argument("component_loss: soft label size mismatch");

  Tensor log_pv = log(softmax(verb_logits));
  Tensor l_v = neg(pick(log_pv, static_cast<std::size_t>(y_verb)));

  Tensor log_po = log(softmax(obj_logits));
  Tensor target({soft_obj.size()}, soft_obj, false);
  Tensor l_o = neg(dot(target, log_po));
  return add(l_v, l_o);
}

Tensor composition_loss(const Tensor& y_hat, std::size_t g) {
  if (g >= y_hat.size())
    throw std::out_of_range("composition_loss: ground-truth index " + std::to_string(g) +
                            " out of range for " + y_hat.shape_str());
  return neg(log(pick(y_hat, g)));
}

Tensor torc_cos(const Tensor& f_v, const Tensor& f_v_rev) { return cosine(f_v, f_v_rev); }

Tensor torc_ent(const Tensor& f_v_shuffled, const Tensor& verb_embed, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("torc_ent: tau must be positive");
  Tensor p = softmax(scale(cosine_rows(verb_embed, f_v_shuffled), 1.0 / tau));
  return dot(p, log(p));
}

Tensor torc_loss(const Tensor& f_v, const Tensor& f_v_rev, const Tensor& f_v_shuffled,
                 const Tensor& verb_embed, double tau, bool enable_cos, bool enable_ent) {
  if (!enable_cos && !enable_ent) {
    std::cerr << "warning: torc_loss called with both terms disabled\n";
    return Tensor::scalar(0.0);
  }
  if (enable_cos && !enable_ent) return torc_cos(f_v, f_v_rev);
  if (!enable_cos && enable_ent) return torc_ent(f_v_shuffled, verb_embed, tau);
  return add(torc_cos(f_v, f_v_rev), torc_ent(f_v_shuffled, verb_embed, tau));
}

std::vector<std::size_t> margin_candidates(const std::vector<double>& y_hat, std::size_t g,
                                           const std::set<std::size_t>& freq_set, int top_k) {
  if (top_k < 1) throw std::invalid_argument("margin_candidates: top_k must be >= 1");
  std::vector<std::size_t> order(y_hat.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Ties broken by lower index for determinism.
  std::stable_sort(order.begin(), order.end(), [&y_hat](std::size_t a, std::size_t b) {
    return y_hat[a] != y_hat[b] ? y_hat[a] > y_hat[b] : a < b;
  });
  std::vector<std::size_t> candidates;
  for (std::size_t i : order) {
    if (i == g) continue;  // g excluded before the top-K cut
    if (candidates.size() >= static_cast<std::size_t>(top_k)) break;
    candidates.push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t c : candidates)
    if (freq_set.count(c)) out.push_back(c);
  return out;
}

Tensor margin_loss(const Tensor& y_hat, std::size_t g, const std::set<std::size_t>& freq_set,
                   int top_k, double m) {
  if (g >= y_hat.size())
    throw std::out_of_range("margin_loss: ground-truth index out of range");
  std::vector<std::size_t> cands = margin_candidates(y_hat.values(), g, freq_set, top_k);
  if (cands.empty()) return Tensor::scalar(0.0);

  Tensor log_g = log(pick(y_hat, g));
  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t c : cands) {
    Tensor hinge = relu(add_scalar(sub(log(pick(y_hat, c)), log_g), m));
    acc = add(acc, hinge);
  }
  return acc;
}

Tensor total_loss(const LossParts& parts, const LossWeights& weights, double epoch) {
  if (epoch < 0.0) throw std::invalid_argument("total_loss: epoch must be >= 0");
  Tensor total = add(scale(parts.l_com, weights.alpha), scale(parts.l_comp, weights.beta));
  double gamma = weights.gamma_schedule.at(epoch);
  double delta = weights.delta_schedule.at(epoch);
  if (parts.l_torc.defined() && gamma != 0.0) total = add(total, scale(parts.l_torc, gamma));
  if (parts.l_margin.defined() && delta != 0.0) total = add(total, scale(parts.l_margin, delta));
  return total;
}

}  // namespace rcore
