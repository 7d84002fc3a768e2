#include "rcore/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rcore {

SamplePrediction predict(const std::vector<double>& comp_scores,
                         const std::vector<double>& verb_logits,
                         const std::vector<double>& obj_logits, const InferenceConfig& cfg,
                         const CompositionSpace& space) {
  if (comp_scores.size() != space.n_compositions())
    throw std::invalid_argument("predict: score vector does not match the composition space");
  if (cfg.mode == InferenceConfig::Mode::closed_world && cfg.candidate_set.empty())
    throw std::invalid_argument("predict: closed_world requires a nonempty candidate_set");

  SamplePrediction out;
  auto biased = [&](std::size_t flat) {
    return comp_scores[flat] + (space.is_seen_flat(flat) ? 0.0 : cfg.bias);
  };
  if (cfg.mode == InferenceConfig::Mode::open_world) {
    std::size_t best = 0;
    double best_score = biased(0);
    for (std::size_t i = 1; i < comp_scores.size(); ++i) {
      double s = biased(i);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    out.comp = best;
  } else {
    std::size_t best = cfg.candidate_set[0];
    double best_score = biased(best);
    for (std::size_t c : cfg.candidate_set) {
      if (c >= comp_scores.size())
        throw std::out_of_range("predict: candidate index out of range");
      double s = biased(c);
      if (s > best_score || (s == best_score && c < best)) {
        best_score = s;
        best = c;
      }
    }
    out.comp = best;
  }
  out.verb = static_cast<int>(
      std::max_element(verb_logits.begin(), verb_logits.end()) - verb_logits.begin());
  out.obj = static_cast<int>(std::max_element(obj_logits.begin(), obj_logits.end()) -
                             obj_logits.begin());
  return out;
}

std::vector<EvalSample> evaluate_clips(const ModelParams& params, const std::vector<Clip>& clips,
                                       const CompositionSpace& space, Rng& rng) {
  if (static_cast<std::size_t>(params.config.n_verbs) != space.n_verbs() ||
      static_cast<std::size_t>(params.config.n_objects) != space.n_objects())
    throw std::invalid_argument("evaluate_clips: model and composition space disagree");

  std::vector<EvalSample> out;
  out.reserve(clips.size());
  const double inv_tau = 1.0 / params.config.temperature;
  for (const Clip& clip : clips) {
    Tensor pixels = clip_to_tensor(clip);
    ForwardOutputs fwd = forward(pixels, params);
    CompositionScores scores = compose_scores(fwd);

    EvalSample s;
    s.comp_scores = scores.raw.values();
    s.verb_logits = fwd.verb_logits.values();
    s.obj_logits = fwd.obj_logits.values();
    s.verb_gt = clip.verb;
    s.obj_gt = clip.object;
    s.comp_gt = space.comp_index(clip.verb, clip.object);
    s.gt_seen = space.is_seen(clip.verb, clip.object);

    Tensor f_rev = verb_encode(temporal_reverse(fwd.frame_feats), params);
    s.cos_rev = cosine(fwd.verb_feat, f_rev).item();

    auto [shuffled_seq, perm] = temporal_shuffle(fwd.frame_feats, rng);
    Tensor f_shuf = verb_encode(shuffled_seq, params);
    Tensor shuf_logits = scale(cosine_rows(params.verb_embed, f_shuf), inv_tau);
    const auto& vl = s.verb_logits;
    s.verb_pred_orig =
        static_cast<int>(std::max_element(vl.begin(), vl.end()) - vl.begin());
    const auto& sl = shuf_logits.values();
    s.verb_pred_shuf = static_cast<int>(std::max_element(sl.begin(), sl.end()) - sl.begin());
    out.push_back(std::move(s));
  }
  return out;
}

EvalReport build_report(const std::vector<EvalSample>& samples, const InferenceConfig& cfg,
                        const CompositionSpace& space, const CoOccurrenceStats& stats) {
  EvalReport r;
  r.n_verbs = static_cast<int>(space.n_verbs());

  std::vector<int> verb_preds, verb_gts;
  std::vector<std::size_t> unseen_comp_preds;
  long seen_n = 0, unseen_n = 0;
  long seen_v = 0, seen_o = 0, seen_c = 0;
  long unseen_v = 0, unseen_o = 0, unseen_c = 0;
  double cos_sum = 0.0;

  for (const auto& s : samples) {
    SamplePrediction p = predict(s.comp_scores, s.verb_logits, s.obj_logits, cfg, space);
    verb_preds.push_back(p.verb);
    verb_gts.push_back(s.verb_gt);
    cos_sum += s.cos_rev;
    if (s.gt_seen) {
      ++seen_n;
      seen_v += p.verb == s.verb_gt;
      seen_o += p.obj == s.obj_gt;
      seen_c += p.comp == s.comp_gt;
    } else {
      ++unseen_n;
      unseen_v += p.verb == s.verb_gt;
      unseen_o += p.obj == s.obj_gt;
      unseen_c += p.comp == s.comp_gt;
      unseen_comp_preds.push_back(p.comp);
    }
  }

  auto pct = [](long hits, long n) {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
  };
  r.acc_verb_seen = pct(seen_v, seen_n);
  r.acc_obj_seen = pct(seen_o, seen_n);
  r.acc_comp_seen = pct(seen_c, seen_n);
  r.acc_verb_unseen = pct(unseen_v, unseen_n);
  r.acc_obj_unseen = pct(unseen_o, unseen_n);
  r.acc_comp_unseen = pct(unseen_c, unseen_n);
  r.hm_verb = harmonic_mean(r.acc_verb_seen, r.acc_verb_unseen);
  r.hm_obj = harmonic_mean(r.acc_obj_seen, r.acc_obj_unseen);
  r.hm_comp = harmonic_mean(r.acc_comp_seen, r.acc_comp_unseen);
  r.cg_seen = compositional_gap(r.acc_verb_seen, r.acc_obj_seen, r.acc_comp_seen);
  r.cg_unseen = compositional_gap(r.acc_verb_unseen, r.acc_obj_unseen, r.acc_comp_unseen);
  if (!unseen_comp_preds.empty()) {
    r.fsp = fsp_ratio(unseen_comp_preds, space);
    r.fcp = fcp_ratio(unseen_comp_preds, stats, space);
  }
  if (!samples.empty()) r.mean_cos_rev = cos_sum / static_cast<double>(samples.size());
  ConfusionMatrix cm = confusion_matrix(verb_preds, verb_gts, r.n_verbs);
  r.confusion_verb = cm.counts;
  return r;
}

std::vector<double> default_bias_sweep() {
  std::vector<double> sweep;
  sweep.reserve(101);
  for (int i = 0; i <= 100; ++i) sweep.push_back(-5.0 + 0.1 * i);
  return sweep;
}

CalibrationResult calibrate_bias(const std::vector<EvalSample>& samples,
                                 const CompositionSpace& space,
                                 const std::vector<double>& sweep) {
  if (sweep.empty()) throw std::invalid_argument("calibrate_bias: empty sweep");
  bool any_seen = false, any_unseen = false;
  for (const auto& s : samples) (s.gt_seen ? any_seen : any_unseen) = true;
  if (!any_seen || !any_unseen)
    throw std::invalid_argument(
        "calibrate_bias: validation split must contain both seen and unseen samples");

  CalibrationResult res;
  double best_hm = -1.0;
  for (double bias : sweep) {
    InferenceConfig cfg;
    cfg.bias = bias;
    long seen_hits = 0, seen_n = 0, unseen_hits = 0, unseen_n = 0;
    for (const auto& s : samples) {
      SamplePrediction p = predict(s.comp_scores, s.verb_logits, s.obj_logits, cfg, space);
      if (s.gt_seen) {
        ++seen_n;
        seen_hits += p.comp == s.comp_gt;
      } else {
        ++unseen_n;
        unseen_hits += p.comp == s.comp_gt;
      }
    }
    CalibrationPoint pt;
    pt.bias = bias;
    pt.seen_acc = 100.0 * static_cast<double>(seen_hits) / static_cast<double>(seen_n);
    pt.unseen_acc = 100.0 * static_cast<double>(unseen_hits) / static_cast<double>(unseen_n);
    pt.hm = harmonic_mean(pt.seen_acc, pt.unseen_acc);
    res.points.push_back(pt);

    bool better = pt.hm > best_hm;
    if (pt.hm == best_hm) {
      better = std::abs(bias) < std::abs(res.chosen_bias) ||
               (std::abs(bias) == std::abs(res.chosen_bias) && bias < res.chosen_bias);
    }
    if (better) {
      best_hm = pt.hm;
      res.chosen_bias = bias;
    }
  }
  return res;
}

std::vector<std::pair<double, double>> CalibrationResult::curve() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(points.size());
  for (const auto& p : points) out.emplace_back(p.seen_acc, p.unseen_acc);
  return out;
}

std::string CalibrationResult::to_csv() const {
  std::ostringstream os;
  os << "bias,seen_acc,unseen_acc,hm\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& p : points)
    os << p.bias << ',' << p.seen_acc << ',' << p.unseen_acc << ',' << p.hm << '\n';
  return os.str();
}

ShuffledProbeResult shuffled_probe(const std::vector<EvalSample>& samples) {
  ShuffledProbeResult r;
  if (samples.empty()) return r;
  long orig = 0, shuf = 0;
  for (const auto& s : samples) {
    orig += s.verb_pred_orig == s.verb_gt;
    shuf += s.verb_pred_shuf == s.verb_gt;
  }
  r.orig_verb_acc = 100.0 * static_cast<double>(orig) / static_cast<double>(samples.size());
  r.shuffled_verb_acc = 100.0 * static_cast<double>(shuf) / static_cast<double>(samples.size());
  r.gap = r.orig_verb_acc - r.shuffled_verb_acc;
  return r;
}

double reversed_cosine_probe(const std::vector<EvalSample>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += s.cos_rev;
  return acc / static_cast<double>(samples.size());
}

std::string probes_to_json(const ShuffledProbeResult& shuffled, double mean_cos_rev) {
  nlohmann::json j;
  j["shuffled_probe"]["orig_verb_acc"] = shuffled.orig_verb_acc;
  j["shuffled_probe"]["shuffled_verb_acc"] = shuffled.shuffled_verb_acc;
  j["shuffled_probe"]["gap"] = shuffled.gap;
  j["reversed_cosine"] = mean_cos_rev;
  return j.dump(2);
}

}  // namespace rcore
