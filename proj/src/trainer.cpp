#include "rcore/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace rcore {

double lr_at(long step, long warmup_steps, long total_steps, double base_lr) {
  if (step < 0) throw std::invalid_argument("lr_at: step must be >= 0");
  if (warmup_steps > 0 && step < warmup_steps)
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  double progress = static_cast<double>(step - warmup_steps) /
                    static_cast<double>(total_steps - warmup_steps);
  progress = std::min(progress, 1.0);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

struct AdamW {
  std::vector<std::vector<double>> m, v;
  long t = 0;

  explicit AdamW(const std::vector<Tensor*>& params) {
    for (Tensor* p : params) {
      m.emplace_back(p->size(), 0.0);
      v.emplace_back(p->size(), 0.0);
    }
  }

  void step(std::vector<Tensor*>& params, const TrainConfig& cfg, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor* p = params[i];
      if (!p->has_grad()) continue;
      const auto& g = p->grad();
      auto& data = p->values();
      for (std::size_t j = 0; j < data.size(); ++j) {
        m[i][j] = cfg.beta1 * m[i][j] + (1.0 - cfg.beta1) * g[j];
        v[i][j] = cfg.beta2 * v[i][j] + (1.0 - cfg.beta2) * g[j] * g[j];
        double mhat = m[i][j] / bc1;
        double vhat = v[i][j] / bc2;
        data[j] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) + cfg.weight_decay * data[j]);
      }
    }
  }
};

void check_finite(const Tensor& t, const char* term, int epoch) {
  if (!std::isfinite(t.item()))
    throw NumericError(std::string("train: non-finite ") + term + " at epoch " +
                       std::to_string(epoch));
}

}  // namespace

RunLog train(ModelParams& params, const ClipDataset& train_ds, const std::vector<Clip>& val_clips,
             const CompositionSpace& space, const CoOccurrenceStats& stats,
             const TrainSetup& setup) {
  const TrainConfig& cfg = setup.train;
  if (cfg.epochs < 0 || cfg.batch_size < 1)
    throw std::invalid_argument("train: bad epochs/batch_size");
  if (cfg.warmup_epochs >= cfg.epochs && cfg.epochs > 0 && cfg.warmup_epochs > 0)
    throw std::invalid_argument("train: warmup_epochs must be < epochs");

  RunLog log;
  if (cfg.epochs == 0) return log;
  const std::size_t n = train_ds.clips.size();
  if (n == 0) throw std::invalid_argument("train: empty training set");

  const long steps_per_epoch =
      static_cast<long>((n + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));
  const long total_steps = steps_per_epoch * cfg.epochs;
  const long warmup_steps = steps_per_epoch * cfg.warmup_epochs;

  std::vector<Tensor*> tensors = params.parameters();
  AdamW opt(tensors);
  Rng root(cfg.seed);

  const bool torc_possible =
      setup.weights.gamma_schedule.peak > 0.0 &&
      (setup.weights.enable_cos || setup.weights.enable_ent);
  const bool margin_possible = setup.weights.delta_schedule.peak > 0.0;

  long global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto tick = std::chrono::steady_clock::now();
    Rng order_rng = root.substream("order", static_cast<std::uint64_t>(epoch));
    Rng apply_rng = root.substream("voca.apply", static_cast<std::uint64_t>(epoch));
    Rng donor_rng = root.substream("voca.donor", static_cast<std::uint64_t>(epoch));
    Rng lambda_rng = root.substream("voca.lambda", static_cast<std::uint64_t>(epoch));
    Rng shuffle_rng = root.substream("torc.shuffle", static_cast<std::uint64_t>(epoch));

    std::vector<std::size_t> order = order_rng.permutation(n);

    const double gamma = setup.weights.gamma_schedule.at(epoch);
    const double delta = setup.weights.delta_schedule.at(epoch);
    const bool want_torc = torc_possible && gamma > 0.0;
    const bool want_margin = margin_possible && delta > 0.0;

    double sum_com = 0, sum_comp = 0, sum_torc = 0, sum_margin = 0, sum_total = 0;
    std::size_t n_samples = 0;

    for (long step = 0; step < steps_per_epoch; ++step) {
      std::size_t lo = static_cast<std::size_t>(step) * cfg.batch_size;
      std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(hi - lo);

      for (std::size_t bi = lo; bi < hi; ++bi) {
        const Clip& primary = train_ds.clips[order[bi]];
        const Clip* input = &primary;
        Clip augmented;
        SoftLabel soft_obj = one_hot_label(primary.object, params.config.n_objects);

        if (setup.enable_vocamix && apply_rng.uniform() < setup.voca.p_aug && hi - lo > 1) {
          // Donor from the same batch, j != i, preferring a different object.
          std::vector<std::size_t> pool;
          for (std::size_t bj = lo; bj < hi; ++bj) {
            if (bj == bi) continue;
            if (train_ds.clips[order[bj]].object != primary.object) pool.push_back(order[bj]);
          }
          if (pool.empty()) {
            for (std::size_t bj = lo; bj < hi; ++bj)
              if (bj != bi) pool.push_back(order[bj]);
          }
          const Clip& donor = train_ds.clips[pool[donor_rng.uniform_index(pool.size())]];
          double lambda = sample_lambda(setup.voca.sampler(), lambda_rng);
          MotionMask mask = estimate_motion_region(primary, setup.voca.rho);
          auto [mixed, label] =
              vocamix(primary, donor, lambda, mask, setup.voca.full_frame, params.config.n_objects);
          augmented = std::move(mixed);
          soft_obj = std::move(label);
          input = &augmented;
        }

        Tensor pixels = clip_to_tensor(*input);
        ForwardOutputs fwd = forward(pixels, params);
        CompositionScores scores = compose_scores(fwd);
        std::size_t g = space.comp_index(primary.verb, primary.object);

        LossParts parts;
        parts.l_com = component_loss(fwd.verb_logits, fwd.obj_logits, primary.verb, soft_obj);
        parts.l_comp = composition_loss(scores.probs, g);
        check_finite(parts.l_com, "component loss", epoch);
        check_finite(parts.l_comp, "composition loss", epoch);
        if (want_torc) {
          Tensor f_rev = verb_encode(temporal_reverse(fwd.frame_feats), params);
          auto [shuffled_seq, perm] = temporal_shuffle(fwd.frame_feats, shuffle_rng);
          Tensor f_shuf = verb_encode(shuffled_seq, params);
          parts.l_torc =
              torc_loss(fwd.verb_feat, f_rev, f_shuf, params.verb_embed,
                        params.config.temperature, setup.weights.enable_cos,
                        setup.weights.enable_ent);
          check_finite(parts.l_torc, "temporal-order loss", epoch);
        }
        if (want_margin) {
          parts.l_margin = margin_loss(scores.probs, g, stats.freq_set, setup.weights.top_k,
                                       setup.weights.margin_m);
          check_finite(parts.l_margin, "margin loss", epoch);
        }

        Tensor total = total_loss(parts, setup.weights, epoch);
        check_finite(total, "total loss", epoch);
        backward(scale(total, inv_batch));

        sum_com += parts.l_com.item();
        sum_comp += parts.l_comp.item();
        if (parts.l_torc.defined()) sum_torc += parts.l_torc.item();
        if (parts.l_margin.defined()) sum_margin += parts.l_margin.item();
        sum_total += total.item();
        ++n_samples;
      }

      ++global_step;
      double lr = lr_at(global_step, warmup_steps, total_steps, cfg.base_lr);
      opt.step(tensors, cfg, lr);
      params.zero_grads();
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.gamma = gamma;
    rec.delta = delta;
    rec.mean_l_com = sum_com / static_cast<double>(n_samples);
    rec.mean_l_comp = sum_comp / static_cast<double>(n_samples);
    rec.mean_l_torc = sum_torc / static_cast<double>(n_samples);
    rec.mean_l_margin = sum_margin / static_cast<double>(n_samples);
    rec.mean_total = sum_total / static_cast<double>(n_samples);

    bool do_eval = !val_clips.empty() &&
                   ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.epochs);
    if (do_eval) {
      Rng eval_rng = root.substream("eval.shuffle", static_cast<std::uint64_t>(epoch));
      std::vector<EvalSample> samples = evaluate_clips(params, val_clips, space, eval_rng);
      InferenceConfig open_unbiased;
      rec.eval = build_report(samples, open_unbiased, space, stats);
      if (!cfg.checkpoint_dir.empty())
        save_checkpoint(cfg.checkpoint_dir + "/model_epoch" + std::to_string(epoch + 1) + ".ckpt",
                        params);
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

std::string RunLog::to_csv() const {
  std::ostringstream os;
  os << EvalReport::csv_header() << '\n';
  for (const auto& rec : epochs)
    if (rec.eval) os << rec.eval->csv_row(rec.epoch) << '\n';
  return os.str();
}

std::string RunLog::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : epochs) {
    nlohmann::json j;
    j["epoch"] = rec.epoch;
    j["mean_l_com"] = rec.mean_l_com;
    j["mean_l_comp"] = rec.mean_l_comp;
    j["mean_l_torc"] = rec.mean_l_torc;
    j["mean_l_margin"] = rec.mean_l_margin;
    j["mean_total"] = rec.mean_total;
    j["gamma"] = rec.gamma;
    j["delta"] = rec.delta;
    j["wall_seconds"] = rec.wall_seconds;
    if (rec.eval) j["eval"] = nlohmann::json::parse(rec.eval->to_json());
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace rcore
