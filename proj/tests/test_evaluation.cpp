#include <cmath>

#include "doctest.h"
#include "rcore/evaluation.hpp"
#include "rcore/presets.hpp"

using namespace rcore;

namespace {

CompositionSpace diag_space(int k) {
  std::vector<std::string> verbs, objects;
  for (int i = 0; i < k; ++i) {
    verbs.push_back("v" + std::to_string(i));
    objects.push_back("o" + std::to_string(i));
  }
  std::map<std::pair<int, int>, long> counts;
  for (int i = 0; i < k; ++i) counts[{i, i}] = 1;
  return CompositionSpace::from_counts(verbs, objects, counts);
}

EvalSample make_sample(std::vector<double> scores, int verb_gt, int obj_gt,
                       const CompositionSpace& space) {
  EvalSample s;
  s.comp_scores = std::move(scores);
  s.verb_logits.assign(space.n_verbs(), 0.0);
  s.obj_logits.assign(space.n_objects(), 0.0);
  s.verb_logits[verb_gt] = 1.0;
  s.obj_logits[obj_gt] = 1.0;
  s.verb_gt = verb_gt;
  s.obj_gt = obj_gt;
  s.comp_gt = space.comp_index(verb_gt, obj_gt);
  s.gt_seen = space.is_seen(verb_gt, obj_gt);
  s.verb_pred_orig = verb_gt;
  s.verb_pred_shuf = verb_gt;
  return s;
}

}  // namespace

TEST_CASE("zero bias open-world prediction is the plain argmax") {
  auto space = diag_space(3);
  std::vector<double> scores{0.1, 0.9, 0.2, 0.3, 0.1, 0.05, 0.4, 0.2, 0.3};
  std::vector<double> vl{0.2, 0.9, 0.1}, ol{0.8, 0.1, 0.1};
  InferenceConfig cfg;
  SamplePrediction p = predict(scores, vl, ol, cfg, space);
  CHECK(p.comp == 1);
  CHECK(p.verb == 1);
  CHECK(p.obj == 0);
}

TEST_CASE("extreme biases force all-unseen or all-seen predictions") {
  auto space = diag_space(3);
  std::vector<double> scores{0.9, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.7};
  std::vector<double> vl{1, 0, 0}, ol{1, 0, 0};
  InferenceConfig cfg;
  cfg.bias = 1e9;
  SamplePrediction up = predict(scores, vl, ol, cfg, space);
  CHECK_FALSE(space.is_seen_flat(up.comp));
  cfg.bias = -1e9;
  SamplePrediction down = predict(scores, vl, ol, cfg, space);
  CHECK(space.is_seen_flat(down.comp));
}

TEST_CASE("adding a constant to every score never changes the prediction") {
  auto space = diag_space(4);
  Rng rng(81);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> scores(16);
    for (auto& s : scores) s = rng.uniform();
    std::vector<double> vl(4, 0.0), ol(4, 0.0);
    InferenceConfig cfg;
    cfg.bias = rng.uniform(-2, 2);
    SamplePrediction base = predict(scores, vl, ol, cfg, space);
    double c = rng.uniform(-100, 100);
    std::vector<double> shifted = scores;
    for (auto& s : shifted) s += c;
    SamplePrediction moved = predict(shifted, vl, ol, cfg, space);
    CHECK(base.comp == moved.comp);
  }
}

TEST_CASE("closed-world predictions stay inside the candidate set and dominate open-world accuracy") {
  auto space = diag_space(4);
  Rng rng(82);
  InferenceConfig open_cfg;
  InferenceConfig closed_cfg;
  closed_cfg.mode = InferenceConfig::Mode::closed_world;
  closed_cfg.candidate_set = {0, 5, 10, 15, 3};

  long open_hits = 0, closed_hits = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    int gt = static_cast<int>(rng.uniform_index(4));
    std::vector<double> scores(16);
    for (auto& s : scores) s = rng.uniform();
    scores[space.comp_index(gt, gt)] += 0.3;
    std::vector<double> vl(4, 0.0), ol(4, 0.0);
    SamplePrediction open_p = predict(scores, vl, ol, open_cfg, space);
    SamplePrediction closed_p = predict(scores, vl, ol, closed_cfg, space);
    bool in_set = false;
    for (std::size_t c : closed_cfg.candidate_set) in_set = in_set || closed_p.comp == c;
    CHECK(in_set);
    open_hits += open_p.comp == space.comp_index(gt, gt);
    closed_hits += closed_p.comp == space.comp_index(gt, gt);
  }
  CHECK(closed_hits >= open_hits);
  CHECK_THROWS_AS(predict(std::vector<double>(16, 0.0), {0, 0, 0, 0}, {0, 0, 0, 0},
                          InferenceConfig{InferenceConfig::Mode::closed_world, 0.0, {}}, space),
                  std::invalid_argument);
}

TEST_CASE("a balanced model calibrates to zero bias") {
  auto space = diag_space(2);  // seen: (0,0),(1,1); unseen elsewhere
  std::vector<EvalSample> samples;
  // Seen sample: correct at bias<=0, flips wrong for bias above 0.5.
  samples.push_back(make_sample({1.0, 0.6, 0.2, 0.1}, 0, 0, space));
  // Unseen sample: correct for bias >= -0.5, wrong below.
  samples.push_back(make_sample({0.6, 1.0, 0.2, 0.1}, 0, 1, space));
  std::vector<double> sweep;
  for (double b = -2.0; b <= 2.001; b += 0.25) sweep.push_back(b);
  CalibrationResult res = calibrate_bias(samples, space, sweep);
  CHECK(res.chosen_bias == doctest::Approx(0.0));
  CHECK(res.points.size() == sweep.size());
}

TEST_CASE("the calibration curve feeds the auc computation directly") {
  auto space = diag_space(2);
  std::vector<EvalSample> samples;
  samples.push_back(make_sample({1.0, 0.6, 0.2, 0.1}, 0, 0, space));
  samples.push_back(make_sample({0.6, 1.0, 0.2, 0.1}, 0, 1, space));
  samples.push_back(make_sample({0.8, 0.2, 0.3, 0.9}, 1, 1, space));
  CalibrationResult res = calibrate_bias(samples, space, default_bias_sweep());
  auto curve = res.curve();
  REQUIRE(curve.size() == res.points.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].first == res.points[i].seen_acc);
    CHECK(curve[i].second == res.points[i].unseen_acc);
  }
  CHECK_NOTHROW(auc_seen_unseen(curve));
}

TEST_CASE("calibration requires both seen and unseen samples") {
  auto space = diag_space(2);
  std::vector<EvalSample> only_seen{make_sample({1, 0, 0, 0}, 0, 0, space)};
  CHECK_THROWS_AS(calibrate_bias(only_seen, space, default_bias_sweep()),
                  std::invalid_argument);
}

TEST_CASE("a permutation-invariant verb encoder has exactly zero shuffled gap") {
  SynthConfig synth = fig2b_synth_config(3);
  synth.noise_std = 0.02;
  Benchmark bench = make_benchmark(synth, 16, 3, 0.07);
  ModelParams params = ModelParams::init(bench.model_cfg, 1);
  // Only the center tap of each temporal kernel is nonzero, so the verb
  // encoder reduces to a per-frame map followed by the temporal mean.
  const std::size_t d = 16, w = 3;
  for (auto* conv : {&params.verb_conv1_w, &params.verb_conv2_w}) {
    for (std::size_t o = 0; o < d; ++o)
      for (std::size_t k = 0; k < w; ++k)
        for (std::size_t i = 0; i < d; ++i)
          if (k != 1) conv->values()[(o * w + k) * d + i] = 0.0;
  }
  Rng rng(4);
  std::vector<Clip> subset(bench.val.begin(), bench.val.begin() + 40);
  auto samples = evaluate_clips(params, subset, bench.space, rng);
  ShuffledProbeResult probe = shuffled_probe(samples);
  CHECK(probe.gap == 0.0);
  CHECK(probe.orig_verb_acc == probe.shuffled_verb_acc);
}

TEST_CASE("an untrained model shows near-zero shuffled gap and near-one reversed cosine on static clips") {
  SynthConfig synth = fig2b_synth_config(5);
  Benchmark bench = make_benchmark(synth, 16, 3, 0.07);
  ModelParams params = ModelParams::init(bench.model_cfg, 7);

  // Constant-frame clips: the reversed sequence is identical, cosine is 1.
  Clip frozen = bench.val.front();
  for (int t = 1; t < frozen.t; ++t)
    for (int c = 0; c < frozen.c; ++c)
      for (int y = 0; y < frozen.h; ++y)
        for (int x = 0; x < frozen.w; ++x)
          frozen.pixels[frozen.pixel_index(t, c, y, x)] = frozen.at(0, c, y, x);
  Rng rng(8);
  auto frozen_samples = evaluate_clips(params, {frozen}, bench.space, rng);
  CHECK(frozen_samples[0].cos_rev == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<Clip> subset(bench.val.begin(), bench.val.begin() + 60);
  auto samples = evaluate_clips(params, subset, bench.space, rng);
  ShuffledProbeResult probe = shuffled_probe(samples);
  CHECK(std::abs(probe.gap) <= 10.0);
}

TEST_CASE("probes serialize to json") {
  ShuffledProbeResult r{61.0, 40.0, 21.0};
  std::string j = probes_to_json(r, -0.73);
  CHECK(j.find("\"gap\": 21.0") != std::string::npos);
  CHECK(j.find("-0.73") != std::string::npos);
}
