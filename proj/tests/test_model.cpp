#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rcore/model.hpp"

using namespace rcore;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.frames = 6;
  cfg.channels = 3;
  cfg.height = 8;
  cfg.width = 8;
  cfg.feature_dim = 16;
  cfg.n_verbs = 4;
  cfg.n_objects = 5;
  return cfg;
}

Tensor random_frames(const ModelConfig& cfg, Rng& rng) {
  std::vector<double> vals(static_cast<std::size_t>(cfg.frames) * cfg.frame_input_dim());
  for (auto& v : vals) v = rng.uniform();
  return Tensor({static_cast<std::size_t>(cfg.frames),
                 static_cast<std::size_t>(cfg.frame_input_dim())},
                std::move(vals), false);
}

}  // namespace

TEST_CASE("forward on a zero clip stays finite with the declared shapes") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 1);
  Tensor zeros({static_cast<std::size_t>(cfg.frames),
                static_cast<std::size_t>(cfg.frame_input_dim())},
               0.0);
  ForwardOutputs out = forward(zeros, params);
  CHECK(out.frame_feats.shape() == std::vector<std::size_t>{6, 16});
  CHECK(out.verb_seq.shape() == std::vector<std::size_t>{6, 16});
  CHECK(out.verb_feat.shape() == std::vector<std::size_t>{16});
  CHECK(out.obj_feat.shape() == std::vector<std::size_t>{16});
  CHECK(out.verb_logits.shape() == std::vector<std::size_t>{4});
  CHECK(out.obj_logits.shape() == std::vector<std::size_t>{5});
  CHECK(out.cond_vgo.shape() == std::vector<std::size_t>{4, 5});
  CHECK(out.cond_ogv.shape() == std::vector<std::size_t>{4, 5});
  for (const Tensor* t : {&out.frame_feats, &out.verb_feat, &out.obj_feat, &out.verb_logits,
                          &out.obj_logits, &out.cond_vgo, &out.cond_ogv})
    CHECK(t->all_finite());
}

TEST_CASE("forward is deterministic across repeated calls") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 2);
  Rng rng(3);
  Tensor x = random_frames(cfg, rng);
  ForwardOutputs a = forward(x, params);
  ForwardOutputs b = forward(x, params);
  CHECK(a.verb_logits.values() == b.verb_logits.values());
  CHECK(a.cond_vgo.values() == b.cond_vgo.values());
}

TEST_CASE("forward rejects mismatched clip geometry") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 2);
  Tensor bad({6, 100}, 0.0);
  CHECK_THROWS_AS(forward(bad, params), std::invalid_argument);
}

TEST_CASE("zeroed conditional gates collapse cond_vgo columns") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 4);
  for (auto& v : params.gate_v_w.values()) v = 0.0;
  for (auto& v : params.gate_v_b.values()) v = 0.0;
  Rng rng(5);
  Tensor x = random_frames(cfg, rng);
  ForwardOutputs out = forward(x, params);
  // gate == 0.5 everywhere; cosine is scale-invariant, so every object column
  // carries the same verb scores.
  for (std::size_t v = 0; v < 4; ++v)
    for (std::size_t o = 1; o < 5; ++o)
      CHECK(out.cond_vgo.values()[v * 5 + o] ==
            doctest::Approx(out.cond_vgo.values()[v * 5]).epsilon(1e-12));
}

TEST_CASE("conditional softmax columns are normalized") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 6);
  Rng rng(7);
  Tensor x = random_frames(cfg, rng);
  ForwardOutputs out = forward(x, params);
  Tensor by_obj = softmax(transpose(out.cond_vgo));  // rows: objects
  for (std::size_t o = 0; o < 5; ++o) {
    double sum = 0;
    for (std::size_t v = 0; v < 4; ++v) sum += by_obj.values()[o * 4 + v];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("uniform logits and conditionals give a uniform composition score") {
  ForwardOutputs out;
  out.verb_logits = Tensor({3}, 0.0);
  out.obj_logits = Tensor({3}, 0.0);
  out.cond_vgo = Tensor({3, 3}, 0.0);
  out.cond_ogv = Tensor({3, 3}, 0.0);
  CompositionScores s = compose_scores(out);
  double sum = 0;
  for (double p : s.probs.values()) {
    CHECK(p == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("composition scores match a direct evaluation on a hand-set 3x3 case") {
  ForwardOutputs out;
  out.verb_logits = Tensor({3}, std::vector<double>{0.9, -0.3, 0.1});
  out.obj_logits = Tensor({3}, std::vector<double>{-0.2, 0.7, 0.4});
  out.cond_vgo =
      Tensor({3, 3}, std::vector<double>{0.5, -0.1, 0.2, 0.3, 0.8, -0.6, -0.4, 0.1, 0.9});
  out.cond_ogv =
      Tensor({3, 3}, std::vector<double>{0.2, 0.1, -0.5, 0.7, -0.2, 0.3, 0.0, 0.4, -0.1});
  CompositionScores s = compose_scores(out);

  // Direct arithmetic on plain doubles.
  auto softmax3 = [](double a, double b, double c) {
    double m = std::max({a, b, c});
    double ea = std::exp(a - m), eb = std::exp(b - m), ec = std::exp(c - m);
    double z = ea + eb + ec;
    return std::array<double, 3>{ea / z, eb / z, ec / z};
  };
  auto pv = softmax3(0.9, -0.3, 0.1);
  auto po = softmax3(-0.2, 0.7, 0.4);
  const auto& vgo = out.cond_vgo.values();
  const auto& ogv = out.cond_ogv.values();
  std::array<double, 9> raw{};
  for (int v = 0; v < 3; ++v) {
    auto prow = softmax3(ogv[v * 3], ogv[v * 3 + 1], ogv[v * 3 + 2]);
    for (int o = 0; o < 3; ++o) {
      auto pcol = softmax3(vgo[o], vgo[3 + o], vgo[6 + o]);
      raw[v * 3 + o] = po[o] * pcol[v] + pv[v] * prow[o];
    }
  }
  double m = *std::max_element(raw.begin(), raw.end());
  double z = 0;
  for (double r : raw) z += std::exp(r - m);
  for (int i = 0; i < 9; ++i) {
    CHECK(s.raw.values()[i] == doctest::Approx(raw[i]).epsilon(1e-12));
    CHECK(s.probs.values()[i] == doctest::Approx(std::exp(raw[i] - m) / z).epsilon(1e-12));
  }
}

TEST_CASE("temporal reverse and shuffle behave as declared") {
  Tensor seq({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor rev = temporal_reverse(seq);
  CHECK(rev.values() == std::vector<double>{5, 6, 3, 4, 1, 2});
  Tensor back = temporal_reverse(rev);
  CHECK(back.values() == seq.values());

  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    auto [shuffled, perm] = temporal_shuffle(seq, rng);
    bool identity = true;
    for (std::size_t i = 0; i < perm.size(); ++i) identity = identity && perm[i] == i;
    CHECK_FALSE(identity);
  }
  Tensor two({2, 1}, std::vector<double>{1, 2});
  for (int rep = 0; rep < 50; ++rep) {
    auto [shuffled, perm] = temporal_shuffle(two, rng);
    CHECK(perm == std::vector<std::size_t>{1, 0});
  }
  Tensor one({1, 2}, std::vector<double>{1, 2});
  CHECK_THROWS_AS(temporal_shuffle(one, rng), std::invalid_argument);
  CHECK_THROWS_AS(temporal_reverse(one), std::invalid_argument);
}

TEST_CASE("constant frame sequences are immune to perturbation") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 9);
  std::vector<double> vals;
  Rng rng(10);
  std::vector<double> row(cfg.frame_input_dim());
  for (auto& v : row) v = rng.uniform();
  for (int t = 0; t < cfg.frames; ++t) vals.insert(vals.end(), row.begin(), row.end());
  Tensor frames = encode_frames(
      Tensor({static_cast<std::size_t>(cfg.frames),
              static_cast<std::size_t>(cfg.frame_input_dim())},
             vals, false),
      params);
  PerturbedVerbFeatures f = perturbed_verb_features(frames, params, rng);
  CHECK(f.original.shape() == std::vector<std::size_t>{16});
  for (std::size_t i = 0; i < f.original.size(); ++i) {
    CHECK(f.original.values()[i] == doctest::Approx(f.reversed.values()[i]).epsilon(1e-12));
    CHECK(f.original.values()[i] == doctest::Approx(f.shuffled.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("the verb encoder is permutation sensitive at random init") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 11);
  Rng rng(12);
  Tensor frames = encode_frames(random_frames(cfg, rng), params);
  PerturbedVerbFeatures f = perturbed_verb_features(frames, params, rng);
  double diff = 0;
  for (std::size_t i = 0; i < f.original.size(); ++i)
    diff += std::abs(f.original.values()[i] - f.shuffled.values()[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("the object path is exactly permutation invariant") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 13);
  Rng rng(14);
  Tensor frames = encode_frames(random_frames(cfg, rng), params);
  Tensor base = object_encode(frames, params);
  for (int rep = 0; rep < 10; ++rep) {
    Tensor permuted = permute_time(frames, rng.permutation(frames.rows()));
    Tensor other = object_encode(permuted, params);
    CHECK(other.values() == base.values());  // bitwise
  }
}

TEST_CASE("checkpoints round-trip parameters exactly") {
  ModelConfig cfg = tiny_config();
  ModelParams params = ModelParams::init(cfg, 15);
  auto path = std::filesystem::temp_directory_path() / "rcore_test_model.ckpt";
  save_checkpoint(path.string(), params);
  ModelParams loaded = load_checkpoint(path.string());
  CHECK(loaded.config.feature_dim == cfg.feature_dim);
  CHECK(loaded.config.temperature == cfg.temperature);
  auto a = params.named_parameters();
  auto b = loaded.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second->values() == b[i].second->values());
  }
  std::filesystem::remove(path);
}
