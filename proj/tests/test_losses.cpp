#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rcore/losses.hpp"
#include "rcore/rng.hpp"

using namespace rcore;

namespace {

Tensor random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0,
                  bool requires_grad = false) {
  std::vector<double> vals(n);
  for (auto& v : vals) v = rng.uniform(lo, hi);
  return Tensor({n}, std::move(vals), requires_grad);
}

Tensor random_probs(std::size_t n, Rng& rng) {
  std::vector<double> vals(n);
  double sum = 0;
  for (auto& v : vals) {
    v = 0.01 + rng.uniform();
    sum += v;
  }
  for (auto& v : vals) v /= sum;
  return Tensor({n}, std::move(vals), false);
}

}  // namespace

TEST_CASE("component loss on uniform logits equals ln of the class count") {
  Tensor verb_logits({4}, 0.0);
  Tensor obj_logits({3}, 0.0);
  SoftLabel soft{0.8, 0.2, 0.0};
  Tensor l = component_loss(verb_logits, obj_logits, 1, soft);
  CHECK(l.item() == doctest::Approx(std::log(4.0) + std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("verb loss vanishes as the winning margin grows") {
  Tensor obj_logits({3}, 0.0);
  SoftLabel soft{1.0, 0.0, 0.0};
  double prev = 1e9;
  for (double margin : {2.0, 5.0, 10.0, 20.0}) {
    Tensor verb_logits({4}, std::vector<double>{margin, 0, 0, 0});
    double l_v = component_loss(verb_logits, obj_logits, 0, soft).item() - std::log(3.0);
    CHECK(l_v < prev);
    prev = l_v;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("composition loss is minus the log of the indexed entry") {
  Rng rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    Tensor y = random_probs(16, rng);
    std::size_t g = rng.uniform_index(16);
    CHECK(composition_loss(y, g).item() == doctest::Approx(-std::log(y.values()[g])));
  }
  Tensor uniform({16}, std::vector<double>(16, 1.0 / 16));
  CHECK(composition_loss(uniform, 3).item() == doctest::Approx(std::log(16.0)));
  Tensor onehot({4}, std::vector<double>{0, 1, 0, 0});
  CHECK(composition_loss(onehot, 1).item() == doctest::Approx(0.0));
  CHECK_THROWS_AS(composition_loss(uniform, 16), std::out_of_range);
}

TEST_CASE("torc_cos hits its extremes and rejects dead encoders") {
  Tensor f({4}, std::vector<double>{0.4, -0.2, 0.8, 0.1});
  CHECK(torc_cos(f, f).item() == doctest::Approx(1.0));
  CHECK(torc_cos(f, neg(f)).item() == doctest::Approx(-1.0));
  Tensor dead({4}, 0.0);
  CHECK_THROWS_AS(torc_cos(f, dead), std::domain_error);
}

TEST_CASE("torc_ent spans [-ln N, 0] with the uniform minimum at 161 verbs") {
  Rng rng(62);
  const std::size_t n = 161, d = 8;
  // Mutually orthogonal-ish embeddings are unnecessary; a constant feature
  // with equal similarity to every class gives the uniform case.
  std::vector<double> evals(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) evals[i * d + i % d] = 1.0;
  Tensor embed({n, d}, evals, false);
  Tensor f({d}, std::vector<double>(d, 1.0), false);
  double val = torc_ent(f, embed, 0.07).item();
  CHECK(val == doctest::Approx(-std::log(161.0)).epsilon(1e-9));
  CHECK(val == doctest::Approx(-5.0814).epsilon(1e-3));

  // A near-one-hot prediction drives the negative entropy toward 0.
  Tensor spiky({d}, std::vector<double>(d, 0.0), false);
  spiky.values()[0] = 1.0;
  double spiky_val = torc_ent(spiky, embed, 0.001).item();
  CHECK(spiky_val > -0.2);
  CHECK(spiky_val <= 0.0);
}

TEST_CASE("torc_loss composes its enabled terms") {
  Rng rng(63);
  Tensor embed({5, 4},
               std::vector<double>{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 0, 0});
  Tensor f = random_vec(4, rng, 0.2, 1.0);
  Tensor f_rev = random_vec(4, rng, 0.2, 1.0);
  Tensor f_shuf = random_vec(4, rng, 0.2, 1.0);

  double cos_only = torc_loss(f, f_rev, f_shuf, embed, 0.07, true, false).item();
  CHECK(cos_only == doctest::Approx(torc_cos(f, f_rev).item()));
  double ent_only = torc_loss(f, f_rev, f_shuf, embed, 0.07, false, true).item();
  CHECK(ent_only == doctest::Approx(torc_ent(f_shuf, embed, 0.07).item()));
  double both = torc_loss(f, f_rev, f_shuf, embed, 0.07, true, true).item();
  CHECK(both == doctest::Approx(cos_only + ent_only));
  CHECK(torc_loss(f, f_rev, f_shuf, embed, 0.07, false, false).item() == 0.0);
}

TEST_CASE("torc degenerate point: identical features and uniform predictions") {
  const std::size_t n = 6, d = 4;
  std::vector<double> evals(n * d, 0.5);  // equal similarity to every class
  Tensor embed({n, d}, evals, false);
  Tensor f({d}, std::vector<double>(d, 0.3), false);
  double val = torc_loss(f, f, f, embed, 0.07, true, true).item();
  CHECK(val == doctest::Approx(1.0 - std::log(static_cast<double>(n))).epsilon(1e-9));
}

TEST_CASE("margin loss matches the exhaustive oracle") {
  Rng rng(64);
  SUBCASE("empty frequent set") {
    Tensor y = random_probs(16, rng);
    CHECK(margin_loss(y, 2, {}, 3, 1.0).item() == 0.0);
  }
  SUBCASE("hinge boundary contributes zero") {
    // Competitor exactly m below the truth in log space.
    double m = 1.0;
    std::vector<double> vals{0.6, 0.6 * std::exp(-m), 0.05, 0.02};
    double sum = vals[0] + vals[1] + vals[2] + vals[3];
    for (auto& v : vals) v /= sum;
    // Renormalizing preserves the log-ratio.
    Tensor y({4}, vals);
    CHECK(margin_loss(y, 0, {1}, 3, m).item() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("4x4 hand case and random agreement") {
    Tensor y({16}, std::vector<double>{0.30, 0.20, 0.15, 0.10, 0.08, 0.05, 0.04, 0.03, 0.02,
                                       0.01, 0.005, 0.005, 0.004, 0.003, 0.002, 0.001});
    std::set<std::size_t> freq{1, 4};
    double got = margin_loss(y, 5, freq, 3, 1.0).item();
    double want = oracle::brute_margin_loss(y.values(), 5, freq, 3, 1.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    for (int rep = 0; rep < 30; ++rep) {
      Tensor yr = random_probs(20, rng);
      std::size_t g = rng.uniform_index(20);
      std::set<std::size_t> fs;
      for (std::size_t i = 0; i < 20; ++i)
        if (rng.uniform() < 0.3) fs.insert(i);
      int k = 1 + static_cast<int>(rng.uniform_index(8));
      CHECK(margin_loss(yr, g, fs, k, 1.0).item() ==
            doctest::Approx(oracle::brute_margin_loss(yr.values(), g, fs, k, 1.0)));
    }
  }
}

TEST_CASE("margin loss depends only on log-ratios") {
  Rng rng(65);
  Tensor y = random_probs(12, rng);
  std::set<std::size_t> freq{0, 3, 7};
  double base = margin_loss(y, 5, freq, 4, 1.0).item();
  // Scaling all probabilities by a constant shifts every log equally.
  std::vector<double> scaled = y.values();
  for (auto& v : scaled) v *= 3.7;
  double same = margin_loss(Tensor({12}, scaled), 5, freq, 4, 1.0).item();
  CHECK(base == doctest::Approx(same).epsilon(1e-12));
}

TEST_CASE("schedules ramp linearly inside their windows") {
  LossWeights w;
  CHECK(w.gamma_schedule.at(0.0) == 0.0);
  CHECK(w.gamma_schedule.at(5.0) == 0.0);
  CHECK(w.gamma_schedule.at(7.5) == doctest::Approx(0.5));
  CHECK(w.gamma_schedule.at(10.0) == doctest::Approx(1.0));
  CHECK(w.gamma_schedule.at(30.0) == doctest::Approx(1.0));
  CHECK(w.delta_schedule.at(30.0) == doctest::Approx(0.8));
  CHECK(w.delta_schedule.at(14.0) == 0.0);
  double prev = -1;
  for (double e = 0; e <= 25; e += 0.25) {
    double g = w.gamma_schedule.at(e);
    CHECK(g >= prev);
    prev = g;
  }
}

TEST_CASE("total loss applies the scheduled weights") {
  LossWeights w;
  LossParts parts;
  parts.l_com = Tensor::scalar(2.0);
  parts.l_comp = Tensor::scalar(3.0);
  parts.l_torc = Tensor::scalar(0.5);
  parts.l_margin = Tensor::scalar(1.5);
  CHECK(total_loss(parts, w, 0.0).item() == doctest::Approx(0.2 * 2.0 + 1.0 * 3.0));
  CHECK(total_loss(parts, w, 30.0).item() ==
        doctest::Approx(0.2 * 2.0 + 3.0 + 1.0 * 0.5 + 0.8 * 1.5));
  CHECK(total_loss(parts, w, 7.5).item() == doctest::Approx(0.2 * 2.0 + 3.0 + 0.5 * 0.5));
  CHECK_THROWS_AS(total_loss(parts, w, -1.0), std::invalid_argument);
}

TEST_CASE("losses respect their analytic lower bounds") {
  Rng rng(66);
  Tensor embed({7, 5}, std::vector<double>(35, 0.0));
  for (int i = 0; i < 7; ++i) embed.values()[i * 5 + i % 5] = 1.0;
  for (int rep = 0; rep < 50; ++rep) {
    Tensor vl = random_vec(4, rng, -3, 3);
    Tensor ol = random_vec(6, rng, -3, 3);
    SoftLabel soft(6, 0.0);
    soft[rng.uniform_index(6)] = 0.7;
    soft[rng.uniform_index(6)] += 0.3;
    CHECK(component_loss(vl, ol, static_cast<int>(rng.uniform_index(4)), soft).item() >= 0.0);

    Tensor y = random_probs(12, rng);
    CHECK(composition_loss(y, rng.uniform_index(12)).item() >= 0.0);

    Tensor a = random_vec(5, rng, 0.1, 1.0);
    Tensor b = random_vec(5, rng, 0.1, 1.0);
    CHECK(torc_cos(a, b).item() >= -1.0 - 1e-12);
    CHECK(torc_ent(a, embed, 0.07).item() >= -std::log(7.0) - 1e-9);
    CHECK(torc_ent(a, embed, 0.07).item() <= 1e-12);

    std::set<std::size_t> fs{1, 2, 3};
    CHECK(margin_loss(y, 0, fs, 5, 1.0).item() >= 0.0);
  }
}

TEST_CASE("every loss passes gradient checks on random configurations") {
  Rng rng(67);
  Tensor embed({6, 5}, std::vector<double>(30));
  for (auto& v : embed.values()) v = rng.uniform(-1, 1);

  auto reverse_vec = [](const Tensor& t) {
    return reshape(reverse_time(reshape(t, {t.size(), 1})), {t.size()});
  };

  for (int rep = 0; rep < 20; ++rep) {
    Tensor x = random_vec(5, rng, 0.15, 1.0);
    SoftLabel soft{0.5, 0.3, 0.2, 0.0, 0.0};

    auto f_com = [&](const Tensor& t) {
      Tensor obj_logits = scale(t, 2.0);
      return component_loss(t, obj_logits, 2, soft);
    };
    CHECK(grad_check(f_com, x, 1e-5, 1e-4).ok);

    auto f_comp = [&](const Tensor& t) { return composition_loss(softmax(t), 3); };
    CHECK(grad_check(f_comp, x, 1e-5, 1e-4).ok);

    auto f_cos = [&](const Tensor& t) { return torc_cos(t, reverse_vec(t)); };
    CHECK(grad_check(f_cos, x, 1e-5, 1e-4).ok);

    auto f_ent = [&](const Tensor& t) { return torc_ent(t, embed, 0.07); };
    CHECK(grad_check(f_ent, x, 1e-5, 1e-4).ok);

    auto f_margin = [&](const Tensor& t) {
      return margin_loss(softmax(t), 0, {1, 2}, 3, 0.5);
    };
    CHECK(grad_check(f_margin, x, 1e-5, 1e-4).ok);

    auto f_total = [&](const Tensor& t) {
      LossParts parts;
      parts.l_com = component_loss(t, t, 1, soft);
      parts.l_comp = composition_loss(softmax(t), 0);
      parts.l_torc = torc_ent(t, embed, 0.07);
      parts.l_margin = margin_loss(softmax(t), 0, {1, 2}, 3, 0.5);
      LossWeights w;
      return total_loss(parts, w, 18.0);
    };
    CHECK(grad_check(f_total, x, 1e-5, 1e-4).ok);
  }
}
