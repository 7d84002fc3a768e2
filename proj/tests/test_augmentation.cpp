#include <cmath>

#include "doctest.h"
#include "rcore/augmentation.hpp"
#include "rcore/data.hpp"
#include "rcore/rng.hpp"

using namespace rcore;

namespace {

Clip static_clip(int t, int h, int w, double value) {
  Clip c;
  c.t = t;
  c.c = 3;
  c.h = h;
  c.w = w;
  c.verb = 0;
  c.object = 0;
  c.pixels.assign(static_cast<std::size_t>(t) * 3 * h * w, value);
  return c;
}

}  // namespace

TEST_CASE("a static clip degenerates to a full-frame mask") {
  Clip clip = static_clip(6, 16, 16, 0.4);
  MotionMask m = estimate_motion_region(clip, 0.25);
  CHECK(m.degenerate);
  CHECK(m.coverage == doctest::Approx(1.0));
  for (auto v : m.mask) CHECK(v == 1);
}

TEST_CASE("the mask recovers a noiseless moving square exactly") {
  SynthConfig cfg;
  cfg.n_verbs = 4;
  cfg.n_objects = 1;  // square shape
  cfg.noise_std = 0.0;
  cfg.seed = 50;
  std::vector<std::uint8_t> occupancy;
  Clip clip = generate_clip(2, 0, cfg, 0, &occupancy);

  std::size_t truth = 0;
  for (auto v : occupancy) truth += v;
  REQUIRE(truth > 0);
  double rho = static_cast<double>(truth) / occupancy.size();
  MotionMask m = estimate_motion_region(clip, rho);

  std::size_t inter = 0, mask_n = 0;
  for (std::size_t p = 0; p < occupancy.size(); ++p) {
    mask_n += m.mask[p];
    inter += m.mask[p] && occupancy[p];
  }
  CHECK(m.coverage == doctest::Approx(rho).epsilon(0.02));
  // Noise-free scores vanish outside the sweep, so mask == occupancy region.
  CHECK(static_cast<double>(inter) / mask_n >= 0.95);
  CHECK(static_cast<double>(inter) / truth >= 0.95);
}

TEST_CASE("the mask keeps precision 0.9 against ground truth under noise") {
  SynthConfig cfg;
  cfg.n_verbs = 4;
  cfg.n_objects = 1;
  cfg.noise_std = 0.02;
  cfg.seed = 51;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::uint8_t> occupancy;
    Clip clip = generate_clip(rep % 4, 0, cfg, static_cast<std::uint64_t>(rep), &occupancy);
    std::size_t truth = 0;
    for (auto v : occupancy) truth += v;
    double rho = 0.8 * static_cast<double>(truth) / occupancy.size();
    MotionMask m = estimate_motion_region(clip, rho);
    std::size_t inter = 0, mask_n = 0;
    for (std::size_t p = 0; p < occupancy.size(); ++p) {
      mask_n += m.mask[p];
      inter += m.mask[p] && occupancy[p];
    }
    CHECK(static_cast<double>(inter) / mask_n >= 0.9);
  }
}

TEST_CASE("the motion mask is invariant to frame order") {
  SynthConfig cfg;
  cfg.seed = 52;
  cfg.noise_std = 0.03;
  Clip clip = generate_clip(1, 2, cfg, 0);
  Clip reversed = clip;
  for (int t = 0; t < clip.t; ++t)
    for (int c = 0; c < clip.c; ++c)
      for (int y = 0; y < clip.h; ++y)
        for (int x = 0; x < clip.w; ++x)
          reversed.pixels[reversed.pixel_index(clip.t - 1 - t, c, y, x)] =
              clip.at(t, c, y, x);
  MotionMask a = estimate_motion_region(clip, 0.25);
  MotionMask b = estimate_motion_region(reversed, 0.25);
  CHECK(a.mask == b.mask);
}

TEST_CASE("vocamix at lambda 0 is the identity with a one-hot label") {
  SynthConfig cfg;
  cfg.seed = 53;
  Clip primary = generate_clip(0, 1, cfg, 0);
  Clip donor = generate_clip(1, 2, cfg, 1);
  MotionMask mask = estimate_motion_region(primary, 0.25);
  auto [mixed, label] = vocamix(primary, donor, 0.0, mask, false, 4);
  CHECK(mixed.pixels == primary.pixels);
  CHECK(label[primary.object] == doctest::Approx(1.0));
  double sum = 0;
  for (double v : label) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("vocamix at lambda 1 full-frame copies the donor middle frame everywhere") {
  SynthConfig cfg;
  cfg.seed = 54;
  cfg.noise_std = 0.0;
  Clip primary = generate_clip(0, 1, cfg, 0);
  Clip donor = generate_clip(1, 2, cfg, 1);
  MotionMask mask = estimate_motion_region(primary, 0.25);
  auto [mixed, label] = vocamix(primary, donor, 1.0, mask, true, 4);
  int mid = donor.t / 2;
  for (int t = 0; t < mixed.t; ++t)
    for (int c = 0; c < mixed.c; ++c)
      for (int y = 0; y < mixed.h; ++y)
        for (int x = 0; x < mixed.w; ++x)
          CHECK(mixed.at(t, c, y, x) == doctest::Approx(donor.at(mid, c, y, x)));
  CHECK(label[donor.object] == doctest::Approx(1.0));
}

TEST_CASE("vocamix at lambda 0.2 blends pixels and softens the label to 0.8/0.2") {
  SynthConfig cfg;
  cfg.seed = 55;
  Clip primary = generate_clip(0, 1, cfg, 0);
  Clip donor = generate_clip(1, 2, cfg, 1);
  MotionMask mask = estimate_motion_region(primary, 0.3);
  auto [mixed, label] = vocamix(primary, donor, 0.2, mask, false, 4);

  CHECK(label[primary.object] == doctest::Approx(0.8));
  CHECK(label[donor.object] == doctest::Approx(0.2));
  int nonzero = 0;
  for (double v : label) nonzero += v > 0;
  CHECK(nonzero == 2);

  Rng rng(56);
  int mid = donor.t / 2;
  for (int i = 0; i < 5; ++i) {
    int t = static_cast<int>(rng.uniform_index(primary.t));
    int y = static_cast<int>(rng.uniform_index(primary.h));
    int x = static_cast<int>(rng.uniform_index(primary.w));
    for (int c = 0; c < 3; ++c) {
      double want = mask.at(y, x)
                        ? 0.8 * primary.at(t, c, y, x) + 0.2 * donor.at(mid, c, y, x)
                        : primary.at(t, c, y, x);
      CHECK(mixed.at(t, c, y, x) == doctest::Approx(want));
    }
  }
}

TEST_CASE("vocamix preserves frame differences outside and scales them inside the mask") {
  SynthConfig cfg;
  cfg.seed = 57;
  Clip primary = generate_clip(2, 3, cfg, 0);
  Clip donor = generate_clip(3, 1, cfg, 1);
  MotionMask mask = estimate_motion_region(primary, 0.25);
  const double lambda = 0.35;
  auto [mixed, label] = vocamix(primary, donor, lambda, mask, false, 4);
  for (int k : {0, 2}) {
    int k2 = k + 1;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < primary.h; ++y)
        for (int x = 0; x < primary.w; ++x) {
          double d_out = mixed.at(k, c, y, x) - mixed.at(k2, c, y, x);
          double d_in = primary.at(k, c, y, x) - primary.at(k2, c, y, x);
          if (mask.at(y, x))
            CHECK(d_out == doctest::Approx((1.0 - lambda) * d_in).epsilon(1e-12));
          else
            CHECK(d_out == doctest::Approx(d_in).epsilon(1e-12));
        }
  }
}

TEST_CASE("vocamix with itself at lambda 0 is the exact identity") {
  SynthConfig cfg;
  cfg.seed = 58;
  Clip primary = generate_clip(0, 0, cfg, 0);
  MotionMask mask = estimate_motion_region(primary, 0.25);
  auto [mixed, label] = vocamix(primary, primary, 0.0, mask, false, 4);
  CHECK(mixed.pixels == primary.pixels);
}

TEST_CASE("vocamix rejects geometry mismatches") {
  Clip a = static_clip(4, 8, 8, 0.1);
  Clip b = static_clip(4, 16, 16, 0.1);
  MotionMask mask = estimate_motion_region(a, 0.25);
  CHECK_THROWS_AS(vocamix(a, b, 0.5, mask, false, 4), std::invalid_argument);
}

TEST_CASE("lambda sampling respects scale and the Beta(2,2) mean") {
  Rng rng(59);
  LambdaSampler zero{2.0, 2.0, 0.0, 0.5};
  for (int i = 0; i < 100; ++i) CHECK(sample_lambda(zero, rng) == 0.0);

  LambdaSampler s{2.0, 2.0, 0.2, 0.5};
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double l = sample_lambda(s, rng);
    CHECK(l >= 0.0);
    CHECK(l <= 0.2);
    sum += l;
  }
  CHECK(sum / n == doctest::Approx(0.10).epsilon(0.05));  // within 0.005 absolute

  LambdaSampler wide{2.0, 2.0, 0.5, 0.3};
  for (int i = 0; i < 1000; ++i) CHECK(sample_lambda(wide, rng) <= 0.5);
}
