#include "rcore/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rcore {

MotionMask estimate_motion_region(const Clip& clip, double quantile_rho) {
  if (clip.t < 2) throw std::invalid_argument("estimate_motion_region: clip needs >= 2 frames");
  if (quantile_rho <= 0.0 || quantile_rho >= 1.0)
    throw std::invalid_argument("estimate_motion_region: quantile_rho must be in (0,1)");

  const int t = clip.t, h = clip.h, w = clip.w;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  // Temporal standard deviation of the grayscale (channel-mean) signal.
  std::vector<double> score(n, 0.0);
  std::vector<double> gray(static_cast<std::size_t>(t));
  for (std::size_t p = 0; p < n; ++p) {
    int y = static_cast<int>(p) / w, x = static_cast<int>(p) % w;
    double mean = 0.0;
    for (int ti = 0; ti < t; ++ti) {
      double g = 0.0;
      for (int ci = 0; ci < clip.c; ++ci) g += clip.at(ti, ci, y, x);
      g /= clip.c;
      gray[ti] = g;
      mean += g;
    }
    mean /= t;
    double var = 0.0;
    for (int ti = 0; ti < t; ++ti) var += (gray[ti] - mean) * (gray[ti] - mean);
    score[p] = std::sqrt(var / t);
  }

  MotionMask m;
  m.h = h;
  m.w = w;
  m.mask.assign(n, 0);

  double max_score = *std::max_element(score.begin(), score.end());
  if (max_score < 1e-12) {
    // Static clip: no motion evidence anywhere, use the whole frame.
    std::fill(m.mask.begin(), m.mask.end(), 1);
    m.coverage = 1.0;
    m.degenerate = true;
    return m;
  }

  std::size_t k = static_cast<std::size_t>(std::llround(quantile_rho * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                   [&score](std::size_t a, std::size_t b) {
                     return score[a] != score[b] ? score[a] > score[b] : a < b;
                   });
  for (std::size_t i = 0; i < k; ++i) m.mask[order[i]] = 1;
  m.coverage = static_cast<double>(k) / static_cast<double>(n);
  return m;
}

SoftLabel one_hot_label(int object, int n_objects) {
  if (object < 0 || object >= n_objects)
    throw std::invalid_argument("one_hot_label: object index out of range");
  SoftLabel l(n_objects, 0.0);
  l[object] = 1.0;
  return l;
}

std::pair<Clip, SoftLabel> vocamix(const Clip& primary, const Clip& donor, double lambda,
                                   const MotionMask& mask, bool full_frame, int n_objects) {
  if (primary.t != donor.t || primary.c != donor.c || primary.h != donor.h ||
      primary.w != donor.w)
    throw std::invalid_argument("vocamix: clip geometry mismatch");
  if (mask.h != primary.h || mask.w != primary.w)
    throw std::invalid_argument("vocamix: mask geometry mismatch");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("vocamix: lambda must be in [0,1]");

  Clip out = primary;
  const int mid = donor.t / 2;
  for (int ti = 0; ti < out.t; ++ti)
    for (int ci = 0; ci < out.c; ++ci)
      for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
          if (!full_frame && !mask.at(y, x)) continue;
          auto idx = out.pixel_index(ti, ci, y, x);
          out.pixels[idx] =
              (1.0 - lambda) * primary.pixels[idx] + lambda * donor.at(mid, ci, y, x);
        }

  SoftLabel label(n_objects, 0.0);
  if (primary.object < 0 || primary.object >= n_objects || donor.object < 0 ||
      donor.object >= n_objects)
    throw std::invalid_argument("vocamix: object label out of range");
  label[primary.object] += 1.0 - lambda;
  label[donor.object] += lambda;
  return {std::move(out), std::move(label)};
}

double sample_lambda(const LambdaSampler& s, Rng& rng) {
  if (s.scale == 0.0) {
    // Keep the stream advancing identically to the scaled case.
    rng.beta_int(static_cast<int>(s.beta_a), static_cast<int>(s.beta_b));
    return 0.0;
  }
  return s.scale * rng.beta_int(static_cast<int>(s.beta_a), static_cast<int>(s.beta_b));
}

}  // namespace rcore
