#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rcore/data.hpp"
#include "rcore/rng.hpp"

namespace rcore {

// Binary per-pixel motion-region mask over one clip's spatial grid.
struct MotionMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> mask;  // h*w
  double coverage = 0.0;           // fraction of active pixels
  bool degenerate = false;         // static clip, full-frame fallback

  bool at(int y, int x) const { return mask[static_cast<std::size_t>(y) * w + x] != 0; }
};

// Per-pixel score is the temporal standard deviation of the grayscale
// channel; the mask keeps the top quantile_rho fraction of pixels. A clip
// with no inter-frame variation falls back to the full frame.
MotionMask estimate_motion_region(const Clip& clip, double quantile_rho);

// Soft object label over the object vocabulary.
using SoftLabel = std::vector<double>;

SoftLabel one_hot_label(int object, int n_objects);

// Blends the donor's middle frame into the primary clip's motion region at
// strength lambda, every frame receiving the same static injection. The verb
// label is kept; the object label is softened to (1-lambda, lambda). When
// full_frame is set the blend covers the whole frame instead of the mask.
std::pair<Clip, SoftLabel> vocamix(const Clip& primary, const Clip& donor, double lambda,
                                   const MotionMask& mask, bool full_frame, int n_objects);

struct LambdaSampler {
  double beta_a = 2.0;
  double beta_b = 2.0;
  double scale = 0.2;
  double p_aug = 0.5;
};

// lambda = scale * Beta(beta_a, beta_b) draw, in [0, scale].
double sample_lambda(const LambdaSampler& s, Rng& rng);

struct VocaConfig {
  double rho = 0.25;        // motion-region quantile
  double scale = 0.2;       // lambda scale factor
  double p_aug = 0.5;       // per-sample application probability
  bool full_frame = false;  // blend whole frames instead of the motion region
  double beta_a = 2.0;
  double beta_b = 2.0;

  LambdaSampler sampler() const { return {beta_a, beta_b, scale, p_aug}; }
};

}  // namespace rcore
