#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rcore/data.hpp"
#include "rcore/rng.hpp"
#include "rcore/tensor.hpp"

namespace rcore {

struct ModelConfig {
  int frames = 8;
  int channels = 3;
  int height = 32;
  int width = 32;
  int feature_dim = 64;  // D
  int n_verbs = 4;
  int n_objects = 4;
  int conv_width = 3;        // temporal kernel width, odd
  double temperature = 0.07;

  int frame_input_dim() const { return channels * height * width; }
};

// Encoder weights and class embedding tables.
//
// frame encoder : per-frame linear -> ReLU -> linear, CHW -> D
// verb encoder  : two temporal convolutions (ReLU between) over the frame
//                 feature sequence, then temporal mean to R^D
// object encoder: temporal mean, then linear -> ReLU -> linear
// heads         : cosine similarity against learnable class embeddings / tau,
//                 plus sigmoid-gated conditional heads
struct ModelParams {
  ModelConfig config;

  Tensor frame_w1, frame_b1, frame_w2, frame_b2;
  Tensor verb_conv1_w, verb_conv1_b, verb_conv2_w, verb_conv2_b;
  Tensor obj_w1, obj_b1, obj_w2, obj_b2;
  Tensor verb_embed;   // [n_verbs, D]
  Tensor object_embed; // [n_objects, D]
  Tensor gate_v_w, gate_v_b;  // object-conditioned gate for verb features
  Tensor gate_o_w, gate_o_b;  // verb-conditioned gate for object features

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  std::vector<Tensor*> parameters();
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  void zero_grads();
};

struct ForwardOutputs {
  Tensor frame_feats;  // [T, D]
  Tensor verb_seq;     // [T, D] pre-pool verb features
  Tensor verb_feat;    // [D]
  Tensor obj_feat;     // [D]
  Tensor verb_logits;  // [n_verbs]
  Tensor obj_logits;   // [n_objects]
  Tensor cond_vgo;     // [n_verbs, n_objects] verb-given-object logits
  Tensor cond_ogv;     // [n_verbs, n_objects] object-given-verb logits
};

Tensor clip_to_tensor(const Clip& clip);  // [T, C*H*W], no grad

// Frame encoder + verb/object encoders + component and conditional heads.
ForwardOutputs forward(const Tensor& clip_pixels, const ModelParams& params);

Tensor encode_frames(const Tensor& clip_pixels, const ModelParams& params);  // [T, D]
Tensor verb_encode(const Tensor& frame_feats, const ModelParams& params);    // [D]
Tensor verb_encode_seq(const Tensor& frame_feats, const ModelParams& params);  // [T, D]
Tensor object_encode(const Tensor& frame_feats, const ModelParams& params);  // [D]

std::pair<Tensor, Tensor> conditional_logits(const Tensor& verb_feat, const Tensor& obj_feat,
                                             const ModelParams& params);

struct CompositionScores {
  Tensor raw;    // [n_verbs * n_objects] pre-softmax combined scores
  Tensor probs;  // softmax of raw
};

// score(v,o) = p_O(o) * softmax_v(cond_vgo[.,o])[v] + p_V(v) * softmax_o(cond_ogv[v,.])[o]
CompositionScores compose_scores(const ForwardOutputs& outputs);

Tensor temporal_reverse(const Tensor& seq);
std::pair<Tensor, std::vector<std::size_t>> temporal_shuffle(const Tensor& seq, Rng& rng);

struct PerturbedVerbFeatures {
  Tensor original;  // f^V
  Tensor reversed;  // f^V from the reversed frame sequence
  Tensor shuffled;  // f^V from a shuffled frame sequence
  std::vector<std::size_t> permutation;
};

PerturbedVerbFeatures perturbed_verb_features(const Tensor& frame_feats,
                                              const ModelParams& params, Rng& rng);

// Binary checkpoint: magic "RCOR", version, dims, then named f64 blocks.
void save_checkpoint(const std::string& path, ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace rcore
