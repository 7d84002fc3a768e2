#include "rcore/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rcore {

namespace {

Tensor init_weight(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> vals(n);
  double s = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : vals) v = rng.normal(0.0, s);
  return Tensor(std::move(shape), std::move(vals), true);
}

Tensor init_zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape), 0.0, true); }

Tensor init_embed(std::size_t rows, std::size_t dim, Rng& rng) {
  std::vector<double> vals(rows * dim);
  for (auto& v : vals) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  return Tensor({rows, dim}, std::move(vals), true);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.feature_dim < 8) throw std::invalid_argument("ModelParams::init: feature_dim must be >= 8");
  if (cfg.conv_width % 2 == 0 || cfg.conv_width < 3)
    throw std::invalid_argument("ModelParams::init: conv_width must be odd and >= 3");
  Rng rng = Rng(seed).substream("model.init");
  const std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
  const std::size_t in = static_cast<std::size_t>(cfg.frame_input_dim());
  const std::size_t w = static_cast<std::size_t>(cfg.conv_width);

  ModelParams p;
  p.config = cfg;
  p.frame_w1 = init_weight({in, d}, in, rng);
  p.frame_b1 = init_zeros({d});
  p.frame_w2 = init_weight({d, d}, d, rng);
  p.frame_b2 = init_zeros({d});
  p.verb_conv1_w = init_weight({d, w, d}, w * d, rng);
  p.verb_conv1_b = init_zeros({d});
  p.verb_conv2_w = init_weight({d, w, d}, w * d, rng);
  p.verb_conv2_b = init_zeros({d});
  p.obj_w1 = init_weight({d, d}, d, rng);
  p.obj_b1 = init_zeros({d});
  p.obj_w2 = init_weight({d, d}, d, rng);
  p.obj_b2 = init_zeros({d});
  p.verb_embed = init_embed(static_cast<std::size_t>(cfg.n_verbs), d, rng);
  p.object_embed = init_embed(static_cast<std::size_t>(cfg.n_objects), d, rng);
  p.gate_v_w = init_weight({d, d}, d, rng);
  p.gate_v_b = init_zeros({d});
  p.gate_o_w = init_weight({d, d}, d, rng);
  p.gate_o_b = init_zeros({d});
  return p;
}

std::vector<Tensor*> ModelParams::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named_parameters() {
  return {{"frame_w1", &frame_w1},         {"frame_b1", &frame_b1},
          {"frame_w2", &frame_w2},         {"frame_b2", &frame_b2},
          {"verb_conv1_w", &verb_conv1_w}, {"verb_conv1_b", &verb_conv1_b},
          {"verb_conv2_w", &verb_conv2_w}, {"verb_conv2_b", &verb_conv2_b},
          {"obj_w1", &obj_w1},             {"obj_b1", &obj_b1},
          {"obj_w2", &obj_w2},             {"obj_b2", &obj_b2},
          {"verb_embed", &verb_embed},     {"object_embed", &object_embed},
          {"gate_v_w", &gate_v_w},         {"gate_v_b", &gate_v_b},
          {"gate_o_w", &gate_o_w},         {"gate_o_b", &gate_o_b}};
}

void ModelParams::zero_grads() {
  for (Tensor* t : parameters()) t->zero_grad();
}

Tensor clip_to_tensor(const Clip& clip) {
  const std::size_t t = static_cast<std::size_t>(clip.t);
  const std::size_t chw = static_cast<std::size_t>(clip.c) * clip.h * clip.w;
  return Tensor({t, chw}, clip.pixels, false);
}

Tensor encode_frames(const Tensor& clip_pixels, const ModelParams& params) {
  if (clip_pixels.rank() != 2 ||
      clip_pixels.cols() != static_cast<std::size_t>(params.config.frame_input_dim()))
    throw std::invalid_argument("encode_frames: clip geometry " + clip_pixels.shape_str() +
                                " does not match the configured frame input dim " +
                                std::to_string(params.config.frame_input_dim()));
  Tensor h1 = relu(add_rowvec(matmul(clip_pixels, params.frame_w1), params.frame_b1));
  return add_rowvec(matmul(h1, params.frame_w2), params.frame_b2);
}

Tensor verb_encode_seq(const Tensor& frame_feats, const ModelParams& params) {
  Tensor h = relu(conv1d_time(frame_feats, params.verb_conv1_w, params.verb_conv1_b));
  return conv1d_time(h, params.verb_conv2_w, params.verb_conv2_b);
}

Tensor verb_encode(const Tensor& frame_feats, const ModelParams& params) {
  return mean_rows(verb_encode_seq(frame_feats, params));
}

Tensor object_encode(const Tensor& frame_feats, const ModelParams& params) {
  Tensor pooled = mean_rows(frame_feats);
  Tensor h = relu(add(matmul(pooled, params.obj_w1), params.obj_b1));
  return add(matmul(h, params.obj_w2), params.obj_b2);
}

std::pair<Tensor, Tensor> conditional_logits(const Tensor& verb_feat, const Tensor& obj_feat,
                                             const ModelParams& params) {
  const std::size_t nv = static_cast<std::size_t>(params.config.n_verbs);
  const std::size_t no = static_cast<std::size_t>(params.config.n_objects);
  const double inv_tau = 1.0 / params.config.temperature;

  // cond_vgo[v,o] = cos(verb_feat . sigmoid(gate_v(e^O_o)), e^V_v) / tau
  std::vector<Tensor> vgo_cols;  // each [n_verbs]
  vgo_cols.reserve(no);
  for (std::size_t o = 0; o < no; ++o) {
    Tensor e_o = reshape(select_rows(params.object_embed, {o}), {verb_feat.size()});
    Tensor gate = sigmoid(add(matmul(e_o, params.gate_v_w), params.gate_v_b));
    Tensor modulated = mul(verb_feat, gate);
    vgo_cols.push_back(scale(cosine_rows(params.verb_embed, modulated), inv_tau));
  }
  // Stack columns: build [n_objects, n_verbs] then transpose.
  Tensor vgo_t = reshape(vgo_cols[0], {1, nv});
  for (std::size_t o = 1; o < no; ++o)
    vgo_t = concat_rows(vgo_t, reshape(vgo_cols[o], {1, nv}));
  Tensor cond_vgo = transpose(vgo_t);

  // cond_ogv[v,o] = cos(obj_feat . sigmoid(gate_o(e^V_v)), e^O_o) / tau
  Tensor ogv;
  for (std::size_t v = 0; v < nv; ++v) {
    Tensor e_v = reshape(select_rows(params.verb_embed, {v}), {obj_feat.size()});
    Tensor gate = sigmoid(add(matmul(e_v, params.gate_o_w), params.gate_o_b));
    Tensor modulated = mul(obj_feat, gate);
    Tensor row = reshape(scale(cosine_rows(params.object_embed, modulated), inv_tau), {1, no});
    ogv = v == 0 ? row : concat_rows(ogv, row);
  }
  return {cond_vgo, ogv};
}

ForwardOutputs forward(const Tensor& clip_pixels, const ModelParams& params) {
  ForwardOutputs out;
  out.frame_feats = encode_frames(clip_pixels, params);
  out.verb_seq = verb_encode_seq(out.frame_feats, params);
  out.verb_feat = mean_rows(out.verb_seq);
  out.obj_feat = object_encode(out.frame_feats, params);
  const double inv_tau = 1.0 / params.config.temperature;
  out.verb_logits = scale(cosine_rows(params.verb_embed, out.verb_feat), inv_tau);
  out.obj_logits = scale(cosine_rows(params.object_embed, out.obj_feat), inv_tau);
  std::tie(out.cond_vgo, out.cond_ogv) = conditional_logits(out.verb_feat, out.obj_feat, params);
  return out;
}

CompositionScores compose_scores(const ForwardOutputs& outputs) {
  Tensor p_v = softmax(outputs.verb_logits);  // [nv]
  Tensor p_o = softmax(outputs.obj_logits);   // [no]
  const std::size_t nv = p_v.size(), no = p_o.size();

  // softmax over verbs for each object column.
  Tensor vgo_cols = softmax(transpose(outputs.cond_vgo));  // [no, nv]
  Tensor ogv_rows = softmax(outputs.cond_ogv);             // [nv, no]

  Tensor term_o = transpose(scale_rows(vgo_cols, p_o));  // [nv, no] p_O(o) * p(v|o)
  Tensor term_v = scale_rows(ogv_rows, p_v);             // [nv, no] p_V(v) * p(o|v)
  Tensor raw = reshape(add(term_o, term_v), {nv * no});

  CompositionScores s;
  s.raw = raw;
  s.probs = softmax(raw);
  return s;
}

Tensor temporal_reverse(const Tensor& seq) {
  if (seq.rank() != 2 || seq.rows() < 2)
    throw std::invalid_argument("temporal_reverse: sequence must have >= 2 frames");
  return reverse_time(seq);
}

std::pair<Tensor, std::vector<std::size_t>> temporal_shuffle(const Tensor& seq, Rng& rng) {
  if (seq.rank() != 2 || seq.rows() < 2)
    throw std::invalid_argument("temporal_shuffle: sequence must have >= 2 frames");
  const std::size_t t = seq.rows();
  std::vector<std::size_t> perm = rng.permutation(t);
  auto is_identity = [](const std::vector<std::size_t>& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != i) return false;
    return true;
  };
  while (is_identity(perm)) perm = rng.permutation(t);
  return {permute_time(seq, perm), perm};
}

PerturbedVerbFeatures perturbed_verb_features(const Tensor& frame_feats,
                                              const ModelParams& params, Rng& rng) {
  PerturbedVerbFeatures out;
  out.original = verb_encode(frame_feats, params);
  out.reversed = verb_encode(temporal_reverse(frame_feats), params);
  auto [shuffled_seq, perm] = temporal_shuffle(frame_feats, rng);
  out.shuffled = verb_encode(shuffled_seq, params);
  out.permutation = std::move(perm);
  return out;
}

// ---- checkpoint io -----------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint: truncated file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, ModelParams& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_checkpoint: cannot open " + path);
  f.write("RCOR", 4);
  put_u32(f, kCheckpointVersion);
  put_u32(f, static_cast<std::uint32_t>(params.config.feature_dim));
  put_u32(f, static_cast<std::uint32_t>(params.config.frames));
  put_u32(f, static_cast<std::uint32_t>(params.config.n_verbs));
  put_u32(f, static_cast<std::uint32_t>(params.config.n_objects));
  put_u32(f, static_cast<std::uint32_t>(params.config.channels));
  put_u32(f, static_cast<std::uint32_t>(params.config.height));
  put_u32(f, static_cast<std::uint32_t>(params.config.width));
  put_u32(f, static_cast<std::uint32_t>(params.config.conv_width));
  put_f64(f, params.config.temperature);
  auto named = params.named_parameters();
  put_u32(f, static_cast<std::uint32_t>(named.size()));
  for (auto& [name, t] : named) {
    put_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(f, static_cast<std::uint32_t>(t->shape().size()));
    for (std::size_t d : t->shape()) put_u32(f, static_cast<std::uint32_t>(d));
    for (double v : t->values()) put_f64(f, v);
  }
  if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "RCOR") throw DataError("load_checkpoint: bad magic");
  std::uint32_t version = get_u32(f);
  if (version != kCheckpointVersion)
    throw DataError("load_checkpoint: unsupported version " + std::to_string(version));
  ModelConfig cfg;
  cfg.feature_dim = static_cast<int>(get_u32(f));
  cfg.frames = static_cast<int>(get_u32(f));
  cfg.n_verbs = static_cast<int>(get_u32(f));
  cfg.n_objects = static_cast<int>(get_u32(f));
  cfg.channels = static_cast<int>(get_u32(f));
  cfg.height = static_cast<int>(get_u32(f));
  cfg.width = static_cast<int>(get_u32(f));
  cfg.conv_width = static_cast<int>(get_u32(f));
  cfg.temperature = get_f64(f);

  ModelParams params = ModelParams::init(cfg, 0);
  std::uint32_t n_blocks = get_u32(f);
  auto named = params.named_parameters();
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    std::uint32_t name_len = get_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    std::uint32_t rank = get_u32(f);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = get_u32(f);
      n *= d;
    }
    Tensor* target = nullptr;
    for (auto& [pname, t] : named)
      if (pname == name) target = t;
    if (!target) throw DataError("load_checkpoint: unknown parameter block '" + name + "'");
    if (target->shape() != shape)
      throw DataError("load_checkpoint: shape mismatch for '" + name + "'");
    for (auto& v : target->values()) v = get_f64(f);
  }
  return params;
}

}  // namespace rcore
