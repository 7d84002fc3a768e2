#include "rcore/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "rcore/rng.hpp"

namespace rcore {

using nlohmann::json;

// ---- synthetic generator -----------------------------------------------------

namespace {

struct TrajPoint {
  double row, col, scale;
};

// Normalized time u in [0,1] -> (row, col, scale) offsets in [-1,1] units of
// half the available travel range. Verbs come in time-reversal pairs.
TrajPoint traj_offset(int verb, double u) {
  const double lin = 2.0 * u - 1.0;               // -1 -> 1
  const double quad = 2.0 * u * u - 1.0;          // accelerating
  const double rquad = 2.0 * (1 - u) * (1 - u) - 1.0;
  const double sway = std::sin(1.5 * std::numbers::pi * u);
  const double rsway = std::sin(1.5 * std::numbers::pi * (1.0 - u));
  switch (verb) {
    case 0: return {-lin, 0.0, 0.0};    // move_up
    case 1: return {lin, 0.0, 0.0};     // move_down
    case 2: return {0.0, lin, 0.0};     // move_right
    case 3: return {0.0, -lin, 0.0};    // move_left
    case 4: return {0.0, 0.0, lin};     // approach (grow)
    case 5: return {0.0, 0.0, -lin};    // recede (shrink)
    case 6: return {quad, 0.0, 0.0};    // drop (accelerating fall)
    case 7: return {rquad, 0.0, 0.0};   // rise (decelerating ascent)
    case 8: return {-lin, lin, 0.0};    // slide_up_right
    case 9: return {lin, -lin, 0.0};    // slide_down_left
    case 10: return {0.0, sway, 0.0};   // sway_right
    case 11: return {0.0, rsway, 0.0};  // sway_left
    default:
      throw std::invalid_argument("traj_offset: verb index " + std::to_string(verb) +
                                  " outside the supported set");
  }
}

const char* kVerbNames[kMaxSynthVerbs] = {
    "move_up",  "move_down",       "move_right", "move_left",  "approach",   "recede",
    "drop",     "rise",            "slide_up_right", "slide_down_left", "sway_right", "sway_left"};

constexpr int kOpposite[kMaxSynthVerbs] = {1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10};

const char* kShapeNames[6] = {"square", "disc", "cross", "ring", "triangle", "diamond"};
const double kPalette[8][3] = {{0.95, 0.15, 0.15}, {0.15, 0.9, 0.2},  {0.2, 0.35, 0.95},
                               {0.95, 0.9, 0.15},  {0.9, 0.2, 0.9},   {0.15, 0.9, 0.9},
                               {0.95, 0.55, 0.1},  {0.65, 0.45, 0.95}};
const char* kColorNames[8] = {"red", "green", "blue", "yellow", "magenta", "cyan", "orange", "violet"};

// Antialiased coverage of the shape at normalized coordinates (u, v) in
// object units (the shape fits in |u|,|v| <= 1).
double shape_coverage(int shape, double u, double v) {
  auto edge = [](double d) { return std::clamp((1.0 - d) / 0.25, 0.0, 1.0); };
  switch (shape) {
    case 0: return edge(std::max(std::abs(u), std::abs(v)));                       // square
    case 1: return edge(std::sqrt(u * u + v * v));                                 // disc
    case 2: {                                                                      // cross
      double bar = std::min(std::abs(u), std::abs(v));
      double box = std::max(std::abs(u), std::abs(v));
      return edge(box) * std::clamp((0.38 - bar) / 0.2, 0.0, 1.0);
    }
    case 3: {                                                                      // ring
      double r = std::sqrt(u * u + v * v);
      return edge(r) * std::clamp((r - 0.45) / 0.2, 0.0, 1.0);
    }
    case 4: {                                                                      // triangle
      double d = std::max({v - 1.0, -1.0 - v, std::abs(u) * 2.0 + v - 1.0});
      return std::clamp(-d / 0.25, 0.0, 1.0);
    }
    case 5: return edge(std::abs(u) + std::abs(v));                                // diamond
    default: return 0.0;
  }
}

}  // namespace

int opposite_verb(int verb) {
  if (verb < 0 || verb >= kMaxSynthVerbs)
    throw std::invalid_argument("opposite_verb: verb out of range");
  return kOpposite[verb];
}

const char* synth_verb_name(int verb) {
  if (verb < 0 || verb >= kMaxSynthVerbs)
    throw std::invalid_argument("synth_verb_name: verb out of range");
  return kVerbNames[verb];
}

std::string synth_object_name(int object) {
  if (object < 0 || object >= kMaxSynthObjects)
    throw std::invalid_argument("synth_object_name: object out of range");
  int shape = object % 6;
  int color = (object / 6 + object % 6) % 8;
  return std::string(kColorNames[color]) + "_" + kShapeNames[shape];
}

Clip generate_clip(int verb, int object, const SynthConfig& cfg, std::uint64_t clip_counter,
                   std::vector<std::uint8_t>* occupancy) {
  if (verb < 0 || verb >= cfg.n_verbs || verb >= kMaxSynthVerbs)
    throw std::invalid_argument("generate_clip: verb index out of range");
  if (object < 0 || object >= cfg.n_objects || object >= kMaxSynthObjects)
    throw std::invalid_argument("generate_clip: object index out of range");
  if (cfg.frames < 2) throw std::invalid_argument("generate_clip: frames must be >= 2");

  Rng rng = Rng(cfg.seed).substream("clip", clip_counter);

  const int t = cfg.frames, h = cfg.height, w = cfg.width;
  const double base_radius = 0.14 * std::min(h, w);  // object half-size in pixels
  const double travel = 0.17 * std::min(h, w);       // half travel range
  const double scale_amp = 0.45;                     // relative size change for grow/shrink

  // Random global placement of the whole trajectory; direction information
  // lives only in the frame order, never in where the trajectory sits.
  const double margin = base_radius * (1.0 + scale_amp) + travel + 1.0;
  const double cy0 = rng.uniform(margin, h - margin);
  const double cx0 = rng.uniform(margin, w - margin);

  int shape = object % 6;
  const double* color = kPalette[(object / 6 + object % 6) % 8];

  Clip clip;
  clip.t = t;
  clip.c = 3;
  clip.h = h;
  clip.w = w;
  clip.verb = verb;
  clip.object = object;
  clip.pixels.assign(static_cast<std::size_t>(t) * 3 * h * w, 0.0);
  if (occupancy) occupancy->assign(static_cast<std::size_t>(h) * w, 0);

  for (int ti = 0; ti < t; ++ti) {
    double u = static_cast<double>(ti) / static_cast<double>(t - 1);
    TrajPoint p = traj_offset(verb, u);
    double cy = cy0 + p.row * travel;
    double cx = cx0 + p.col * travel;
    double radius = base_radius * (1.0 + scale_amp * p.scale);

    int y_lo = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    int y_hi = std::min(h - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    int x_lo = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    int x_hi = std::min(w - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    for (int y = y_lo; y <= y_hi; ++y)
      for (int x = x_lo; x <= x_hi; ++x) {
        double cov = shape_coverage(shape, (x - cx) / radius, (y - cy) / radius);
        if (cov <= 0.0) continue;
        for (int ci = 0; ci < 3; ++ci) {
          auto idx = clip.pixel_index(ti, ci, y, x);
          clip.pixels[idx] = std::max(clip.pixels[idx], cov * color[ci]);
        }
        if (occupancy && cov > 0.5) (*occupancy)[static_cast<std::size_t>(y) * w + x] = 1;
      }
  }

  if (cfg.noise_std > 0.0) {
    for (auto& px : clip.pixels) px = std::clamp(px + rng.normal(0.0, cfg.noise_std), 0.0, 1.0);
  }
  return clip;
}

ClipDataset generate_clips(const SynthConfig& cfg, const std::vector<long>& pair_counts,
                           std::string_view stream) {
  if (pair_counts.size() != static_cast<std::size_t>(cfg.n_verbs) * cfg.n_objects)
    throw std::invalid_argument("generate_clips: pair_counts size mismatch");
  ClipDataset ds;
  ds.t = cfg.frames;
  ds.c = 3;
  ds.h = cfg.height;
  ds.w = cfg.width;
  // Distinct clip counters per stream keep draws independent across splits.
  std::uint64_t counter = Rng(cfg.seed).substream(stream).next_u64() >> 32;
  for (int v = 0; v < cfg.n_verbs; ++v)
    for (int o = 0; o < cfg.n_objects; ++o) {
      long n = pair_counts[static_cast<std::size_t>(v) * cfg.n_objects + o];
      for (long i = 0; i < n; ++i) ds.clips.push_back(generate_clip(v, o, cfg, counter++));
    }
  return ds;
}

BiasedDataset generate_biased_dataset(const SynthConfig& cfg) {
  const std::size_t grid = static_cast<std::size_t>(cfg.n_verbs) * cfg.n_objects;
  if (cfg.bias_matrix.size() != grid)
    throw std::invalid_argument("generate_biased_dataset: bias_matrix size mismatch");
  bool any_positive = false, any_zero = false;
  for (long c : cfg.bias_matrix) {
    if (c < 0) throw std::invalid_argument("generate_biased_dataset: negative bias count");
    any_positive = any_positive || c > 0;
    any_zero = any_zero || c == 0;
  }
  if (!any_positive)
    throw std::invalid_argument("generate_biased_dataset: bias_matrix has no positive entry");
  if (cfg.conflict_per_pair > 0 && !any_zero)
    throw DataError("generate_biased_dataset: conflict split requested but bias_matrix has full support");

  std::vector<long> aligned(grid, 0), conflict(grid, 0);
  for (std::size_t i = 0; i < grid; ++i) {
    if (cfg.bias_matrix[i] > 0)
      aligned[i] = cfg.aligned_per_pair;
    else
      conflict[i] = cfg.conflict_per_pair;
  }
  BiasedDataset out;
  out.train = generate_clips(cfg, cfg.bias_matrix, "train");
  out.aligned_test = generate_clips(cfg, aligned, "aligned");
  out.conflict_test = generate_clips(cfg, conflict, "conflict");
  return out;
}

SynthConfig fig2b_synth_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_verbs = 4;
  cfg.n_objects = 4;
  cfg.frames = 8;
  cfg.bias_matrix.assign(16, 0);
  for (int i = 0; i < 4; ++i) cfg.bias_matrix[i * 4 + i] = 40;  // diagonal-only training
  cfg.aligned_per_pair = 25;
  cfg.conflict_per_pair = 30;
  cfg.seed = seed;
  return cfg;
}

SynthConfig fig2a_synth_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_verbs = 10;
  cfg.n_objects = 10;
  cfg.frames = 8;
  cfg.bias_matrix.assign(100, 3);  // balanced grid
  cfg.aligned_per_pair = 1;
  cfg.conflict_per_pair = 0;
  cfg.seed = seed;
  return cfg;
}

SynthConfig skewed_synth_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_verbs = 10;
  cfg.n_objects = 10;
  cfg.frames = 8;
  cfg.bias_matrix.assign(100, 0);
  // Long-tailed diagonal heads plus a sparse off-diagonal tail; 14 of 100
  // pairs are seen (14% coverage).
  const long head[10] = {50, 34, 23, 16, 11, 8, 6, 5, 4, 3};
  for (int v = 0; v < 10; ++v) cfg.bias_matrix[v * 10 + v] = head[v];
  cfg.bias_matrix[0 * 10 + 1] = 3;
  cfg.bias_matrix[1 * 10 + 2] = 3;
  cfg.bias_matrix[2 * 10 + 3] = 3;
  cfg.bias_matrix[3 * 10 + 4] = 3;
  cfg.aligned_per_pair = 3;
  cfg.conflict_per_pair = 3;
  cfg.seed = seed;
  return cfg;
}

// ---- ingestion ----------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

IngestResult ingest_annotation_text(const std::string& text, const ColumnMapping& cols) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw DataError("ingest_annotations: empty file");
  char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> names = split_line(header, delim);

  auto col_of = [&names](const std::string& want) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == want) return static_cast<long>(i);
    return -1L;
  };
  long id_col = col_of(cols.id), verb_col = col_of(cols.verb), obj_col = col_of(cols.object);
  if (id_col < 0) throw DataError("ingest_annotations: missing column '" + cols.id + "'");
  if (verb_col < 0) throw DataError("ingest_annotations: missing column '" + cols.verb + "'");
  if (obj_col < 0) throw DataError("ingest_annotations: missing column '" + cols.object + "'");

  IngestResult res;
  std::set<std::string> ids;
  std::string line;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_line(line, delim);
    if (fields.size() != names.size()) {
      res.rejected.push_back("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size()) + " fields, got " +
                             std::to_string(fields.size()));
      continue;
    }
    const std::string& id = fields[id_col];
    const std::string& verb = fields[verb_col];
    const std::string& object = fields[obj_col];
    if (id.empty() || verb.empty() || object.empty()) {
      res.rejected.push_back("line " + std::to_string(line_no) + ": empty " +
                             (id.empty() ? cols.id : verb.empty() ? cols.verb : cols.object) +
                             " field");
      continue;
    }
    if (!ids.insert(id).second)
      throw DataError("ingest_annotations: duplicate id '" + id + "' at line " +
                      std::to_string(line_no));
    res.records.push_back({id, verb, object});
  }
  return res;
}

IngestResult ingest_annotations(const std::string& path, const ColumnMapping& cols) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("ingest_annotations: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return ingest_annotation_text(buf.str(), cols);
}

// ---- split construction ----------------------------------------------------------

namespace {

using CompKey = std::pair<std::string, std::string>;

struct PooledComp {
  std::vector<const AnnotationRecord*> train, val;
};

}  // namespace

SplitSpec construct_compositional_splits(const std::vector<AnnotationRecord>& train_pool,
                                         const std::vector<AnnotationRecord>& val_pool,
                                         int min_count, double swap_fraction,
                                         std::uint64_t seed) {
  if (min_count < 1)
    throw std::invalid_argument("construct_compositional_splits: min_count must be >= 1");
  if (swap_fraction < 0.0 || swap_fraction > 1.0)
    throw std::invalid_argument("construct_compositional_splits: swap_fraction must be in [0,1]");

  std::map<CompKey, PooledComp> comps;
  for (const auto& r : train_pool) comps[{r.verb, r.object}].train.push_back(&r);
  for (const auto& r : val_pool) comps[{r.verb, r.object}].val.push_back(&r);

  // (1) drop rare compositions.
  std::vector<CompKey> dropped;
  for (auto it = comps.begin(); it != comps.end();) {
    if (static_cast<long>(it->second.train.size() + it->second.val.size()) <=
        static_cast<long>(min_count)) {
      dropped.push_back(it->first);
      it = comps.erase(it);
    } else {
      ++it;
    }
  }
  if (comps.empty()) {
    std::string msg = "construct_compositional_splits: no composition has more than " +
                      std::to_string(min_count) + " samples; dropped:";
    for (const auto& k : dropped) msg += " (" + k.first + "," + k.second + ")";
    throw DataError(msg);
  }

  // (2) closure: promote val-only compositions into the train pool.
  for (auto& [key, pc] : comps) {
    if (pc.train.empty()) {
      pc.train = std::move(pc.val);
      pc.val.clear();
    }
  }

  // (3) swap whole compositions between the pools.
  Rng swap_rng = Rng(seed).substream("swap");
  std::vector<CompKey> train_comps, val_comps;
  for (const auto& [key, pc] : comps) {
    if (!pc.train.empty()) train_comps.push_back(key);
    if (!pc.val.empty()) val_comps.push_back(key);
  }
  swap_rng.shuffle(train_comps);
  swap_rng.shuffle(val_comps);
  std::size_t n_from_train = static_cast<std::size_t>(
      std::llround(swap_fraction * static_cast<double>(train_comps.size())));
  std::size_t n_from_val = static_cast<std::size_t>(
      std::llround(swap_fraction * static_cast<double>(val_comps.size())));

  std::set<CompKey> move_to_val(train_comps.begin(), train_comps.begin() + n_from_train);
  std::set<CompKey> move_to_train(val_comps.begin(), val_comps.begin() + n_from_val);
  for (auto& [key, pc] : comps) {
    std::vector<const AnnotationRecord*> from_train, from_val;
    if (move_to_val.count(key)) {
      from_train = std::move(pc.train);
      pc.train.clear();
    }
    if (move_to_train.count(key)) {
      from_val = std::move(pc.val);
      pc.val.clear();
    }
    pc.val.insert(pc.val.end(), from_train.begin(), from_train.end());
    pc.train.insert(pc.train.end(), from_val.begin(), from_val.end());
  }

  bool any_train = false, any_val = false;
  for (const auto& [key, pc] : comps) {
    any_train = any_train || !pc.train.empty();
    any_val = any_val || !pc.val.empty();
  }
  if (!any_train || !any_val) {
    std::string msg = "construct_compositional_splits: pools too small to satisfy closure;"
                      " compositions:";
    for (const auto& [key, pc] : comps) msg += " (" + key.first + "," + key.second + ")";
    throw DataError(msg);
  }

  // (4) split the val pool into val and test at 3:4 per composition.
  SplitSpec spec;
  Rng ratio_rng = Rng(seed).substream("ratio");
  for (auto& [key, pc] : comps) {
    for (const auto* r : pc.train) spec.train_ids.push_back(r->id);
    if (pc.val.empty()) continue;
    std::vector<const AnnotationRecord*> samples = pc.val;
    std::sort(samples.begin(), samples.end(),
              [](const AnnotationRecord* a, const AnnotationRecord* b) { return a->id < b->id; });
    ratio_rng.shuffle(samples);
    std::size_t n = samples.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(3.0 * n / 7.0));
    bool seen = !pc.train.empty();
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_val)
        spec.val_ids.push_back(samples[i]->id);
      else
        spec.test_ids.push_back(samples[i]->id);
    }
    if (n_val > 0) (seen ? spec.seen_val : spec.unseen_val).insert(key);
    if (n_val < n) (seen ? spec.seen_test : spec.unseen_test).insert(key);
  }
  std::sort(spec.train_ids.begin(), spec.train_ids.end());
  std::sort(spec.val_ids.begin(), spec.val_ids.end());
  std::sort(spec.test_ids.begin(), spec.test_ids.end());
  return spec;
}

SplitSpec construct_compositional_splits(const std::vector<AnnotationRecord>& records,
                                         int min_count, double swap_fraction,
                                         double initial_val_fraction, std::uint64_t seed) {
  Rng pool_rng = Rng(seed).substream("pool");
  std::vector<AnnotationRecord> train_pool, val_pool;
  for (const auto& r : records) {
    if (pool_rng.uniform() < initial_val_fraction)
      val_pool.push_back(r);
    else
      train_pool.push_back(r);
  }
  return construct_compositional_splits(train_pool, val_pool, min_count, swap_fraction, seed);
}

namespace {

json comp_set_to_json(const std::set<CompKey>& s) {
  json arr = json::array();
  for (const auto& [v, o] : s) arr.push_back({v, o});
  return arr;
}

std::set<CompKey> comp_set_from_json(const json& arr) {
  std::set<CompKey> out;
  for (const auto& e : arr) out.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  return out;
}

}  // namespace

std::string SplitSpec::to_json() const {
  json j;
  j["train_ids"] = train_ids;
  j["val_ids"] = val_ids;
  j["test_ids"] = test_ids;
  j["seen_val"] = comp_set_to_json(seen_val);
  j["unseen_val"] = comp_set_to_json(unseen_val);
  j["seen_test"] = comp_set_to_json(seen_test);
  j["unseen_test"] = comp_set_to_json(unseen_test);
  return j.dump(2);
}

SplitSpec SplitSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  SplitSpec s;
  s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  s.val_ids = j.at("val_ids").get<std::vector<std::string>>();
  s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  s.seen_val = comp_set_from_json(j.at("seen_val"));
  s.unseen_val = comp_set_from_json(j.at("unseen_val"));
  s.seen_test = comp_set_from_json(j.at("seen_test"));
  s.unseen_test = comp_set_from_json(j.at("unseen_test"));
  return s;
}

// ---- binary io ---------------------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("clip dataset: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_clip_dataset(const std::string& path, const ClipDataset& ds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_clip_dataset: cannot open " + path);
  f.write("CZSL", 4);
  put_u32(f, 1);  // version
  put_u32(f, static_cast<std::uint32_t>(ds.t));
  put_u32(f, static_cast<std::uint32_t>(ds.c));
  put_u32(f, static_cast<std::uint32_t>(ds.h));
  put_u32(f, static_cast<std::uint32_t>(ds.w));
  put_u32(f, static_cast<std::uint32_t>(ds.clips.size()));
  for (const auto& clip : ds.clips) {
    put_u32(f, static_cast<std::uint32_t>(clip.verb));
    put_u32(f, static_cast<std::uint32_t>(clip.object));
    for (double px : clip.pixels) put_f32(f, static_cast<float>(px));
  }
  if (!f) throw DataError("write_clip_dataset: write failed for " + path);
}

ClipDataset read_clip_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_clip_dataset: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "CZSL")
    throw DataError("read_clip_dataset: bad magic in " + path);
  std::uint32_t version = get_u32(f);
  if (version != 1)
    throw DataError("read_clip_dataset: unsupported version " + std::to_string(version));
  ClipDataset ds;
  ds.t = static_cast<int>(get_u32(f));
  ds.c = static_cast<int>(get_u32(f));
  ds.h = static_cast<int>(get_u32(f));
  ds.w = static_cast<int>(get_u32(f));
  std::uint32_t count = get_u32(f);
  std::size_t n_px = static_cast<std::size_t>(ds.t) * ds.c * ds.h * ds.w;
  ds.clips.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Clip clip;
    clip.t = ds.t;
    clip.c = ds.c;
    clip.h = ds.h;
    clip.w = ds.w;
    clip.verb = static_cast<int>(get_u32(f));
    clip.object = static_cast<int>(get_u32(f));
    clip.pixels.resize(n_px);
    for (std::size_t p = 0; p < n_px; ++p) clip.pixels[p] = get_f32(f);
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

}  // namespace rcore
