#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rcore/label_space.hpp"

namespace rcore {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// T-frame pixel clip in [0,1] with one verb and one object label.
struct Clip {
  int t = 0, c = 0, h = 0, w = 0;
  std::vector<double> pixels;  // row-major [t][c][h][w]
  int verb = -1;
  int object = -1;

  std::size_t pixel_index(int ti, int ci, int y, int x) const {
    return ((static_cast<std::size_t>(ti) * c + ci) * h + y) * w + x;
  }
  double at(int ti, int ci, int y, int x) const { return pixels[pixel_index(ti, ci, y, x)]; }
};

struct ClipDataset {
  int t = 0, c = 0, h = 0, w = 0;
  std::vector<Clip> clips;
};

// Parameters of the synthetic compositional clip generator. Objects are
// static shape+color renderings repeated in every frame; verbs are motion
// trajectories of that shape, chosen in time-reversal pairs so that playing
// a clip backwards produces the opposite verb's trajectory.
struct SynthConfig {
  int n_verbs = 4;
  int n_objects = 4;
  int frames = 8;
  int height = 32;
  int width = 32;
  double noise_std = 0.02;
  std::vector<long> bias_matrix;  // n_verbs * n_objects train counts
  int aligned_per_pair = 25;      // test clips per seen pair
  int conflict_per_pair = 30;     // test clips per zero-count pair
  std::uint64_t seed = 0;
};

constexpr int kMaxSynthVerbs = 12;
constexpr int kMaxSynthObjects = 48;

// Index of the verb whose trajectory equals this verb played backwards.
int opposite_verb(int verb);
const char* synth_verb_name(int verb);
std::string synth_object_name(int object);

// Deterministic given (verb, object, cfg.seed, clip_counter). When
// occupancy is non-null it receives the h*w union of pixels the object
// covers in any frame (the ground-truth motion region).
Clip generate_clip(int verb, int object, const SynthConfig& cfg, std::uint64_t clip_counter,
                   std::vector<std::uint8_t>* occupancy = nullptr);

// pair_counts is a flat n_verbs*n_objects matrix of clips to draw per pair.
ClipDataset generate_clips(const SynthConfig& cfg, const std::vector<long>& pair_counts,
                           std::string_view stream);

struct BiasedDataset {
  ClipDataset train;
  ClipDataset aligned_test;   // drawn from the bias support
  ClipDataset conflict_test;  // drawn only from zero-count pairs
};

BiasedDataset generate_biased_dataset(const SynthConfig& cfg);

// Named generator configurations for the built-in experiments.
SynthConfig fig2b_synth_config(std::uint64_t seed);   // 4x4 diagonal-only, 40/25/30 per pair
SynthConfig fig2a_synth_config(std::uint64_t seed);   // balanced 10x10 grid
SynthConfig skewed_synth_config(std::uint64_t seed);  // long-tailed 10x10, coverage <= 15%

// ---- annotation ingestion ---------------------------------------------------

struct ColumnMapping {
  std::string id = "id";
  std::string verb = "verb";
  std::string object = "object";
};

struct IngestResult {
  std::vector<AnnotationRecord> records;
  std::vector<std::string> rejected;  // "line N: reason"
};

// Comma- or tab-delimited text with a header row. Missing mapped columns and
// duplicate ids are hard errors; malformed rows are skipped and reported.
IngestResult ingest_annotations(const std::string& path, const ColumnMapping& cols);
IngestResult ingest_annotation_text(const std::string& text, const ColumnMapping& cols);

// ---- compositional split construction ---------------------------------------

struct SplitSpec {
  std::vector<std::string> train_ids, val_ids, test_ids;
  std::set<std::pair<std::string, std::string>> seen_val, unseen_val;
  std::set<std::pair<std::string, std::string>> seen_test, unseen_test;

  std::string to_json() const;
  static SplitSpec from_json(const std::string& text);
};

// Protocol: (1) drop compositions with <= min_count samples; (2) promote
// val-only compositions into the train pool so every val-pool composition
// exists in train; (3) swap a swap_fraction of compositions (all their
// samples together) between the pools; (4) split the val pool into val and
// test at 3:4 per composition. Seen/unseen status is derived against the
// final train pool.
SplitSpec construct_compositional_splits(const std::vector<AnnotationRecord>& train_pool,
                                         const std::vector<AnnotationRecord>& val_pool,
                                         int min_count, double swap_fraction,
                                         std::uint64_t seed);

// Single-pool variant: records are first partitioned into train/val pools
// per sample with probability initial_val_fraction.
SplitSpec construct_compositional_splits(const std::vector<AnnotationRecord>& records,
                                         int min_count, double swap_fraction,
                                         double initial_val_fraction, std::uint64_t seed);

// ---- binary clip dataset io --------------------------------------------------

void write_clip_dataset(const std::string& path, const ClipDataset& ds);
ClipDataset read_clip_dataset(const std::string& path);

}  // namespace rcore
