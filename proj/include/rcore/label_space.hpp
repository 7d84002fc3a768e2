#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rcore {

struct AnnotationRecord {
  std::string id;
  std::string verb;
  std::string object;
};

// Verb/object vocabularies with composition indexing and per-pair training
// counts. Vocabularies are sorted lexicographically at build time and frozen;
// the flat composition index is row-major verb_idx * n_objects + object_idx.
class CompositionSpace {
 public:
  static CompositionSpace build(const std::vector<AnnotationRecord>& records);
  static CompositionSpace from_counts(std::vector<std::string> verbs,
                                      std::vector<std::string> objects,
                                      std::map<std::pair<int, int>, long> counts);

  std::size_t n_verbs() const { return verbs_.size(); }
  std::size_t n_objects() const { return objects_.size(); }
  std::size_t n_compositions() const { return verbs_.size() * objects_.size(); }

  const std::vector<std::string>& verbs() const { return verbs_; }
  const std::vector<std::string>& objects() const { return objects_; }
  int verb_index(const std::string& name) const;    // -1 when absent
  int object_index(const std::string& name) const;  // -1 when absent

  std::size_t comp_index(int verb, int object) const;
  std::pair<int, int> comp_unindex(std::size_t flat) const;

  long count(int verb, int object) const;
  bool is_seen(int verb, int object) const;
  bool is_seen_flat(std::size_t flat) const;
  const std::set<std::pair<int, int>>& seen() const { return seen_; }
  std::vector<std::pair<int, int>> unseen() const;  // full grid minus seen
  double coverage_ratio() const;

  std::string to_json() const;
  static CompositionSpace from_json(const std::string& text);

 private:
  std::vector<std::string> verbs_;
  std::vector<std::string> objects_;
  std::set<std::pair<int, int>> seen_;
  std::map<std::pair<int, int>, long> counts_;
};

// Conditional co-occurrence statistics over the training counts, and the
// frequently-co-occurring set: pairs whose object-given-verb AND
// verb-given-object conditional probabilities both exceed mean + one standard
// deviation of the observed (nonzero) conditionals.
struct CoOccurrenceStats {
  std::vector<double> p_obj_given_verb;  // n_verbs * n_objects, row-major
  std::vector<double> p_verb_given_obj;
  double mu_ogv = 0.0, sigma_ogv = 0.0;
  double mu_vgo = 0.0, sigma_vgo = 0.0;
  std::set<std::size_t> freq_set;  // flat composition indices

  double threshold_ogv() const { return mu_ogv + sigma_ogv; }
  double threshold_vgo() const { return mu_vgo + sigma_vgo; }

  std::string to_json() const;
  static CoOccurrenceStats from_json(const std::string& text);
};

CoOccurrenceStats build_cooccurrence(const CompositionSpace& space);

}  // namespace rcore
