#include "rcore/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace rcore {

using nlohmann::json;

CompositionSpace CompositionSpace::build(const std::vector<AnnotationRecord>& records) {
  if (records.empty())
    throw std::invalid_argument("CompositionSpace::build: empty record set");
  std::set<std::string> vset, oset;
  for (const auto& r : records) {
    vset.insert(r.verb);
    oset.insert(r.object);
  }
  CompositionSpace s;
  s.verbs_.assign(vset.begin(), vset.end());
  s.objects_.assign(oset.begin(), oset.end());
  for (const auto& r : records) {
    int v = s.verb_index(r.verb);
    int o = s.object_index(r.object);
    s.counts_[{v, o}] += 1;
  }
  for (const auto& [pair, c] : s.counts_)
    if (c > 0) s.seen_.insert(pair);
  return s;
}

CompositionSpace CompositionSpace::from_counts(std::vector<std::string> verbs,
                                               std::vector<std::string> objects,
                                               std::map<std::pair<int, int>, long> counts) {
  CompositionSpace s;
  s.verbs_ = std::move(verbs);
  s.objects_ = std::move(objects);
  for (const auto& [pair, c] : counts) {
    if (pair.first < 0 || pair.first >= static_cast<int>(s.verbs_.size()) || pair.second < 0 ||
        pair.second >= static_cast<int>(s.objects_.size()))
      throw std::out_of_range("CompositionSpace::from_counts: pair index out of range");
    if (c > 0) {
      s.counts_[pair] = c;
      s.seen_.insert(pair);
    }
  }
  return s;
}

int CompositionSpace::verb_index(const std::string& name) const {
  auto it = std::lower_bound(verbs_.begin(), verbs_.end(), name);
  if (it == verbs_.end() || *it != name) return -1;
  return static_cast<int>(it - verbs_.begin());
}

int CompositionSpace::object_index(const std::string& name) const {
  auto it = std::lower_bound(objects_.begin(), objects_.end(), name);
  if (it == objects_.end() || *it != name) return -1;
  return static_cast<int>(it - objects_.begin());
}

std::size_t CompositionSpace::comp_index(int verb, int object) const {
  if (verb < 0 || verb >= static_cast<int>(n_verbs()) || object < 0 ||
      object >= static_cast<int>(n_objects()))
    throw std::out_of_range("comp_index: (" + std::to_string(verb) + "," +
                            std::to_string(object) + ") outside " + std::to_string(n_verbs()) +
                            "x" + std::to_string(n_objects()) + " space");
  return static_cast<std::size_t>(verb) * n_objects() + static_cast<std::size_t>(object);
}

std::pair<int, int> CompositionSpace::comp_unindex(std::size_t flat) const {
  if (flat >= n_compositions())
    throw std::out_of_range("comp_unindex: " + std::to_string(flat) + " outside " +
                            std::to_string(n_compositions()) + " compositions");
  return {static_cast<int>(flat / n_objects()), static_cast<int>(flat % n_objects())};
}

long CompositionSpace::count(int verb, int object) const {
  auto it = counts_.find({verb, object});
  return it == counts_.end() ? 0 : it->second;
}

bool CompositionSpace::is_seen(int verb, int object) const {
  return seen_.count({verb, object}) > 0;
}

bool CompositionSpace::is_seen_flat(std::size_t flat) const {
  auto [v, o] = comp_unindex(flat);
  return is_seen(v, o);
}

std::vector<std::pair<int, int>> CompositionSpace::unseen() const {
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < static_cast<int>(n_verbs()); ++v)
    for (int o = 0; o < static_cast<int>(n_objects()); ++o)
      if (!is_seen(v, o)) out.emplace_back(v, o);
  return out;
}

double CompositionSpace::coverage_ratio() const {
  return static_cast<double>(seen_.size()) / static_cast<double>(n_compositions());
}

std::string CompositionSpace::to_json() const {
  json j;
  j["verbs"] = verbs_;
  j["objects"] = objects_;
  json counts = json::array();
  for (const auto& [pair, c] : counts_)
    counts.push_back({pair.first, pair.second, c});
  j["counts"] = counts;
  return j.dump(2);
}

CompositionSpace CompositionSpace::from_json(const std::string& text) {
  json j = json::parse(text);
  std::map<std::pair<int, int>, long> counts;
  for (const auto& e : j.at("counts"))
    counts[{e.at(0).get<int>(), e.at(1).get<int>()}] = e.at(2).get<long>();
  return from_counts(j.at("verbs").get<std::vector<std::string>>(),
                     j.at("objects").get<std::vector<std::string>>(), std::move(counts));
}

namespace {

// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  var /= static_cast<double>(xs.size());
  return {mu, std::sqrt(var)};
}

}  // namespace

CoOccurrenceStats build_cooccurrence(const CompositionSpace& space) {
  const std::size_t nv = space.n_verbs(), no = space.n_objects();
  CoOccurrenceStats st;
  st.p_obj_given_verb.assign(nv * no, 0.0);
  st.p_verb_given_obj.assign(nv * no, 0.0);

  std::vector<double> verb_tot(nv, 0.0), obj_tot(no, 0.0);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t o = 0; o < no; ++o) {
      double c = static_cast<double>(space.count(static_cast<int>(v), static_cast<int>(o)));
      verb_tot[v] += c;
      obj_tot[o] += c;
    }

  // Statistics are taken over the conditionals of observed pairs only;
  // structural zeros carry no training mass.
  std::vector<double> obs_ogv, obs_vgo;
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t o = 0; o < no; ++o) {
      double c = static_cast<double>(space.count(static_cast<int>(v), static_cast<int>(o)));
      if (c <= 0.0) continue;
      double pov = c / verb_tot[v];
      double pvo = c / obj_tot[o];
      st.p_obj_given_verb[v * no + o] = pov;
      st.p_verb_given_obj[v * no + o] = pvo;
      obs_ogv.push_back(pov);
      obs_vgo.push_back(pvo);
    }

  std::tie(st.mu_ogv, st.sigma_ogv) = mean_std(obs_ogv);
  std::tie(st.mu_vgo, st.sigma_vgo) = mean_std(obs_vgo);

  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t o = 0; o < no; ++o) {
      std::size_t flat = v * no + o;
      if (st.p_obj_given_verb[flat] > st.threshold_ogv() &&
          st.p_verb_given_obj[flat] > st.threshold_vgo())
        st.freq_set.insert(flat);
    }
  return st;
}

std::string CoOccurrenceStats::to_json() const {
  json j;
  j["p_obj_given_verb"] = p_obj_given_verb;
  j["p_verb_given_obj"] = p_verb_given_obj;
  j["mu_ogv"] = mu_ogv;
  j["sigma_ogv"] = sigma_ogv;
  j["mu_vgo"] = mu_vgo;
  j["sigma_vgo"] = sigma_vgo;
  j["freq_set"] = std::vector<std::size_t>(freq_set.begin(), freq_set.end());
  return j.dump(2);
}

CoOccurrenceStats CoOccurrenceStats::from_json(const std::string& text) {
  json j = json::parse(text);
  CoOccurrenceStats st;
  st.p_obj_given_verb = j.at("p_obj_given_verb").get<std::vector<double>>();
  st.p_verb_given_obj = j.at("p_verb_given_obj").get<std::vector<double>>();
  st.mu_ogv = j.at("mu_ogv").get<double>();
  st.sigma_ogv = j.at("sigma_ogv").get<double>();
  st.mu_vgo = j.at("mu_vgo").get<double>();
  st.sigma_vgo = j.at("sigma_vgo").get<double>();
  for (auto v : j.at("freq_set").get<std::vector<std::size_t>>()) st.freq_set.insert(v);
  return st;
}

}  // namespace rcore
