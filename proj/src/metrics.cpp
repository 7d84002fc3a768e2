#include "rcore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rcore {

using nlohmann::json;

double harmonic_mean(double a, double b) {
  if (a < 0 || b < 0) throw std::invalid_argument("harmonic_mean: negative input");
  if (a + b == 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

double compositional_gap(double acc_v, double acc_o, double acc_c) {
  return acc_c - acc_v * acc_o / 100.0;
}

double fsp_ratio(const std::vector<std::size_t>& comp_preds, const CompositionSpace& space) {
  if (comp_preds.empty()) throw std::invalid_argument("fsp_ratio: empty unseen sample set");
  std::size_t seen_hits = 0;
  for (std::size_t p : comp_preds)
    if (space.is_seen_flat(p)) ++seen_hits;
  return 100.0 * static_cast<double>(seen_hits) / static_cast<double>(comp_preds.size());
}

std::optional<double> fcp_ratio(const std::vector<std::size_t>& comp_preds,
                                const CoOccurrenceStats& stats, const CompositionSpace& space) {
  std::size_t seen_hits = 0, freq_hits = 0;
  for (std::size_t p : comp_preds) {
    if (space.is_seen_flat(p)) ++seen_hits;
    if (stats.freq_set.count(p)) ++freq_hits;
  }
  if (seen_hits == 0) return std::nullopt;
  return 100.0 * static_cast<double>(freq_hits) / static_cast<double>(seen_hits);
}

double auc_seen_unseen(const std::vector<std::pair<double, double>>& curve) {
  if (curve.size() < 2)
    throw std::invalid_argument("auc_seen_unseen: need at least 2 curve points");
  std::vector<std::pair<double, double>> pts = curve;
  // Ascending seen accuracy; ties walk the higher unseen value first so a
  // vertical curve segment is traversed top-down.
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });
  double max_seen = pts.back().first;
  double max_unseen = 0.0;
  for (const auto& [s, u] : pts) max_unseen = std::max(max_unseen, u);
  std::vector<std::pair<double, double>> ext;
  ext.reserve(pts.size() + 2);
  ext.emplace_back(0.0, max_unseen);
  for (const auto& p : pts)
    if (p.first > 0.0) ext.push_back(p);
  ext.emplace_back(max_seen, 0.0);

  double area = 0.0;
  for (std::size_t i = 1; i < ext.size(); ++i) {
    double ds = ext[i].first - ext[i - 1].first;
    area += ds * 0.5 * (ext[i].second + ext[i - 1].second);
  }
  return area / 100.0;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& gts,
                                 int n_classes) {
  if (preds.size() != gts.size())
    throw std::invalid_argument("confusion_matrix: prediction/label size mismatch");
  ConfusionMatrix m;
  m.n_classes = n_classes;
  m.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (gts[i] < 0 || gts[i] >= n_classes || preds[i] < 0 || preds[i] >= n_classes)
      throw std::out_of_range("confusion_matrix: class index out of range");
    m.counts[static_cast<std::size_t>(gts[i]) * n_classes + preds[i]] += 1;
  }
  m.normalized.assign(m.counts.size(), 0.0);
  for (int g = 0; g < n_classes; ++g) {
    long row_sum = 0;
    for (int p = 0; p < n_classes; ++p) row_sum += m.at(g, p);
    if (row_sum == 0) continue;
    for (int p = 0; p < n_classes; ++p)
      m.normalized[static_cast<std::size_t>(g) * n_classes + p] =
          static_cast<double>(m.at(g, p)) / static_cast<double>(row_sum);
  }
  return m;
}

double accuracy_percent(const std::vector<int>& preds, const std::vector<int>& gts) {
  if (preds.size() != gts.size())
    throw std::invalid_argument("accuracy_percent: prediction/label size mismatch");
  if (preds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == gts[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(preds.size());
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["acc_verb_seen"] = acc_verb_seen;
  j["acc_verb_unseen"] = acc_verb_unseen;
  j["acc_obj_seen"] = acc_obj_seen;
  j["acc_obj_unseen"] = acc_obj_unseen;
  j["acc_comp_seen"] = acc_comp_seen;
  j["acc_comp_unseen"] = acc_comp_unseen;
  j["hm_verb"] = hm_verb;
  j["hm_obj"] = hm_obj;
  j["hm_comp"] = hm_comp;
  j["cg_seen"] = cg_seen;
  j["cg_unseen"] = cg_unseen;
  j["fsp"] = fsp;
  if (fcp)
    j["fcp"] = *fcp;
  else
    j["fcp"] = nullptr;
  if (auc)
    j["auc"] = *auc;
  else
    j["auc"] = nullptr;
  j["mean_cos_rev"] = mean_cos_rev;
  j["n_verbs"] = n_verbs;
  j["confusion_verb"] = confusion_verb;
  return j.dump(2);
}

const char* EvalReport::csv_header() {
  return "epoch,acc_comp_seen,acc_comp_unseen,fsp,fcp,cg_seen,cg_unseen,mean_cos_rev,hm_comp";
}

std::string EvalReport::csv_row(int epoch) const {
  std::ostringstream os;
  os << epoch << ',' << fmt(acc_comp_seen) << ',' << fmt(acc_comp_unseen) << ',' << fmt(fsp)
     << ',' << (fcp ? fmt(*fcp) : std::string("nan")) << ',' << fmt(cg_seen) << ','
     << fmt(cg_unseen) << ',' << fmt(mean_cos_rev) << ',' << fmt(hm_comp);
  return os.str();
}

}  // namespace rcore
