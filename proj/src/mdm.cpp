#include "rmdm/mdm.hpp"

#include "rmdm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace rmdm {

namespace {

FeatureRecipe with_prototypes(FeatureRecipe r, std::span<const Epoch> training) {
  switch (r.modality) {
    case Modality::ErpMulti:
      if (r.prototypes.empty()) r.prototypes = build_prototypes(training);
      break;
    case Modality::P300TwoClass:
      if (r.prototypes.empty()) r.prototypes = build_prototypes(training, {r.target_class});
      break;
    case Modality::MultiUserP300:
      if (r.prototypes.empty()) {
        // The single prototype averages every subject's target epochs.
        std::vector<Epoch> per_subject;
        for (const auto& e : training) {
          if (e.label != r.target_class) continue;
          for (auto& s : split_subjects(e, r.n_subjects)) per_subject.push_back(std::move(s));
        }
        r.prototypes = build_prototypes(per_subject, {r.target_class});
      }
      break;
    default: break;
  }
  return r;
}

}  // namespace

int MdmModel::index_of(int class_id) const {
  const auto it = std::find(class_ids.begin(), class_ids.end(), class_id);
  if (it == class_ids.end()) throw ContractError("model has no class " + std::to_string(class_id));
  return static_cast<int>(it - class_ids.begin());
}

void validate(const MdmModel& m) {
  if (m.class_ids.size() < 2) throw ContractError("model: requires ≥ 2 classes");
  if (m.means.size() != m.class_ids.size() || m.counts.size() != m.class_ids.size()) {
    throw ContractError("model: one mean and one count per class required");
  }
  if (!std::is_sorted(m.class_ids.begin(), m.class_ids.end()) ||
      std::adjacent_find(m.class_ids.begin(), m.class_ids.end()) != m.class_ids.end()) {
    throw ContractError("model: class ids must be strictly ascending");
  }
  for (const auto& mean : m.means) {
    if (mean.dim() != m.means.front().dim()) throw ContractError("model: class means differ in dimension");
  }
  validate(m.recipe);
}

double DistanceVector::at(int class_id) const {
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    if (class_ids[i] == class_id) return values[i];
  }
  throw ContractError("distance vector has no class " + std::to_string(class_id));
}

MdmModel fit_features(std::span<const SpdMatrix> features, std::span<const int> labels,
                      FeatureRecipe recipe, const MeanConfig& mean_cfg) {
  if (features.size() != labels.size()) throw ContractError("fit: one label per feature required");
  std::map<int, std::vector<SpdMatrix>> by_class;
  for (std::size_t i = 0; i < features.size(); ++i) by_class[labels[i]].push_back(features[i]);
  if (by_class.size() < 2) {
    throw ContractError("fit: requires ≥ 2 classes, got " + std::to_string(by_class.size()));
  }
  MdmModel model;
  model.recipe = std::move(recipe);
  for (const auto& [z, set] : by_class) {
    if (set.size() < 2) {
      throw ContractError("fit: class " + std::to_string(z) + " has " + std::to_string(set.size()) +
                          " epoch(s); requires ≥ 2 epochs per class");
    }
    if (set.front().dim() != features.front().dim()) throw ContractError("fit: feature dimensions differ");
    try {
      model.means.push_back(geometric_mean(set, {}, mean_cfg));
    } catch (const NonConvergence& e) {
      throw e.with_class(z);
    }
    model.class_ids.push_back(z);
    model.counts.push_back(static_cast<int>(set.size()));
  }
  return model;
}

MdmModel fit(std::span<const Epoch> training, FeatureRecipe recipe, const MeanConfig& mean_cfg) {
  std::vector<Epoch> labeled;
  for (const auto& e : training) {
    if (e.label) labeled.push_back(e);
  }
  std::set<int> classes;
  for (const auto& e : labeled) classes.insert(*e.label);
  if (classes.size() < 2) {
    throw ContractError("fit: requires ≥ 2 classes, got " + std::to_string(classes.size()));
  }
  recipe = with_prototypes(std::move(recipe), labeled);
  validate(recipe);
  std::vector<SpdMatrix> features;
  std::vector<int> labels;
  features.reserve(labeled.size());
  for (const auto& e : labeled) {
    features.push_back(compute_feature(recipe, e));
    labels.push_back(*e.label);
  }
  return fit_features(features, labels, std::move(recipe), mean_cfg);
}

DistanceVector distances(const MdmModel& model, const SpdMatrix& feature) {
  DistanceVector dv;
  dv.class_ids = model.class_ids;
  dv.values.reserve(model.means.size());
  for (const auto& m : model.means) dv.values.push_back(riemann_distance(m, feature));
  return dv;
}

DistanceVector distances(const MdmModel& model, const Epoch& e) {
  return distances(model, compute_feature(model.recipe, e));
}

int argmin_class(const DistanceVector& dv) {
  if (dv.values.empty()) throw ContractError("empty distance vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dv.values.size(); ++i) {
    if (dv.values[i] < dv.values[best] ||
        (dv.values[i] == dv.values[best] && dv.class_ids[i] < dv.class_ids[best])) {
      best = i;
    }
  }
  return dv.class_ids[best];
}

int predict(const MdmModel& model, const Epoch& e) { return argmin_class(distances(model, e)); }

std::vector<double> soft_scores(const DistanceVector& dv) {
  const std::size_t k = dv.values.size();
  if (k == 0) return {};
  std::vector<double> sq(k);
  double tau = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sq[i] = dv.values[i] * dv.values[i];
    tau += sq[i];
  }
  tau /= static_cast<double>(k);
  if (!(tau > 0.0)) return std::vector<double>(k, 1.0 / static_cast<double>(k));
  const double lo = *std::min_element(sq.begin(), sq.end());
  std::vector<double> p(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(-(sq[i] - lo) / tau);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

double target_score(const DistanceVector& dv, int target_class, int nontarget_class) {
  return dv.at(nontarget_class) - dv.at(target_class);
}

void CumulativeSelector::add_repetition(const std::map<int, DistanceVector>& per_item) {
  if (per_item.empty()) throw ContractError("cumulative_select: repetition has no items");
  if (reps_ > 0) {
    bool same = per_item.size() == sums_.size();
    auto b = sums_.begin();
    for (auto a = per_item.begin(); same && a != per_item.end(); ++a, ++b) same = a->first == b->first;
    if (!same) throw ContractError("cumulative_select: repetitions cover different item sets");
  }
  for (const auto& [item, dv] : per_item) {
    sums_[item] += dv.at(target_) - dv.at(nontarget_);
  }
  ++reps_;
}

int CumulativeSelector::selected() const {
  if (sums_.empty()) throw ContractError("cumulative_select: no repetitions");
  int best = sums_.begin()->first;
  double best_score = sums_.begin()->second;
  for (const auto& [item, s] : sums_) {
    if (s < best_score) {
      best = item;
      best_score = s;
    }
  }
  return best;
}

int cumulative_select(const MdmModel& model, std::span<const Repetition> repetitions) {
  if (repetitions.empty()) throw ContractError("cumulative_select: no repetitions");
  if (model.recipe.modality != Modality::P300TwoClass && model.recipe.modality != Modality::MultiUserP300) {
    throw ContractError("cumulative_select: requires a two-class P300 model");
  }
  CumulativeSelector sel(model.recipe.target_class, model.recipe.nontarget_class);
  for (const auto& rep : repetitions) {
    std::map<int, DistanceVector> per_item;
    for (const auto& [item, e] : rep) per_item.emplace(item, distances(model, e));
    sel.add_repetition(per_item);
  }
  return sel.selected();
}

double auc(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  double n_pos = 0.0;
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].positive) {
        n_pos += 1.0;
        rank_sum_pos += avg_rank;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(sorted.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw ContractError("auc: both labels must be present");
  const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

}  // namespace rmdm
