#include "rmdm/evaluation.hpp"

#include "rmdm/errors.hpp"
#include "rmdm/synthetic.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace rmdm {

namespace {

bool is_p300(const FeatureRecipe& r) {
  return r.modality == Modality::P300TwoClass || r.modality == Modality::MultiUserP300;
}

bool needs_training_prototypes(const FeatureRecipe& r) {
  return r.prototypes.empty() && (is_p300(r) || r.modality == Modality::ErpMulti);
}

EvalReport score(const MdmModel& model, std::span<const SpdMatrix> features, std::span<const int> labels) {
  EvalReport rep;
  std::vector<ScoredLabel> scored;
  const bool p300 = is_p300(model.recipe);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const DistanceVector dv = distances(model, features[i]);
    const int pred = argmin_class(dv);
    rep.predicted.push_back(pred);
    rep.truth.push_back(labels[i]);
    rep.n_correct += pred == labels[i] ? 1 : 0;
    if (p300) {
      scored.push_back({target_score(dv, model.recipe.target_class, model.recipe.nontarget_class),
                        labels[i] == model.recipe.target_class});
    }
  }
  rep.n_trials = static_cast<int>(features.size());
  rep.accuracy = rep.n_trials > 0 ? static_cast<double>(rep.n_correct) / rep.n_trials : 0.0;
  if (p300) {
    const bool both = std::any_of(scored.begin(), scored.end(), [](auto& s) { return s.positive; }) &&
                      std::any_of(scored.begin(), scored.end(), [](auto& s) { return !s.positive; });
    if (both) rep.auc = auc(scored);
  }
  return rep;
}

}  // namespace

EvalReport evaluate(const MdmModel& model, std::span<const Epoch> epochs) {
  std::vector<SpdMatrix> features;
  std::vector<int> labels;
  for (const auto& e : epochs) {
    if (!e.label) continue;
    features.push_back(compute_feature(model.recipe, e));
    labels.push_back(*e.label);
  }
  if (features.empty()) throw ContractError("unlabeled test set");
  return score(model, features, labels);
}

std::vector<int> assign_folds(std::span<const Epoch> epochs, int k, std::uint64_t seed) {
  if (k < 2) throw ContractError("crossval: k must be >= 2");
  if (static_cast<std::size_t>(k) > epochs.size()) {
    throw ContractError("crossval: k = " + std::to_string(k) + " exceeds the number of trials (" +
                        std::to_string(epochs.size()) + ")");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < epochs.size(); ++i) by_class[epochs[i].label.value_or(-1)].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(epochs.size(), 0);
  int next = 0;
  for (auto& [z, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

std::vector<FoldReport> crossval(std::span<const Epoch> epochs, const FeatureRecipe& recipe, int k,
                                 std::uint64_t seed, const MeanConfig& mean_cfg) {
  std::vector<Epoch> labeled;
  for (const auto& e : epochs) {
    if (e.label) labeled.push_back(e);
  }
  if (labeled.empty()) throw ContractError("unlabeled test set");
  const auto folds = assign_folds(labeled, k, seed);

  // Features that do not depend on the training split are computed once.
  std::vector<SpdMatrix> cached;
  const bool per_fold = needs_training_prototypes(recipe);
  if (!per_fold) {
    validate(recipe);
    for (const auto& e : labeled) cached.push_back(compute_feature(recipe, e));
  }

  std::vector<FoldReport> out;
  for (int f = 0; f < k; ++f) {
    std::vector<Epoch> train_epochs;
    std::vector<SpdMatrix> train_x, test_x;
    std::vector<int> train_y, test_y;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      if (folds[i] == f) {
        test_idx.push_back(i);
        test_y.push_back(*labeled[i].label);
      } else {
        train_epochs.push_back(labeled[i]);
        train_y.push_back(*labeled[i].label);
        if (!per_fold) train_x.push_back(cached[i]);
      }
    }
    MdmModel model;
    if (per_fold) {
      model = fit(train_epochs, recipe, mean_cfg);
      for (std::size_t i : test_idx) test_x.push_back(compute_feature(model.recipe, labeled[i]));
    } else {
      model = fit_features(train_x, train_y, recipe, mean_cfg);
      for (std::size_t i : test_idx) test_x.push_back(cached[i]);
    }
    out.push_back({f, score(model, test_x, test_y)});
  }
  return out;
}

}  // namespace rmdm
