#pragma once

#include "rmdm/mdm.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rmdm {

struct EvalReport {
  int n_trials = 0;
  int n_correct = 0;
  double accuracy = 0.0;
  std::optional<double> auc;  // two-class P300 models only
  std::vector<int> predicted;
  std::vector<int> truth;
};

/// Accuracy (and AUC of δ(non-target) − δ(target) for P300 models) over the
/// labeled epochs. Throws ContractError when no epoch is labeled.
EvalReport evaluate(const MdmModel& model, std::span<const Epoch> epochs);

/// Stratified fold index per epoch: each class's epochs are shuffled with
/// the seed and dealt round-robin. Requires 2 ≤ k ≤ number of epochs.
std::vector<int> assign_folds(std::span<const Epoch> epochs, int k, std::uint64_t seed);

struct FoldReport {
  int fold = 0;
  EvalReport report;
};

/// k-fold cross-validation; prototypes (ERP recipes) come from each
/// training split only.
std::vector<FoldReport> crossval(std::span<const Epoch> epochs, const FeatureRecipe& recipe, int k,
                                 std::uint64_t seed, const MeanConfig& mean_cfg = {});

}  // namespace rmdm
