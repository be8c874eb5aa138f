#pragma once

// Minimum distance to (geometric) mean classification.

#include "rmdm/features.hpp"
#include "rmdm/spd.hpp"

#include <map>
#include <span>
#include <vector>

namespace rmdm {

struct MdmModel {
  FeatureRecipe recipe;
  std::vector<int> class_ids;  // ascending
  std::vector<SpdMatrix> means;
  std::vector<int> counts;

  int n_classes() const noexcept { return static_cast<int>(class_ids.size()); }
  int dim() const noexcept { return means.empty() ? 0 : means.front().dim(); }
  /// Position of a class id in class_ids; throws ContractError if absent.
  int index_of(int class_id) const;
};

/// Throws ContractError unless the model has ≥ 2 classes, one mean per class
/// and all means share the dimension.
void validate(const MdmModel& m);

/// Riemannian distances from one feature matrix to each class mean, in the
/// model's class order.
struct DistanceVector {
  std::vector<int> class_ids;
  std::vector<double> values;

  double at(int class_id) const;
};

/// Per-class geometric means of the recipe's features. ERP recipes without
/// prototypes get them built from the training epochs (all classes for the
/// multi-class form, the target class for the P300 forms).
MdmModel fit(std::span<const Epoch> training, FeatureRecipe recipe, const MeanConfig& mean_cfg = {});

/// Fit from precomputed feature matrices, one label each.
MdmModel fit_features(std::span<const SpdMatrix> features, std::span<const int> labels,
                      FeatureRecipe recipe, const MeanConfig& mean_cfg = {});

DistanceVector distances(const MdmModel& model, const SpdMatrix& feature);
DistanceVector distances(const MdmModel& model, const Epoch& e);

/// Argmin of the distances; ties go to the lowest class id.
int argmin_class(const DistanceVector& dv);
int predict(const MdmModel& model, const Epoch& e);

/// p_z ∝ exp(−δ_z² / τ) with τ the mean squared distance.
std::vector<double> soft_scores(const DistanceVector& dv);

/// δ(non-target) − δ(target): larger is more target-like.
double target_score(const DistanceVector& dv, int target_class, int nontarget_class);

/// Accumulates Σ_reps [δ(C_item ↔ M_target) − δ(C_item ↔ M_nontarget)] per
/// item over P300 repetitions and selects the lowest sum.
class CumulativeSelector {
 public:
  CumulativeSelector(int target_class, int nontarget_class)
      : target_(target_class), nontarget_(nontarget_class) {}

  /// Throws ContractError if the item set differs from earlier repetitions.
  void add_repetition(const std::map<int, DistanceVector>& per_item);

  /// Item with the lowest accumulated score; ties go to the lowest item id.
  int selected() const;
  const std::map<int, double>& scores() const noexcept { return sums_; }
  int repetitions() const noexcept { return reps_; }

 private:
  int target_;
  int nontarget_;
  std::map<int, double> sums_;
  int reps_ = 0;
};

using Repetition = std::map<int, Epoch>;

int cumulative_select(const MdmModel& model, std::span<const Repetition> repetitions);

struct ScoredLabel {
  double score;
  bool positive;
};

/// Mann–Whitney U / (n⁺ n⁻), ties counted one half.
double auc(std::span<const ScoredLabel> scores);

}  // namespace rmdm
