#pragma once

// Generic + individual classifier pair with a linear hand-over schedule.
// The generic model comes from other subjects or sessions; the individual
// one is learned online from supervised epochs of the current user.

#include "rmdm/mdm.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace rmdm {

enum class UpdateRule {
  GeodesicStep,  // M ← geodesic(M, C, 1/(n+1)); bounded memory
  BatchRefit,    // keep every matrix and recompute the Karcher mean
};

struct FusionConfig {
  int ramp = 40;
  UpdateRule rule = UpdateRule::GeodesicStep;
  MeanConfig mean_cfg;
};

class FusedClassifier {
 public:
  struct ClassState {
    SpdMatrix mean;
    int count = 0;
    std::vector<SpdMatrix> history;  // BatchRefit only
  };

  explicit FusedClassifier(MdmModel generic, FusionConfig cfg = {});

  /// min(1, n_rep / ramp).
  double alpha() const noexcept;
  int n_rep() const noexcept { return n_rep_; }
  int ramp() const noexcept { return cfg_.ramp; }
  const FusionConfig& config() const noexcept { return cfg_; }
  const MdmModel& generic() const noexcept { return generic_; }
  const std::map<int, ClassState>& individual_state() const noexcept { return classes_; }

  /// The individual model, once every class has absorbed at least one epoch.
  std::optional<MdmModel> individual() const;

  /// Per class (1 − α)·δ_g/Σδ_g + α·δ_i/Σδ_i. Throws ContractError when
  /// α > 0 and the individual model is not yet available.
  DistanceVector fused_distances(const SpdMatrix& feature) const;
  DistanceVector fused_distances(const Epoch& e) const;

  /// Merge a labeled epoch into the individual mean of its class.
  void absorb(const Epoch& e, int label);
  void absorb_feature(const SpdMatrix& feature, int label);

  /// Advance the repetition counter that drives alpha.
  void complete_repetitions(int n = 1);

  /// Absorb prior-session epochs and raise n_rep to
  /// min(ramp, fewest prior epochs in any class).
  void seed_prior(std::span<const Epoch> prior);

  /// Restore serialized state.
  void restore(int n_rep, std::map<int, ClassState> classes);

 private:
  MdmModel generic_;
  FusionConfig cfg_;
  int n_rep_ = 0;
  std::map<int, ClassState> classes_;
};

}  // namespace rmdm
