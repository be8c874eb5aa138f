#pragma once

// Offline replay of a Brain-Invaders-style P300 game. Each level shows a
// grid of items; after every repetition of flashes the item with the lowest
// cumulated target-vs-non-target distance is destroyed. The level ends when
// the target is hit; the number of repetitions it took is the NRD.

#include "rmdm/adaptive.hpp"
#include "rmdm/mdm.hpp"
#include "rmdm/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rmdm {

/// Epochs of one repetition, indexed by item id. Must be deterministic in
/// the repetition index so that paired runs see identical data.
using EpochSource = std::function<std::vector<Epoch>(int repetition)>;

struct LevelSpec {
  int n_items = 36;
  int target = 0;
  int max_repetitions = 8;
  EpochSource source;
};

enum class Mode { Adaptive, NonAdaptive };

std::string to_string(Mode m);

struct LevelResult {
  int nrd = 0;
  bool solved = false;  // false: the cap was reached, nrd == max_repetitions
  std::vector<int> selected;  // per repetition
  int target = 0;
  Mode mode = Mode::NonAdaptive;
};

/// What the simulator needs from a classifier.
class LevelClassifier {
 public:
  virtual ~LevelClassifier() = default;
  virtual DistanceVector distances(const Epoch& e) const = 0;
  virtual int target_class() const = 0;
  virtual int nontarget_class() const = 0;
  /// Supervised update after the selection of a repetition has been made.
  virtual void learn(const Epoch& /*e*/, int /*label*/) {}
  virtual void end_repetition() {}
};

/// Fixed MDM model; never learns.
class StaticClassifier final : public LevelClassifier {
 public:
  explicit StaticClassifier(MdmModel model) : model_(std::move(model)) {}
  DistanceVector distances(const Epoch& e) const override { return rmdm::distances(model_, e); }
  int target_class() const override { return model_.recipe.target_class; }
  int nontarget_class() const override { return model_.recipe.nontarget_class; }
  const MdmModel& model() const noexcept { return model_; }

 private:
  MdmModel model_;
};

/// Generic + individual fusion; absorbs every labeled epoch and counts one
/// repetition per flash round.
class AdaptiveClassifier final : public LevelClassifier {
 public:
  explicit AdaptiveClassifier(FusedClassifier fc) : fc_(std::move(fc)) {}
  DistanceVector distances(const Epoch& e) const override { return fc_.fused_distances(e); }
  int target_class() const override { return fc_.generic().recipe.target_class; }
  int nontarget_class() const override { return fc_.generic().recipe.nontarget_class; }
  void learn(const Epoch& e, int label) override { fc_.absorb(e, label); }
  void end_repetition() override { fc_.complete_repetitions(1); }
  const FusedClassifier& state() const noexcept { return fc_; }

 private:
  FusedClassifier fc_;
};

/// In Mode::Adaptive the classifier learns from each repetition after its
/// selection has been made; in Mode::NonAdaptive it is never updated.
LevelResult run_level(const LevelSpec& spec, LevelClassifier& clf, Mode mode);

struct LevelSummary {
  int level = 0;  // 1-based
  double mean_nrd = 0.0;
  double sd_nrd = 0.0;
  int n_capped = 0;
};

struct SessionSummary {
  std::vector<LevelSummary> levels;
  /// Least-squares slope of mean NRD against level index.
  double slope = 0.0;
};

/// Per-level mean and sample standard deviation over sessions.
SessionSummary summarize(const std::vector<std::vector<LevelResult>>& sessions);

/// OLS slope of y against x = 1, 2, …
double ols_slope(const std::vector<double>& y);

struct SessionResult {
  std::vector<LevelResult> levels;
  SessionSummary summary;
};

/// Levels run in order; classifier state carries over between levels.
SessionResult run_session(const std::vector<LevelSpec>& levels, LevelClassifier& clf, Mode mode);

struct PairedSession {
  SessionResult non_adaptive;
  SessionResult adaptive;
};

/// Non-adaptive: MDM fit on the user's training epochs. Adaptive: fusion
/// starting from the generic model with no individual data. Both replay the
/// same level specs.
PairedSession compare_modes(const std::vector<LevelSpec>& levels, const MdmModel& generic,
                            std::span<const Epoch> training, const FusionConfig& fusion = {},
                            const MeanConfig& mean_cfg = {});

/// Columns: session,level,mode,repetition,selected,target,nrd,capped. One
/// row per repetition played; capped is 1 when the level hit its cap.
void write_session_csv_header(std::ostream& out);
void write_session_csv(std::ostream& out, int session, const std::vector<LevelResult>& levels);

struct SyntheticLevelConfig {
  int n_levels = 12;
  int n_items = 36;
  int max_repetitions = 8;
  double snr = kDefaultP300Snr;
  int flashes_per_repetition = 2;
  std::uint64_t seed = 0;
};

/// Levels whose items are drawn from a simulated user; each item's epoch
/// per repetition is the average of its flash epochs.
std::vector<LevelSpec> synthetic_levels(std::shared_ptr<const P300Subject> subject,
                                        const SyntheticLevelConfig& cfg);

/// A simulated user together with a generic model fit on a different
/// simulated user, and calibration data from the user for the non-adaptive
/// run.
struct SyntheticScenarioConfig {
  P300Spec user;                        // shape, SNR and subject seed of the player
  std::uint64_t generic_subject_seed = 1001;
  /// SNR of the data behind the generic model; unset means the user's.
  /// A low value yields a deliberately weak starting point.
  std::optional<double> generic_snr;
  int calibration_targets = 60;
  int calibration_nontargets = 300;
  SyntheticLevelConfig levels;
  Shrinkage shrinkage = AutoShrinkage{};
};

struct SyntheticScenario {
  MdmModel generic;
  std::vector<Epoch> calibration;
  std::vector<LevelSpec> levels;
};

SyntheticScenario make_synthetic_scenario(const SyntheticScenarioConfig& cfg, const MeanConfig& mean_cfg = {});

}  // namespace rmdm
