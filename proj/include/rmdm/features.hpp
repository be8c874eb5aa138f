#pragma once

// Covariance-type feature matrices built from epochs. Every builder
// assembles the raw (pre-shrinkage) matrix block by block, then regularizes
// it towards a scaled identity so that the result is SPD.

#include "rmdm/dsp.hpp"
#include "rmdm/spd.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rmdm {

/// Grand-average ERP of one class: the temporal template stacked above the
/// trial in a super-trial.
struct Prototype {
  int class_id = 0;
  Matrix mean;  // N × T
  int count = 0;
};

enum class Modality { MotorImagery, ErpMulti, P300TwoClass, Ssvep, MultiUserP300 };

std::string to_string(Modality m);
/// Accepts "mi", "erp", "p300", "ssvep", "mu_p300".
Modality parse_modality(const std::string& s);

struct AutoShrinkage {};
/// Either a fixed coefficient γ ∈ [0, 1] or the automatic ladder.
using Shrinkage = std::variant<double, AutoShrinkage>;

inline constexpr double kShrinkageLadder[] = {1e-8, 1e-6, 1e-4, 1e-2, 1e-1};

struct FeatureRecipe {
  Modality modality = Modality::MotorImagery;
  Shrinkage shrinkage = AutoShrinkage{};
  // ERP modes: prototypes in ascending class-id order (one for P300 modes).
  std::vector<Prototype> prototypes;
  // Two-class P300 modes.
  int target_class = 1;
  int nontarget_class = 0;
  // SSVEP mode.
  std::vector<double> freqs;
  double width_hz = kSsvepWidthHz;
  int order = kSsvepOrder;
  // Multi-user mode: the epoch stacks M subjects' N channels each.
  int n_subjects = 1;
};

/// Throws ContractError when fields required by the modality are missing
/// or fields it does not use are set.
void validate(const FeatureRecipe& r);

/// (1 − γ)·C + γ·(tr C / dim)·I. The automatic ladder returns the first γ
/// whose result passes the SPD check. An all-zero input uses a unit-scale
/// identity target.
SpdMatrix shrink(const SymmetricMatrix& c, const Shrinkage& gamma);

/// A Bᵀ / (T − 1) for two N×T and M×T blocks, computed in time order.
Matrix cross_scatter(const Matrix& a, const Matrix& b);

/// X Xᵀ / (T − 1). Columns are first put into a canonical (lexicographic)
/// order so that the result is bit-identical under any sample permutation.
SymmetricMatrix scatter(const Matrix& x);

/// Raw (unshrunk) covariance of one epoch.
SymmetricMatrix sample_covariance_raw(const Epoch& e);
SpdMatrix sample_covariance(const Epoch& e, const Shrinkage& gamma = AutoShrinkage{});

/// Element-wise mean of each requested class's epochs. An empty class list
/// means every label present, ascending. Throws ContractError naming any
/// class without epochs.
std::vector<Prototype> build_prototypes(std::span<const Epoch> training,
                                        const std::vector<int>& classes = {});

/// Covariance of the stacked super-trial [P_1; …; P_Z; X]. Block layout:
/// the Z prototype blocks first, in the given order, then the trial.
SymmetricMatrix erp_super_cov_raw(const Epoch& e, std::span<const Prototype> protos);
SpdMatrix erp_super_cov(const Epoch& e, std::span<const Prototype> protos,
                        const Shrinkage& gamma = AutoShrinkage{});

/// 2N × 2N covariance of [P_target; X].
SymmetricMatrix p300_super_cov_raw(const Epoch& e, const Prototype& target);
SpdMatrix p300_super_cov(const Epoch& e, const Prototype& target,
                         const Shrinkage& gamma = AutoShrinkage{});

/// Block-diagonal NF × NF matrix of the per-band covariances; every
/// off-diagonal block is exactly zero. Shrinkage applies per block, towards
/// one identity scale shared by all blocks (the mean band power).
SpdMatrix ssvep_block_cov(std::span<const Epoch> bank, const Shrinkage& gamma = AutoShrinkage{});

/// (M + 1)N × (M + 1)N covariance of [P_target; X_1; …; X_M], including the
/// inter-subject blocks X_i X_jᵀ.
SymmetricMatrix mu_p300_super_cov_raw(std::span<const Epoch> subjects, const Prototype& target);
SpdMatrix mu_p300_super_cov(std::span<const Epoch> subjects, const Prototype& target,
                            const Shrinkage& gamma = AutoShrinkage{});

/// Split an epoch stacking M subjects' channels into M epochs of N rows.
std::vector<Epoch> split_subjects(const Epoch& stacked, int n_subjects);

/// Feature matrix of one epoch under a recipe.
SpdMatrix compute_feature(const FeatureRecipe& recipe, const Epoch& e);

/// Feature dimension a recipe produces for epochs of n_channels rows.
int feature_dim(const FeatureRecipe& recipe, int n_channels);

}  // namespace rmdm
