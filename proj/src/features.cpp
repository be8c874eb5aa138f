#include "rmdm/features.hpp"

#include "rmdm/errors.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

namespace rmdm {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
  }
}

// Covariance of the vertically stacked blocks, assembled block-wise.
SymmetricMatrix stacked_covariance(const std::vector<const Matrix*>& blocks) {
  const Eigen::Index n = blocks.front()->rows();
  const auto k = static_cast<Eigen::Index>(blocks.size());
  Matrix full(n * k, n * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    full.block(i * n, i * n, n, n) = scatter(*blocks[static_cast<std::size_t>(i)]).values();
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const Matrix c = cross_scatter(*blocks[static_cast<std::size_t>(i)], *blocks[static_cast<std::size_t>(j)]);
      full.block(i * n, j * n, n, n) = c;
      full.block(j * n, i * n, n, n) = c.transpose();
    }
  }
  return SymmetricMatrix(full);
}

const Prototype& find_prototype(const FeatureRecipe& r, int class_id) {
  for (const auto& p : r.prototypes) {
    if (p.class_id == class_id) return p;
  }
  throw ContractError("recipe: no prototype for class " + std::to_string(class_id));
}

}  // namespace

std::string to_string(Modality m) {
  switch (m) {
    case Modality::MotorImagery: return "mi";
    case Modality::ErpMulti: return "erp";
    case Modality::P300TwoClass: return "p300";
    case Modality::Ssvep: return "ssvep";
    case Modality::MultiUserP300: return "mu_p300";
  }
  return "unknown";
}

Modality parse_modality(const std::string& s) {
  if (s == "mi") return Modality::MotorImagery;
  if (s == "erp") return Modality::ErpMulti;
  if (s == "p300") return Modality::P300TwoClass;
  if (s == "ssvep") return Modality::Ssvep;
  if (s == "mu_p300") return Modality::MultiUserP300;
  throw ContractError("unknown modality '" + s + "' (expected mi, erp, p300, ssvep or mu_p300)");
}

void validate(const FeatureRecipe& r) {
  if (const auto* g = std::get_if<double>(&r.shrinkage); g && !(*g >= 0.0 && *g <= 1.0)) {
    throw ContractError("recipe: shrinkage must lie in [0, 1]");
  }
  const bool erp = r.modality == Modality::ErpMulti || r.modality == Modality::P300TwoClass ||
                   r.modality == Modality::MultiUserP300;
  if (!erp && !r.prototypes.empty()) throw ContractError("recipe: prototypes are only used by ERP modalities");
  if (r.modality != Modality::Ssvep && !r.freqs.empty()) throw ContractError("recipe: frequencies are only used by SSVEP");
  if (r.modality != Modality::MultiUserP300 && r.n_subjects != 1) {
    throw ContractError("recipe: n_subjects is only used by the multi-user modality");
  }
  switch (r.modality) {
    case Modality::MotorImagery: break;
    case Modality::ErpMulti:
      if (r.prototypes.empty()) throw ContractError("recipe: ERP modality requires prototypes");
      for (std::size_t i = 1; i < r.prototypes.size(); ++i) {
        if (r.prototypes[i - 1].class_id >= r.prototypes[i].class_id) {
          throw ContractError("recipe: prototypes must be in ascending class order");
        }
        require_same_shape(r.prototypes[0].mean, r.prototypes[i].mean, "recipe prototypes");
      }
      break;
    case Modality::MultiUserP300:
      if (r.n_subjects < 1) throw ContractError("recipe: n_subjects must be >= 1");
      [[fallthrough]];
    case Modality::P300TwoClass:
      if (r.target_class == r.nontarget_class) throw ContractError("recipe: target and non-target classes must differ");
      if (r.prototypes.size() != 1 || r.prototypes[0].class_id != r.target_class) {
        throw ContractError("recipe: P300 modality requires exactly one target-class prototype");
      }
      break;
    case Modality::Ssvep:
      if (r.freqs.empty()) throw ContractError("recipe: SSVEP modality requires frequencies");
      if (!(r.width_hz > 0.0) || r.order < 1) throw ContractError("recipe: invalid SSVEP filter settings");
      break;
  }
}

SpdMatrix shrink(const SymmetricMatrix& c, const Shrinkage& gamma) {
  const int n = c.dim();
  double scale = c.values().trace() / n;
  if (scale <= 0.0) scale = 1.0;
  // The spectrum of (1 − γ)C + γsI is (1 − γ)λ + γs.
  const Vector raw = eigenvalues(c);
  auto apply = [&](double g) {
    Vector ev = ((1.0 - g) * raw.array() + g * scale).matrix();
    return std::pair{SymmetricMatrix((1.0 - g) * c.values() + (g * scale) * Matrix::Identity(n, n)), ev};
  };
  if (const auto* g = std::get_if<double>(&gamma)) {
    if (!(*g >= 0.0 && *g <= 1.0)) throw ContractError("shrink: gamma must lie in [0, 1]");
    auto [m, ev] = apply(*g);
    return SpdMatrix(std::move(m), std::move(ev));
  }
  for (double g : kShrinkageLadder) {
    const Vector ev = ((1.0 - g) * raw.array() + g * scale).matrix();
    if (passes_spd_check(ev)) {
      auto [m, ev2] = apply(g);
      return SpdMatrix(std::move(m), std::move(ev2));
    }
  }
  throw NotPositiveDefinite("shrink: no ladder coefficient yields an SPD matrix");
}

Matrix cross_scatter(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ContractError("cross_scatter: sample counts differ");
  if (a.cols() < 2) throw ContractError("covariance: need at least 2 samples");
  return (a * b.transpose()) / static_cast<double>(a.cols() - 1);
}

SymmetricMatrix scatter(const Matrix& x) {
  if (x.cols() < 2) throw ContractError("covariance: need at least 2 samples");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index p, Eigen::Index q) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (x(r, p) != x(r, q)) return x(r, p) < x(r, q);
    }
    return false;
  });
  Matrix sorted(x.rows(), x.cols());
  for (std::size_t t = 0; t < order.size(); ++t) sorted.col(static_cast<Eigen::Index>(t)) = x.col(order[t]);
  return SymmetricMatrix((sorted * sorted.transpose()) / static_cast<double>(x.cols() - 1));
}

SymmetricMatrix sample_covariance_raw(const Epoch& e) {
  if (e.n_samples() < 2) throw ContractError("sample_covariance: need T >= 2");
  return scatter(e.data);
}

SpdMatrix sample_covariance(const Epoch& e, const Shrinkage& gamma) {
  return shrink(sample_covariance_raw(e), gamma);
}

std::vector<Prototype> build_prototypes(std::span<const Epoch> training, const std::vector<int>& classes) {
  std::map<int, std::pair<Matrix, int>> acc;
  const Epoch* first = nullptr;
  for (const auto& e : training) {
    if (!e.label) continue;
    if (first == nullptr) {
      first = &e;
    } else {
      require_same_shape(first->data, e.data, "build_prototypes");
      if (first->fs != e.fs) throw ContractError("build_prototypes: sampling rates differ");
    }
    auto [it, inserted] = acc.try_emplace(*e.label, Matrix::Zero(e.data.rows(), e.data.cols()), 0);
    it->second.first += e.data;
    it->second.second += 1;
  }
  std::vector<int> wanted = classes;
  if (wanted.empty()) {
    for (const auto& [z, unused] : acc) wanted.push_back(z);
  }
  std::sort(wanted.begin(), wanted.end());
  std::string missing;
  for (int z : wanted) {
    if (!acc.contains(z)) missing += (missing.empty() ? "" : ", ") + std::to_string(z);
  }
  if (!missing.empty()) throw ContractError("build_prototypes: no training epochs for class " + missing);
  if (wanted.empty()) throw ContractError("build_prototypes: no labeled training epochs");

  std::vector<Prototype> out;
  for (int z : wanted) {
    const auto& [sum, count] = acc.at(z);
    out.push_back({z, sum / static_cast<double>(count), count});
  }
  return out;
}

SymmetricMatrix erp_super_cov_raw(const Epoch& e, std::span<const Prototype> protos) {
  if (protos.empty()) throw ContractError("erp_super_cov: no prototypes");
  std::vector<const Matrix*> blocks;
  for (const auto& p : protos) {
    require_same_shape(p.mean, e.data, "erp_super_cov");
    blocks.push_back(&p.mean);
  }
  blocks.push_back(&e.data);
  return stacked_covariance(blocks);
}

SpdMatrix erp_super_cov(const Epoch& e, std::span<const Prototype> protos, const Shrinkage& gamma) {
  return shrink(erp_super_cov_raw(e, protos), gamma);
}

SymmetricMatrix p300_super_cov_raw(const Epoch& e, const Prototype& target) {
  return erp_super_cov_raw(e, std::span<const Prototype>(&target, 1));
}

SpdMatrix p300_super_cov(const Epoch& e, const Prototype& target, const Shrinkage& gamma) {
  return shrink(p300_super_cov_raw(e, target), gamma);
}

SpdMatrix ssvep_block_cov(std::span<const Epoch> bank, const Shrinkage& gamma) {
  if (bank.empty()) throw ContractError("ssvep_block_cov: empty filter bank");
  const Eigen::Index n = bank[0].data.rows();
  const auto f = static_cast<Eigen::Index>(bank.size());
  std::vector<SymmetricMatrix> blocks;
  std::vector<Vector> spectra;
  double trace = 0.0;
  for (const auto& band : bank) {
    require_same_shape(bank[0].data, band.data, "ssvep_block_cov");
    blocks.push_back(sample_covariance_raw(band));
    spectra.push_back(eigenvalues(blocks.back()));
    trace += blocks.back().values().trace();
  }
  // One identity target for all blocks, so the assembled spectrum (the
  // union of the block spectra) is what the ladder checks.
  double scale = trace / static_cast<double>(n * f);
  if (scale <= 0.0) scale = 1.0;
  auto spectrum = [&](double g) {
    Vector all(n * f);
    for (Eigen::Index i = 0; i < f; ++i) {
      all.segment(i * n, n) = ((1.0 - g) * spectra[static_cast<std::size_t>(i)].array() + g * scale).matrix();
    }
    std::sort(all.begin(), all.end(), std::greater<>());
    return all;
  };
  auto assemble = [&](double g) {
    Matrix full = Matrix::Zero(n * f, n * f);
    for (Eigen::Index i = 0; i < f; ++i) {
      full.block(i * n, i * n, n, n) =
          (1.0 - g) * blocks[static_cast<std::size_t>(i)].values() + (g * scale) * Matrix::Identity(n, n);
    }
    return SpdMatrix(SymmetricMatrix(full), spectrum(g));
  };
  if (const auto* g = std::get_if<double>(&gamma)) {
    if (!(*g >= 0.0 && *g <= 1.0)) throw ContractError("shrink: gamma must lie in [0, 1]");
    return assemble(*g);
  }
  for (double g : kShrinkageLadder) {
    if (passes_spd_check(spectrum(g))) return assemble(g);
  }
  throw NotPositiveDefinite("ssvep_block_cov: no ladder coefficient yields an SPD matrix");
}

SymmetricMatrix mu_p300_super_cov_raw(std::span<const Epoch> subjects, const Prototype& target) {
  if (subjects.empty()) throw ContractError("mu_p300_super_cov: no subjects");
  std::vector<const Matrix*> blocks{&target.mean};
  for (const auto& s : subjects) {
    if (s.data.cols() != target.mean.cols()) {
      throw ContractError("mu_p300_super_cov: subject epochs are not time-aligned with the prototype (" +
                          std::to_string(s.data.cols()) + " vs " + std::to_string(target.mean.cols()) +
                          " samples)");
    }
    require_same_shape(target.mean, s.data, "mu_p300_super_cov");
    blocks.push_back(&s.data);
  }
  return stacked_covariance(blocks);
}

SpdMatrix mu_p300_super_cov(std::span<const Epoch> subjects, const Prototype& target, const Shrinkage& gamma) {
  return shrink(mu_p300_super_cov_raw(subjects, target), gamma);
}

std::vector<Epoch> split_subjects(const Epoch& stacked, int n_subjects) {
  if (n_subjects < 1 || stacked.n_channels() % n_subjects != 0) {
    throw ContractError("split_subjects: " + std::to_string(stacked.n_channels()) +
                        " channels do not divide into " + std::to_string(n_subjects) + " subjects");
  }
  const int n = stacked.n_channels() / n_subjects;
  std::vector<Epoch> out;
  for (int m = 0; m < n_subjects; ++m) {
    Epoch e;
    e.data = stacked.data.middleRows(m * n, n);
    e.fs = stacked.fs;
    e.label = stacked.label;
    if (!stacked.channels.empty()) {
      e.channels.assign(stacked.channels.begin() + m * n, stacked.channels.begin() + (m + 1) * n);
    }
    out.push_back(std::move(e));
  }
  return out;
}

SpdMatrix compute_feature(const FeatureRecipe& r, const Epoch& e) {
  switch (r.modality) {
    case Modality::MotorImagery:
      return sample_covariance(e, r.shrinkage);
    case Modality::ErpMulti:
      return erp_super_cov(e, r.prototypes, r.shrinkage);
    case Modality::P300TwoClass:
      return p300_super_cov(e, find_prototype(r, r.target_class), r.shrinkage);
    case Modality::Ssvep: {
      const auto bank = ssvep_filter_bank(e, r.freqs, r.width_hz, r.order);
      return ssvep_block_cov(bank, r.shrinkage);
    }
    case Modality::MultiUserP300: {
      const auto subjects = split_subjects(e, r.n_subjects);
      return mu_p300_super_cov(subjects, find_prototype(r, r.target_class), r.shrinkage);
    }
  }
  throw ContractError("compute_feature: unknown modality");
}

int feature_dim(const FeatureRecipe& r, int n_channels) {
  switch (r.modality) {
    case Modality::MotorImagery: return n_channels;
    case Modality::ErpMulti: return n_channels * (static_cast<int>(r.prototypes.size()) + 1);
    case Modality::P300TwoClass: return 2 * n_channels;
    case Modality::Ssvep: return n_channels * static_cast<int>(r.freqs.size());
    case Modality::MultiUserP300: return n_channels / r.n_subjects * (r.n_subjects + 1);
  }
  return 0;
}

}  // namespace rmdm
