#include "rmdm/adaptive.hpp"

#include "rmdm/errors.hpp"

#include <algorithm>
#include <limits>

namespace rmdm {

namespace {

std::vector<double> sum_normalized(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  std::vector<double> out(v.size(), 0.0);
  if (s > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / s;
  }
  return out;
}

}  // namespace

FusedClassifier::FusedClassifier(MdmModel generic, FusionConfig cfg)
    : generic_(std::move(generic)), cfg_(cfg) {
  validate(generic_);
  if (cfg_.ramp < 1) throw ContractError("fusion: ramp must be >= 1");
}

double FusedClassifier::alpha() const noexcept {
  return std::min(1.0, static_cast<double>(n_rep_) / static_cast<double>(cfg_.ramp));
}

std::optional<MdmModel> FusedClassifier::individual() const {
  if (classes_.size() != generic_.class_ids.size()) return std::nullopt;
  MdmModel m;
  m.recipe = generic_.recipe;
  for (const auto& [z, st] : classes_) {
    m.class_ids.push_back(z);
    m.means.push_back(st.mean);
    m.counts.push_back(st.count);
  }
  return m;
}

DistanceVector FusedClassifier::fused_distances(const SpdMatrix& feature) const {
  const double a = alpha();
  const bool have_individual = classes_.size() == generic_.class_ids.size();
  if (a > 0.0 && !have_individual) {
    throw ContractError("fused_distances: alpha > 0 but the individual model has not seen every class");
  }
  DistanceVector out;
  out.class_ids = generic_.class_ids;
  out.values.assign(out.class_ids.size(), 0.0);
  if (a < 1.0) {
    const auto g = sum_normalized(distances(generic_, feature).values);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += (1.0 - a) * g[i];
  }
  if (a > 0.0) {
    std::vector<double> raw;
    raw.reserve(classes_.size());
    for (const auto& [z, st] : classes_) raw.push_back(riemann_distance(st.mean, feature));
    const auto ind = sum_normalized(raw);
    for (std::size_t i = 0; i < ind.size(); ++i) out.values[i] += a * ind[i];
  }
  return out;
}

DistanceVector FusedClassifier::fused_distances(const Epoch& e) const {
  return fused_distances(compute_feature(generic_.recipe, e));
}

void FusedClassifier::absorb(const Epoch& e, int label) {
  absorb_feature(compute_feature(generic_.recipe, e), label);
}

void FusedClassifier::absorb_feature(const SpdMatrix& feature, int label) {
  generic_.index_of(label);
  if (feature.dim() != generic_.dim()) throw ContractError("absorb: feature dimension does not match the model");
  auto it = classes_.find(label);
  if (it == classes_.end()) {
    ClassState st{feature, 1, {}};
    if (cfg_.rule == UpdateRule::BatchRefit) st.history.push_back(feature);
    classes_.emplace(label, std::move(st));
    return;
  }
  ClassState& st = it->second;
  if (cfg_.rule == UpdateRule::BatchRefit) {
    st.history.push_back(feature);
    try {
      st.mean = geometric_mean(st.history, {}, cfg_.mean_cfg);
    } catch (const NonConvergence& err) {
      throw err.with_class(label);
    }
  } else {
    st.mean = geodesic(st.mean, feature, 1.0 / static_cast<double>(st.count + 1));
  }
  st.count += 1;
}

void FusedClassifier::complete_repetitions(int n) {
  if (n < 0) throw ContractError("complete_repetitions: negative count");
  n_rep_ += n;
}

void FusedClassifier::seed_prior(std::span<const Epoch> prior) {
  std::map<int, int> per_class;
  for (const auto& e : prior) {
    if (!e.label) continue;
    absorb(e, *e.label);
    per_class[*e.label] += 1;
  }
  int fewest = per_class.size() == generic_.class_ids.size() ? std::numeric_limits<int>::max() : 0;
  for (const auto& [z, n] : per_class) fewest = std::min(fewest, n);
  n_rep_ = std::max(n_rep_, std::min(cfg_.ramp, fewest));
}

void FusedClassifier::restore(int n_rep, std::map<int, ClassState> classes) {
  if (n_rep < 0) throw ContractError("restore: negative n_rep");
  for (const auto& [z, st] : classes) {
    generic_.index_of(z);
    if (st.mean.dim() != generic_.dim()) throw ContractError("restore: mean dimension does not match the model");
  }
  n_rep_ = n_rep;
  classes_ = std::move(classes);
}

}  // namespace rmdm
