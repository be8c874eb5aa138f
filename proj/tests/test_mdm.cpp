#include "rmdm/errors.hpp"
#include "rmdm/mdm.hpp"
#include "rmdm/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace rmdm;
using namespace rmdm::testing;

namespace {

MdmModel model_from(std::vector<SpdMatrix> means, std::vector<int> ids) {
  MdmModel m;
  m.class_ids = std::move(ids);
  m.counts.assign(m.class_ids.size(), 1);
  m.means = std::move(means);
  return m;
}

DistanceVector dv(std::vector<int> ids, std::vector<double> values) { return {std::move(ids), std::move(values)}; }

std::vector<Epoch> two_class_mi(std::uint64_t seed, int trials = 30) {
  MiSpec spec = default_mi_spec(2, 6);
  spec.trials_per_class = trials;
  spec.seed = seed;
  return generate_mi(spec);
}

}  // namespace

TEST(Fit, IdenticalEpochsGiveThatFeature) {
  std::mt19937_64 rng(1);
  Epoch a;
  a.fs = 128;
  a.data = gaussian(3, 50, rng);
  a.label = 1;
  Epoch b = a;
  b.data = gaussian(3, 50, rng);
  b.label = 2;
  const std::vector training{a, a, a, b, b};
  const MdmModel m = fit(training, FeatureRecipe{});
  ASSERT_EQ(m.class_ids, (std::vector<int>{1, 2}));
  EXPECT_EQ(m.counts, (std::vector<int>{3, 2}));
  EXPECT_LT(rel_diff(m.means[0].values(), sample_covariance(a).values()), 1e-12);
  EXPECT_LT(rel_diff(m.means[1].values(), sample_covariance(b).values()), 1e-12);
}

TEST(Fit, CongruenceEquivariance) {
  std::mt19937_64 rng(2);
  std::vector<SpdMatrix> feats;
  std::vector<SpdMatrix> moved;
  std::vector<int> labels;
  const Matrix w = random_invertible(5, 30.0, rng);
  for (int k = 0; k < 20; ++k) {
    feats.push_back(random_spd(5, 20.0, rng));
    moved.push_back(congruence(w, feats.back()));
    labels.push_back(k % 2);
  }
  const MdmModel a = fit_features(feats, labels, FeatureRecipe{});
  const MdmModel b = fit_features(moved, labels, FeatureRecipe{});
  for (int z = 0; z < 2; ++z) {
    EXPECT_LT(rel_diff(b.means[z].values(), w.transpose() * a.means[z].values() * w), 1e-7);
  }
}

TEST(Fit, SyntheticMotorImageryModel) {
  const MdmModel m = fit(two_class_mi(3), FeatureRecipe{});
  EXPECT_EQ(m.n_classes(), 2);
  EXPECT_EQ(m.dim(), 6);
  EXPECT_NO_THROW(validate(m));
}

TEST(Fit, OrderInvariant) {
  auto data = two_class_mi(4);
  const MdmModel ref = fit(data, FeatureRecipe{});
  std::mt19937_64 rng(4);
  std::shuffle(data.begin(), data.end(), rng);
  const MdmModel shuffled = fit(data, FeatureRecipe{});
  for (int z = 0; z < 2; ++z) EXPECT_LT(rel_diff(ref.means[z].values(), shuffled.means[z].values()), 1e-9);
}

TEST(Fit, Requirements) {
  auto data = two_class_mi(5, 3);
  std::vector<Epoch> one_class;
  for (const auto& e : data)
    if (e.label == 1) one_class.push_back(e);
  try {
    fit(one_class, FeatureRecipe{});
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("≥ 2 classes"), std::string::npos);
  }
  std::vector<Epoch> thin = one_class;
  thin.push_back(data.back());
  EXPECT_THROW(fit(thin, FeatureRecipe{}), ContractError);
}

TEST(Fit, NonConvergenceNamesClass) {
  auto data = two_class_mi(6, 10);
  MeanConfig cfg;
  cfg.tol = 1e-300;
  cfg.max_iter = 2;
  try {
    fit(data, FeatureRecipe{}, cfg);
    FAIL();
  } catch (const NonConvergence& e) {
    EXPECT_EQ(e.class_id(), 1);
  }
}

TEST(Fit, BuildsMissingErpPrototypes) {
  P300Spec spec;
  spec.n_channels = 4;
  spec.n_target = 10;
  spec.n_nontarget = 20;
  const auto data = generate_p300(spec).epochs;
  FeatureRecipe r;
  r.modality = Modality::P300TwoClass;
  const MdmModel m = fit(data, r);
  ASSERT_EQ(m.recipe.prototypes.size(), 1u);
  EXPECT_EQ(m.recipe.prototypes[0].class_id, kP300Target);
  EXPECT_EQ(m.recipe.prototypes[0].count, 10);
  EXPECT_EQ(m.dim(), 8);

  r.modality = Modality::ErpMulti;
  const MdmModel multi = fit(data, r);
  EXPECT_EQ(multi.recipe.prototypes.size(), 2u);
  EXPECT_EQ(multi.dim(), 12);
}

TEST(Distances, ZeroAtOwnMean) {
  const auto data = two_class_mi(7);
  const MdmModel m = fit(data, FeatureRecipe{});
  const DistanceVector d = distances(m, m.means[0]);
  EXPECT_LT(d.values[0], 1e-10);
  EXPECT_EQ(argmin_class(d), 1);
}

TEST(Distances, CongruenceInvariant) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpdMatrix> means;
    for (int z = 0; z < 4; ++z) means.push_back(random_spd(6, 100.0, rng));
    const SpdMatrix c = random_spd(6, 100.0, rng);
    const Matrix w = random_invertible(6, 100.0, rng);
    std::vector<SpdMatrix> moved;
    for (const auto& m : means) moved.push_back(congruence(w, m));
    const DistanceVector a = distances(model_from(means, {1, 2, 3, 4}), c);
    const DistanceVector b = distances(model_from(moved, {1, 2, 3, 4}), congruence(w, c));
    ASSERT_EQ(a.values.size(), 4u);
    for (int z = 0; z < 4; ++z) EXPECT_LT(rel_diff(a.values[z], b.values[z]), 1e-8);
  }
}

TEST(Predict, TieGoesToLowestClass) {
  const SpdMatrix m = SpdMatrix::identity(3);
  const MdmModel model = model_from({m, m, m}, {2, 5, 9});
  EXPECT_EQ(argmin_class(distances(model, SpdMatrix::identity(3))), 2);
  EXPECT_EQ(argmin_class(dv({4, 7, 1}, {1.0, 0.5, 0.5})), 1);
}

TEST(Predict, PredictionInvariantUnderCommonCongruence) {
  auto train = two_class_mi(9);
  auto test = two_class_mi(10);
  std::vector<SpdMatrix> f_train;
  std::vector<int> labels;
  for (const auto& e : train) {
    f_train.push_back(sample_covariance(e));
    labels.push_back(*e.label);
  }
  std::mt19937_64 rng(9);
  const Matrix w = random_invertible(6, 1e2, rng);
  std::vector<SpdMatrix> g_train;
  for (const auto& f : f_train) g_train.push_back(congruence(w, f));
  const MdmModel a = fit_features(f_train, labels, FeatureRecipe{});
  const MdmModel b = fit_features(g_train, labels, FeatureRecipe{});
  for (const auto& e : test) {
    const SpdMatrix f = sample_covariance(e);
    EXPECT_EQ(argmin_class(distances(a, f)), argmin_class(distances(b, congruence(w, f))));
  }
}

TEST(SoftScores, Basics) {
  const auto uniform = soft_scores(dv({1, 2, 3}, {2.0, 2.0, 2.0}));
  for (double p : uniform) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  // τ is the mean squared distance, so the limit is scale-free:
  // p = 1 / (1 + (K − 1)·exp(−K / (K − 1))).
  for (double far : {3.0, 30.0, 3e5}) {
    const auto sharp = soft_scores(dv({1, 2, 3}, {0.0, far, far}));
    EXPECT_NEAR(sharp[0], 1.0 / (1.0 + 2.0 * std::exp(-1.5)), 1e-12);
    EXPECT_GT(sharp[0], sharp[1]);
  }
  const auto zeros = soft_scores(dv({1, 2}, {0.0, 0.0}));
  EXPECT_EQ(zeros[0], 0.5);
}

TEST(SoftScores, ArgmaxMatchesArgmin) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> k(2, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = k(rng);
    DistanceVector d;
    for (int i = 0; i < n; ++i) {
      d.class_ids.push_back(3 * i + 1);
      d.values.push_back(trial % 10 == 0 && i > 0 ? d.values[0] : u(rng));
    }
    const auto p = soft_scores(d);
    double sum = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum += p[i];
      if (p[i] > p[best]) best = i;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(d.class_ids[best], argmin_class(d));
  }
}

TEST(CumulativeSelect, SingleRepetitionPicksTargetLikeItem) {
  std::mt19937_64 rng(12);
  const SpdMatrix mt = random_spd(4, 10.0, rng);
  const SpdMatrix mn = random_spd(4, 10.0, rng);
  MdmModel model = model_from({mn, mt}, {0, 1});
  CumulativeSelector sel(1, 0);
  std::map<int, DistanceVector> rep;
  for (int item = 0; item < 6; ++item) rep.emplace(item, distances(model, item == 4 ? mt : mn));
  sel.add_repetition(rep);
  EXPECT_EQ(sel.selected(), 4);
  sel.add_repetition(rep);
  EXPECT_EQ(sel.selected(), 4);
  EXPECT_EQ(sel.repetitions(), 2);
}

TEST(CumulativeSelect, IncrementalEqualsFromScratch) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<std::map<int, DistanceVector>> reps;
  CumulativeSelector inc(1, 0);
  for (int r = 0; r < 12; ++r) {
    std::map<int, DistanceVector> rep;
    for (int item = 0; item < 36; ++item) rep.emplace(item, dv({0, 1}, {u(rng), u(rng)}));
    reps.push_back(rep);
    inc.add_repetition(rep);
    std::map<int, double> scratch;
    for (const auto& past : reps)
      for (const auto& [item, d] : past) scratch[item] += d.values[1] - d.values[0];
    int best = 0;
    for (const auto& [item, s] : scratch)
      if (s < scratch.at(best)) best = item;
    EXPECT_EQ(inc.selected(), best);
    for (const auto& [item, s] : scratch) EXPECT_EQ(inc.scores().at(item), s);
  }
}

TEST(CumulativeSelect, TiesAndItemSets) {
  CumulativeSelector sel(1, 0);
  std::map<int, DistanceVector> rep;
  for (int item : {7, 3, 5}) rep.emplace(item, dv({0, 1}, {1.0, 1.0}));
  sel.add_repetition(rep);
  EXPECT_EQ(sel.selected(), 3);
  std::map<int, DistanceVector> other = rep;
  other.erase(5);
  other.emplace(6, dv({0, 1}, {1.0, 1.0}));
  EXPECT_THROW(sel.add_repetition(other), ContractError);
  EXPECT_THROW(CumulativeSelector(1, 0).selected(), ContractError);
}

TEST(CumulativeSelect, DuplicatedRepetitionsKeepSelection) {
  P300Spec spec;
  spec.n_channels = 4;
  spec.n_target = 20;
  spec.n_nontarget = 40;
  spec.snr = 0.5;
  const auto data = generate_p300(spec).epochs;
  FeatureRecipe r;
  r.modality = Modality::P300TwoClass;
  const MdmModel m = fit(data, r);
  Repetition rep;
  for (int item = 0; item < 8; ++item) rep.emplace(item, data[static_cast<std::size_t>(item == 3 ? 0 : 20 + item)]);
  const std::vector once{rep};
  const std::vector twice{rep, rep};
  EXPECT_EQ(cumulative_select(m, once), cumulative_select(m, twice));
  EXPECT_THROW(cumulative_select(fit(generate_mi(default_mi_spec(2, 3)), FeatureRecipe{}), once), ContractError);
}

TEST(Auc, KnownValues) {
  const std::vector<ScoredLabel> sep{{0.1, false}, {0.2, false}, {0.8, true}, {0.9, true}};
  EXPECT_EQ(auc(sep), 1.0);
  const std::vector<ScoredLabel> flat{{1.0, false}, {1.0, true}, {1.0, true}, {1.0, false}};
  EXPECT_EQ(auc(flat), 0.5);
  const std::vector<ScoredLabel> mixed{{0.1, true}, {0.2, false}, {0.3, true}, {0.3, false}};
  // Pairs (pos, neg): (0.1,0.2)=0, (0.1,0.3)=0, (0.3,0.2)=1, (0.3,0.3)=0.5.
  EXPECT_DOUBLE_EQ(auc(mixed), 1.5 / 4.0);
  const std::vector<ScoredLabel> single{{0.1, true}, {0.2, true}};
  EXPECT_THROW(auc(single), ContractError);
}

TEST(Auc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> coarse(0, 20);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredLabel> s;
    for (int i = 0; i < 80; ++i) s.push_back({static_cast<double>(coarse(rng)), coin(rng)});
    double pairs = 0.0;
    double wins = 0.0;
    for (const auto& p : s)
      for (const auto& n : s) {
        if (!p.positive || n.positive) continue;
        pairs += 1.0;
        wins += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
      }
    if (pairs == 0.0) continue;
    EXPECT_NEAR(auc(s), wins / pairs, 1e-12);
  }
}

TEST(Auc, IndependentLabelsNearHalf) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<ScoredLabel> s;
  for (int i = 0; i < 4000; ++i) s.push_back({n(rng), coin(rng)});
  EXPECT_NEAR(auc(s), 0.5, 3.0 / std::sqrt(4000.0));
}
