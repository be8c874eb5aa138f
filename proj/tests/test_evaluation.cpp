#include "rmdm/errors.hpp"
#include "rmdm/evaluation.hpp"
#include "rmdm/synthetic.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace rmdm;

namespace {

std::vector<Epoch> mi_data(int per_class, std::uint64_t seed) {
  MiSpec s = default_mi_spec(3, 4);
  s.trials_per_class = per_class;
  s.n_samples = 256;
  s.seed = seed;
  return generate_mi(s);
}

FeatureRecipe mi_recipe() {
  FeatureRecipe r;
  r.modality = Modality::MotorImagery;
  return r;
}

}  // namespace

TEST(Evaluate, CountsLabeledTrialsOnly) {
  const MdmModel m = fit(mi_data(20, 1), mi_recipe());
  auto test = mi_data(10, 2);
  test[0].label.reset();
  test[15].label.reset();
  const EvalReport r = evaluate(m, test);
  EXPECT_EQ(r.n_trials, 28);
  EXPECT_EQ(r.predicted.size(), 28u);
  EXPECT_EQ(r.truth.size(), 28u);
  int correct = 0;
  for (std::size_t i = 0; i < r.truth.size(); ++i) correct += r.truth[i] == r.predicted[i];
  EXPECT_EQ(r.n_correct, correct);
  EXPECT_DOUBLE_EQ(r.accuracy, correct / 28.0);
  EXPECT_GT(r.accuracy, 0.9);
  EXPECT_FALSE(r.auc.has_value());
}

TEST(Evaluate, UnlabeledSetIsRejected) {
  const MdmModel m = fit(mi_data(10, 1), mi_recipe());
  auto test = mi_data(2, 2);
  for (auto& e : test) e.label.reset();
  try {
    evaluate(m, test);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("unlabeled test set"), std::string::npos);
  }
  EXPECT_THROW(crossval(test, mi_recipe(), 2, 0), ContractError);
}

TEST(Evaluate, P300ReportsAuc) {
  P300Spec s;
  s.n_channels = 8;
  s.n_samples = 64;
  s.fs = 64.0;
  s.snr = 0.5;
  s.n_target = 30;
  s.n_nontarget = 60;
  FeatureRecipe r;
  r.modality = Modality::P300TwoClass;
  const MdmModel m = fit(generate_p300(s).epochs, r);
  s.seed = 9;
  const EvalReport rep = evaluate(m, generate_p300(s).epochs);
  ASSERT_TRUE(rep.auc.has_value());
  EXPECT_GT(*rep.auc, 0.9);
  EXPECT_LE(*rep.auc, 1.0);
}

TEST(Folds, StratifiedAndBalanced) {
  auto data = mi_data(10, 3);
  data.resize(27);  // classes of 10, 10, 7
  const auto folds = assign_folds(data, 4, 5);
  std::map<int, int> sizes;
  std::map<std::pair<int, int>, int> per_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ++sizes[folds[i]];
    ++per_class[{*data[i].label, folds[i]}];
  }
  ASSERT_EQ(sizes.size(), 4u);
  for (const auto& [f, n] : sizes) EXPECT_NEAR(n, 27.0 / 4.0, 1.0);
  for (int z = 1; z <= 3; ++z) {
    std::set<int> counts;
    for (int f = 0; f < 4; ++f) counts.insert(per_class[{z, f}]);
    EXPECT_LE(*counts.rbegin() - *counts.begin(), 1);
  }
  EXPECT_EQ(assign_folds(data, 4, 5), folds);
  EXPECT_NE(assign_folds(data, 4, 6), folds);
}

TEST(Folds, RejectsBadK) {
  const auto data = mi_data(2, 1);
  EXPECT_THROW(assign_folds(data, 1, 0), ContractError);
  try {
    assign_folds(data, 7, 0);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("exceeds"), std::string::npos);
  }
}

TEST(Crossval, OneReportPerFoldCoveringEveryTrial) {
  const auto data = mi_data(16, 4);
  const auto reports = crossval(data, mi_recipe(), 8, 1);
  ASSERT_EQ(reports.size(), 8u);
  int total = 0;
  for (std::size_t f = 0; f < reports.size(); ++f) {
    EXPECT_EQ(reports[f].fold, static_cast<int>(f));
    total += reports[f].report.n_trials;
    EXPECT_GT(reports[f].report.accuracy, 0.8);
  }
  EXPECT_EQ(total, 48);
}

TEST(Crossval, ErpPrototypesComeFromTrainingSplit) {
  P300Spec s;
  s.n_channels = 4;
  s.n_samples = 32;
  s.fs = 32.0;
  s.snr = 1.0;
  s.n_target = 20;
  s.n_nontarget = 40;
  const auto data = generate_p300(s).epochs;
  FeatureRecipe r;
  r.modality = Modality::P300TwoClass;
  const auto folds = assign_folds(data, 5, 2);
  const auto reports = crossval(data, r, 5, 2);
  // Reproduce fold 0 by hand.
  std::vector<Epoch> train, test;
  for (std::size_t i = 0; i < data.size(); ++i) (folds[i] == 0 ? test : train).push_back(data[i]);
  const EvalReport manual = evaluate(fit(train, r), test);
  EXPECT_EQ(reports[0].report.predicted, manual.predicted);
  EXPECT_EQ(reports[0].report.auc, manual.auc);
}
