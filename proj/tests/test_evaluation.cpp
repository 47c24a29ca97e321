#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psodr/evaluation.hpp"

namespace psodr {
namespace {

std::vector<GroupLabel> balanced_groups(std::size_t count) {
  std::vector<GroupLabel> g;
  for (std::size_t i = 0; i < count; ++i) g.push_back({static_cast<int>(i), static_cast<int>(i % 2)});
  return g;
}

void expect_disjoint(const FoldSplit& s) {
  std::set<int> seen;
  for (const auto* set : {&s.train_groups, &s.val_groups, &s.test_groups})
    for (int g : *set) EXPECT_TRUE(seen.insert(g).second) << "group " << g << " reused in fold " << s.fold;
}

TEST(Informedness, Examples) {
  EXPECT_DOUBLE_EQ(*informedness({50, 0, 50, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*informedness({50, 50, 0, 0}), 0.0);
  EXPECT_NEAR(*informedness({45, 10, 40, 5}), 0.7, 1e-15);
  EXPECT_FALSE(informedness({0, 3, 4, 0}).has_value());
  EXPECT_FALSE(informedness({3, 0, 0, 2}).has_value());
}

TEST(Informedness, SymmetricUnderClassSwap) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    ContingencyTable t{1 + rng.index(50), rng.index(50), 1 + rng.index(50), rng.index(50)};
    ContingencyTable swapped{t.tn, t.fn, t.tp, t.fp};
    EXPECT_NEAR(*informedness(t), *informedness(swapped), 1e-15);
  }
}

TEST(MakeSplits, CompetitionSizedPlan) {
  CvSpec spec{10, 20, 0.90, 0.05, 0.05, 3};
  const auto groups = balanced_groups(280);
  const auto plan = make_splits(groups, spec);
  ASSERT_EQ(plan.folds.size(), 200u);
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.train_groups.size(), 252u);
    EXPECT_EQ(f.val_groups.size(), 14u);
    EXPECT_EQ(f.test_groups.size(), 14u);
    expect_disjoint(f);
  }
  // Within one rep the test blocks partition the groups.
  std::set<int> tested;
  for (std::size_t f = 0; f < 20; ++f) tested.insert(plan.folds[f].test_groups.begin(), plan.folds[f].test_groups.end());
  EXPECT_EQ(tested.size(), 280u);
}

TEST(MakeSplits, ZeroTrainFractionKeepsValAndTest) {
  const auto groups = balanced_groups(40);
  CvSpec full{2, 5, 0.90, 0.05, 0.05, 8};
  CvSpec zero = full;
  zero.train_fraction = 0.0;
  const auto a = make_splits(groups, full), b = make_splits(groups, zero);
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    EXPECT_TRUE(b.folds[i].train_groups.empty());
    EXPECT_EQ(a.folds[i].val_groups, b.folds[i].val_groups);
    EXPECT_EQ(a.folds[i].test_groups, b.folds[i].test_groups);
  }
}

TEST(MakeSplits, TrainSetsAreNestedAcrossFractions) {
  const auto groups = balanced_groups(100);
  CvSpec small{1, 4, 0.20, 0.05, 0.05, 5}, large = small;
  large.train_fraction = 0.60;
  const auto a = make_splits(groups, small), b = make_splits(groups, large);
  for (std::size_t i = 0; i < a.folds.size(); ++i) {
    const std::set<int> big(b.folds[i].train_groups.begin(), b.folds[i].train_groups.end());
    for (int g : a.folds[i].train_groups) EXPECT_TRUE(big.contains(g));
  }
}

TEST(MakeSplits, StratifiedSplitsKeepBothClasses) {
  const auto groups = balanced_groups(40);
  const auto plan = make_splits(groups, CvSpec{3, 5, 0.10, 0.05, 0.05, 9});
  for (const auto& f : plan.folds) {
    for (const auto* set : {&f.train_groups, &f.val_groups, &f.test_groups}) {
      std::set<int> classes;
      for (int g : *set) classes.insert(g % 2);
      EXPECT_EQ(classes.size(), 2u);
    }
  }
}

TEST(MakeSplits, ReproducibleFromSeed) {
  const auto groups = balanced_groups(60);
  const auto a = make_splits(groups, CvSpec{2, 4, 0.5, 0.05, 0.05, 10});
  const auto b = make_splits(groups, CvSpec{2, 4, 0.5, 0.05, 0.05, 10});
  const auto c = make_splits(groups, CvSpec{2, 4, 0.5, 0.05, 0.05, 11});
  for (std::size_t i = 0; i < a.folds.size(); ++i) EXPECT_EQ(a.folds[i].train_groups, b.folds[i].train_groups);
  EXPECT_NE(a.folds[0].test_groups, c.folds[0].test_groups);
}

TEST(MakeSplits, InvalidSpecsRejected) {
  EXPECT_THROW(make_splits(balanced_groups(1), CvSpec{1, 1, 0.0, 0.05, 0.05, 0}), std::invalid_argument);
  EXPECT_THROW(make_splits(balanced_groups(40), CvSpec{1, 1, 0.95, 0.05, 0.05, 0}), std::invalid_argument);
  EXPECT_THROW(make_splits(balanced_groups(40), CvSpec{0, 1, 0.5, 0.05, 0.05, 0}), std::invalid_argument);
}

TEST(Aggregate, Examples) {
  const std::vector<double> same{0.5, 0.5, 0.5};
  auto s = aggregate(same);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_DOUBLE_EQ(s.standard_error, 0.0);

  const std::vector<double> pair{0.0, 1.0};
  s = aggregate(pair);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_NEAR(s.standard_error, 0.5, 1e-15);  // sd 0.7071 (n-1) / sqrt(2)

  const std::vector<double> one{0.3};
  s = aggregate(one);
  EXPECT_DOUBLE_EQ(s.mean, 0.3);
  EXPECT_EQ(s.standard_error, 0.0);
  EXPECT_TRUE(s.degenerate_se);
}

TEST(Aggregate, UndefinedEntriesExcluded) {
  const std::vector<std::optional<double>> v{0.2, std::nullopt, 0.4};
  const auto s = aggregate(std::span<const std::optional<double>>(v));
  EXPECT_EQ(s.count, 2u);
  EXPECT_DOUBLE_EQ(s.mean, 0.3);
  const std::vector<std::optional<double>> none{std::nullopt};
  EXPECT_THROW(aggregate(std::span<const std::optional<double>>(none)), std::invalid_argument);
}

TEST(Aggregate, StandardErrorMatchesBruteForce) {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(2 + rng.index(200));
    for (double& x : v) x = rng.uniform(-1, 1);
    EXPECT_NEAR(aggregate(v).standard_error, testing::brute_force_se(v), 1e-12);
  }
}

TEST(Welch, MatchesScipyReference) {
  // scipy.stats.ttest_ind(a, b, equal_var=False).pvalue
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4}, b{0.3, 0.5, 0.4, 0.6, 0.7};
  EXPECT_NEAR(welch_p_value(a, b), 0.03493878235996399, 1e-10);
  const std::vector<double> c{1, 2, 3, 4, 5, 6}, d{2.5, 3.1, 4.7, 5.2, 6.9, 7.4, 8.8};
  EXPECT_NEAR(welch_p_value(c, d), 0.11022802322237722, 1e-10);
}

TEST(ThresholdFraction, IdenticalDistributionsGiveSmallestFraction) {
  std::map<double, std::vector<double>> sweep;
  for (double f : {0.0, 0.3, 0.6, 0.9}) sweep[f] = {0.1, 0.3, 0.2, 0.4};
  EXPECT_DOUBLE_EQ(threshold_fraction(sweep), 0.0);
}

TEST(ThresholdFraction, ShiftedLowFractionsGiveForty) {
  std::vector<double> base(200);
  Rng rng(4);
  for (double& v : base) v = 0.5 + 0.1 * rng.normal();
  const double se = aggregate(base).standard_error;
  std::map<double, std::vector<double>> sweep;
  for (int i = 0; i <= 18; ++i) {
    const double f = i * 0.05;
    auto v = base;
    if (f < 0.4 - 1e-9)
      for (double& x : v) x -= 3.0 * se;
    sweep[f] = v;
  }
  EXPECT_NEAR(threshold_fraction(sweep), 0.40, 1e-9);
}

TEST(ThresholdFraction, HugeEffectsOnlyReferencePasses) {
  std::map<double, std::vector<double>> sweep;
  sweep[0.0] = {0.0, 0.01, 0.02};
  sweep[0.45] = {0.4, 0.41, 0.42};
  sweep[0.9] = {0.9, 0.91, 0.92};
  EXPECT_DOUBLE_EQ(threshold_fraction(sweep), 0.9);
  sweep[0.45] = {0.89, 0.92, 0.9};
  EXPECT_DOUBLE_EQ(threshold_fraction(sweep), 0.45);
}

TEST(ThresholdFraction, MissingReferenceRejected) {
  std::map<double, std::vector<double>> sweep{{0.0, {0.1, 0.2}}};
  EXPECT_THROW(threshold_fraction(sweep), std::invalid_argument);
}

TEST(RunStatsCsv, RowFormat) {
  std::ostringstream os;
  write_run_stats_header(os);
  write_run_stats_row(os, RunStats{1, 2, "1.1a", 0.4, 0.25, 0.625, 0.5, 0.0, false});
  write_run_stats_row(os, RunStats{0, 0, "2.1a", 0.0, std::nullopt, 0.5, 1.0, 0.0, true});
  EXPECT_EQ(os.str(),
            "rep,fold,condition,fraction,informedness,accuracy,train_s,retrain_s\n"
            "1,2,1.1a,0.40,0.25,0.625,0.5,0\n"
            "0,0,2.1a,0.00,nan,0.5,1,0\n");
}

}  // namespace
}  // namespace psodr
