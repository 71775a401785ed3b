#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "stepfdr/stepfdr.hpp"

using namespace stepfdr;

namespace {

const HypothesisSpace kFive = HypothesisSpace::standard(5);
const PValueVector kSmallP({0.01, 0.02, 0.1, 0.3, 0.6});
const PValueVector kBlockedP({0.06, 0.07, 0.5, 0.6, 0.7});

FactorizedThresholds bh(double alpha) { return FactorizedThresholds(alpha, ShapeFunction::linear()); }

std::vector<std::size_t> idx(std::initializer_list<std::size_t> xs) { return xs; }

// Relabels hypotheses: new position i holds old hypothesis perm[i].
std::pair<HypothesisSpace, PValueVector> permute(const HypothesisSpace& s, const PValueVector& p,
                                                 const std::vector<std::size_t>& perm) {
  std::vector<std::string> labels;
  std::vector<double> lambda, pi, pv;
  for (std::size_t i : perm) {
    labels.push_back(s.labels()[i]);
    lambda.push_back(s.lambda(i));
    pi.push_back(s.pi(i));
    pv.push_back(p[i]);
  }
  return {HypothesisSpace(labels, lambda, pi), PValueVector(pv)};
}

std::vector<std::string> labels_of(const RejectionSet& r, const HypothesisSpace& s) {
  std::vector<std::string> out;
  for (std::size_t i : r.members()) out.push_back(s.labels()[i]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(LevelSet, Examples) {
  EXPECT_DOUBLE_EQ(level_set(bh(0.25), 2.0, kSmallP, kFive).volume(), 3.0);
  const PValueVector zeros({0.0, 0.3, 0.0});
  EXPECT_EQ(level_set(bh(0.25), 0.0, zeros, HypothesisSpace::standard(3)).members(), idx({0, 2}));
  HypothesisSpace s({"a", "b"}, {1.0, 1.0}, {0.0, 1.0});
  EXPECT_FALSE(level_set(bh(0.5), 2.0, PValueVector({1e-12, 0.5}), s).contains(0));
  EXPECT_TRUE(level_set(bh(0.5), 2.0, PValueVector({0.0, 0.5}), s).contains(0));
  EXPECT_THROW(level_set(bh(0.25), -1.0, kSmallP, kFive), std::domain_error);
}

TEST(LevelSet, MonotoneInR) {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = gen::uniform_int(rng, 1, 30);
    const auto s = gen::weighted_space(rng, m);
    const auto p = gen::pvalues(rng, m);
    double r1 = gen::uniform(rng, 0, s.total_volume()), r2 = gen::uniform(rng, 0, s.total_volume());
    if (r1 > r2) std::swap(r1, r2);
    const auto d = FactorizedThresholds(0.2, make_shape("prior:uniform", m));
    EXPECT_TRUE(level_set(d, r1, p, s).is_subset_of(level_set(d, r2, p, s)));
  }
}

TEST(StepUp, Examples) {
  EXPECT_EQ(step_up(bh(0.25), kSmallP, kFive).members(), idx({0, 1, 2}));
  EXPECT_EQ(step_up(bh(0.05), kSmallP, kFive).members(), idx({0, 1}));
  EXPECT_TRUE(step_up(bh(0.5), PValueVector(std::vector<double>(5, 1.0)), kFive).empty());
  EXPECT_EQ(step_up(bh(0.05), PValueVector(std::vector<double>(5, 0.0)), kFive).count(), 5u);
  EXPECT_EQ(step_up(bh(0.25), kBlockedP, kFive).members(), idx({0, 1}));
}

TEST(StepUp, TiesAreIncludedTogether) {
  // p_(2) = p_(3) = 0.1 <= 0.25 * 3 / 5 at volume 3 (both tied values enter)
  const PValueVector p({0.01, 0.1, 0.1, 0.9, 0.9});
  EXPECT_EQ(step_up(bh(0.25), p, kFive).members(), idx({0, 1, 2}));
}

TEST(StepDown, Examples) {
  EXPECT_TRUE(step_down(bh(0.25), kBlockedP, kFive).empty());
  EXPECT_EQ(step_down(bh(0.25), kSmallP, kFive).members(), idx({0, 1, 2}));
  EXPECT_EQ(step_down(bh(0.05), PValueVector(std::vector<double>(5, 0.0)), kFive).count(), 5u);
}

TEST(StepUpDown, Examples) {
  EXPECT_EQ(step_up_down(bh(0.25), 2.0, kBlockedP, kFive).members(), idx({0, 1}));
  EXPECT_TRUE(step_up_down(bh(0.25), 1.0, kBlockedP, kFive).empty());
  EXPECT_EQ(step_up_down(bh(0.25), 5.0, kBlockedP, kFive), step_up(bh(0.25), kBlockedP, kFive));
  EXPECT_EQ(step_up_down(bh(0.25), 0.0, kBlockedP, kFive), step_down(bh(0.25), kBlockedP, kFive));
  EXPECT_THROW(step_up_down(bh(0.25), 5.5, kBlockedP, kFive), std::invalid_argument);
  EXPECT_THROW(step_up_down(bh(0.25), -0.5, kBlockedP, kFive), std::invalid_argument);
}

TEST(StepUp, EqualsUnionOfSelfConsistentSetsWeighted) {
  Rng rng(2024);
  for (int t = 0; t < 400; ++t) {
    const std::size_t m = gen::uniform_int(rng, 1, 10);
    const auto s = gen::weighted_space(rng, m);
    const auto p = gen::pvalues(rng, m);
    const auto d = FactorizedThresholds(gen::uniform(rng, 0.05, 0.9),
                                        t % 2 ? ShapeFunction::linear() : make_shape("prior:uniform", 40));
    ASSERT_EQ(step_up(d, p, s).members(), gen::union_of_self_consistent(d, p, s)) << "instance " << t;
  }
}

TEST(Procedures, SelfConsistencyAndNesting) {
  Rng rng(99);
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = gen::uniform_int(rng, 1, 40);
    const auto s = t % 3 ? gen::weighted_space(rng, m) : HypothesisSpace::standard(m);
    const auto p = gen::pvalues(rng, m);
    const auto d = FactorizedThresholds(gen::uniform(rng, 0.01, 0.5), make_shape(t % 2 ? "linear" : "by", m));
    const double lambda = gen::uniform(rng, 0.0, s.total_volume());
    const auto su = step_up(d, p, s);
    const auto sd = step_down(d, p, s);
    const auto sud = step_up_down(d, lambda, p, s);
    ASSERT_TRUE(check_self_consistency(su, d, p, s).holds);
    ASSERT_TRUE(check_self_consistency(sd, d, p, s).holds);
    ASSERT_TRUE(check_self_consistency(sud, d, p, s).holds);
    ASSERT_NEAR(level_set(d, su.volume(), p, s).volume(), su.volume(), kVolumeTol);
    ASSERT_TRUE(sd.is_subset_of(sud)) << "instance " << t;
    ASSERT_TRUE(sud.is_subset_of(su)) << "instance " << t;
    ASSERT_EQ(step_up_down(d, s.total_volume(), p, s), su);
    ASSERT_EQ(step_up_down(d, 0.0, p, s), sd);
  }
}

TEST(Procedures, MonotoneInEachPValue) {
  Rng rng(7);
  const std::size_t m = 25;
  const auto weighted = gen::weighted_space(rng, m, 3, false);
  const auto standard = HypothesisSpace::standard(m);
  const auto d = FactorizedThresholds(0.2, ShapeFunction::linear());
  const struct {
    Procedure proc;
    const HypothesisSpace* space;
  } cases[] = {
      {{"su", [&](const PValueVector& p, const HypothesisSpace& h) { return step_up(d, p, h); }}, &weighted},
      {{"su", [&](const PValueVector& p, const HypothesisSpace& h) { return step_up(d, p, h); }}, &standard},
      {{"sd", [&](const PValueVector& p, const HypothesisSpace& h) { return step_down(d, p, h); }}, &standard},
      {{"sud", [&](const PValueVector& p, const HypothesisSpace& h) { return step_up_down(d, 10.0, p, h); }},
       &standard}};
  for (const auto& c : cases) {
    for (int t = 0; t < 5; ++t) {
      const auto p = gen::pvalues(rng, m);
      EXPECT_EQ(monotonicity_probe(c.proc, p, *c.space, 200, 1000 + t), 0u) << c.proc.name;
    }
  }
}

TEST(Procedures, WeightedStepDownCanShrinkWhenAPValueDrops) {
  // b (volume 1) overtakes a (volume 2) and fails at the smaller grid point
  const HypothesisSpace s({"a", "b"}, {2.0, 1.0}, {0.25, 0.5});
  const FactorizedThresholds d(0.1, ShapeFunction::linear());
  const PValueVector before({0.0375, 0.5});
  const PValueVector after({0.0375, 0.07});
  EXPECT_DOUBLE_EQ(step_down(d, before, s).volume(), 2.0);
  EXPECT_DOUBLE_EQ(step_down(d, after, s).volume(), 0.0);
  // step-up stays monotone
  EXPECT_DOUBLE_EQ(step_up(d, before, s).volume(), 2.0);
  EXPECT_DOUBLE_EQ(step_up(d, after, s).volume(), 3.0);
}

TEST(StepUpDown, ClassicalScanOracle) {
  Rng rng(41);
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = gen::uniform_int(rng, 1, 30);
    const auto s = HypothesisSpace::standard(m);
    const auto p = gen::pvalues(rng, m);
    const double alpha = gen::uniform(rng, 0.01, 0.5);
    const std::size_t lambda = gen::uniform_int(rng, 0, m);
    std::vector<double> sorted(p.values().begin(), p.values().end());
    std::sort(sorted.begin(), sorted.end());
    // p_(k) <= alpha k / m, 1-based k
    const auto ok = [&](std::size_t k) { return sorted[k - 1] <= alpha * k / m * (1 + 1e-12); };
    std::size_t k = 0;
    if (lambda == 0 || ok(lambda)) {
      k = lambda;
      while (k < m && ok(k + 1)) ++k;
    } else {
      for (std::size_t j = lambda - 1; j >= 1; --j) {
        if (ok(j)) {
          k = j;
          break;
        }
      }
    }
    const auto r = step_up_down(FactorizedThresholds(alpha, ShapeFunction::linear()), static_cast<double>(lambda), p, s);
    ASSERT_GE(r.count(), k) << "instance " << t;
    // ties at the crossing can only add members
    if (r.count() > k) {
      ASSERT_LE(sorted[r.count() - 1], alpha * k / m * (1 + 1e-12)) << "instance " << t;
    }
  }
}

TEST(StepUpDown, FractionalOrderMovesUpToGrid) {
  const auto d = bh(0.25);
  // 1.5 behaves like 2, 0.2 like 1
  EXPECT_EQ(step_up_down(d, 1.5, kBlockedP, kFive), step_up_down(d, 2.0, kBlockedP, kFive));
  EXPECT_EQ(step_up_down(d, 0.2, kBlockedP, kFive), step_up_down(d, 1.0, kBlockedP, kFive));
  EXPECT_EQ(step_up_down(d, 4.5, kBlockedP, kFive), step_up(d, kBlockedP, kFive));
}

TEST(Procedures, PermutationEquivariant) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = gen::uniform_int(rng, 1, 30);
    const auto s = gen::weighted_space(rng, m);
    const auto p = gen::pvalues(rng, m);
    const auto perm = gen::permutation(rng, m);
    const auto [s2, p2] = permute(s, p, perm);
    const auto d = FactorizedThresholds(0.3, ShapeFunction::linear());
    const double lambda = std::min(3.0, s.total_volume());
    EXPECT_EQ(labels_of(step_up(d, p, s), s), labels_of(step_up(d, p2, s2), s2));
    EXPECT_EQ(labels_of(step_down(d, p, s), s), labels_of(step_down(d, p2, s2), s2));
    EXPECT_EQ(labels_of(step_up_down(d, lambda, p, s), s), labels_of(step_up_down(d, lambda, p2, s2), s2));
  }
}

TEST(RankThresholds, Formulas) {
  const auto bl = make_rank_thresholds(RankKind::bl_rs, 0.2, 4);
  const std::vector<double> want{0.05, 0.8 / 9.0, 0.2, 0.8};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(bl.t[i], want[i], 1e-15);

  const auto holm = make_rank_thresholds(RankKind::holm, 0.1, 10);
  const auto bonf = make_rank_thresholds(RankKind::bonferroni, 0.1, 10);
  for (std::size_t i = 1; i <= 10; ++i) {
    EXPECT_DOUBLE_EQ(holm(i), 0.1 / static_cast<double>(11 - i));
    EXPECT_DOUBLE_EQ(bonf(i), 0.01);
  }
  const auto b99 = make_rank_thresholds(RankKind::bl99, 0.1, 10);
  for (std::size_t i = 1; i <= 10; ++i) {
    const double j = static_cast<double>(11 - i);
    const double want99 = 1.0 - std::pow(1.0 - std::min(1.0, 0.1 * 10.0 / j), 1.0 / j);
    EXPECT_NEAR(b99(i), want99, 1e-15);
    EXPECT_GE(b99(i), 0.0);
    EXPECT_LE(b99(i), 1.0);
  }
  EXPECT_THROW(make_rank_thresholds(RankKind::df, 0.1, 10), std::invalid_argument);
  EXPECT_THROW(make_rank_thresholds(RankKind::holm, 1.5, 10), std::invalid_argument);
}

TEST(RankThresholds, DfClosedForms) {
  const double alpha = 0.1;
  for (std::size_t m : {5u, 50u}) {
    const double md = static_cast<double>(m);
    const auto nu_u = df_prior(DfPrior::uniform, m);
    const auto nu_l = df_prior(DfPrior::linear, m);
    const auto uni = make_rank_thresholds(RankKind::df, alpha, m, &nu_u);
    const auto lin = make_rank_thresholds(RankKind::df, alpha, m, &nu_l);
    for (std::size_t i = 1; i <= m; ++i) {
      const double j = md - static_cast<double>(i) + 1.0;
      double tail = 0.0;
      for (std::size_t k = m - i + 1; k <= m; ++k) tail += 1.0 / static_cast<double>(k);
      EXPECT_NEAR(uni(i), alpha / j * tail, 1e-14);
      EXPECT_NEAR(lin(i), std::min(1.0, alpha / (md + 1.0) * 2.0 * static_cast<double>(i) / j), 1e-14);
    }
  }
  const auto bad = PriorDistribution({0.3}, {1.0}, "bad");
  EXPECT_THROW(make_rank_thresholds(RankKind::df, 0.1, 5, &bad), std::invalid_argument);
}

TEST(RankStepDown, Examples) {
  const auto s = HypothesisSpace::standard(4);
  const auto t = make_rank_thresholds(RankKind::bl_rs, 0.2, 4);
  EXPECT_EQ(rank_step_down(t, PValueVector({0.04, 0.07, 0.25, 0.9}), s).members(), idx({0, 1}));
  EXPECT_EQ(rank_step_down(t, PValueVector({0.0, 0.0, 0.0, 0.0}), s).count(), 4u);
  EXPECT_TRUE(rank_step_down(t, PValueVector({0.06, 0.0501, 0.9, 0.9}), s).empty());
  HypothesisSpace weighted({"a", "b"}, {2.0, 1.0}, {0.25, 0.5});
  EXPECT_THROW(rank_step_down(make_rank_thresholds(RankKind::holm, 0.1, 2), PValueVector({0.1, 0.1}), weighted),
               std::invalid_argument);
}

TEST(RankStepDown, SequentialScanOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = gen::uniform_int(rng, 1, 30);
    const auto s = HypothesisSpace::standard(m);
    const auto p = gen::pvalues(rng, m);
    const auto t = make_rank_thresholds(RankKind::bl99, 0.2, m);
    std::vector<double> sorted(p.values().begin(), p.values().end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t istar = 0;
    while (istar < m && sorted[istar] <= t.t[istar] * (1 + 1e-12)) ++istar;
    const auto r = rank_step_down(t, p, s);
    ASSERT_EQ(r.count(), istar);
    for (std::size_t h : r.members()) ASSERT_LE(p[h], sorted[istar == 0 ? 0 : istar - 1]);
  }
}

TEST(Adaptive, FirstStageEmptyGivesPlainStepUp) {
  const PValueVector p({0.5, 0.6, 0.7, 0.8, 0.9});
  const auto res = adaptive_two_stage(0.05, 0.05, ShapeFunction::linear(), p, kFive);
  EXPECT_TRUE(res.first_stage.empty());
  EXPECT_DOUBLE_EQ(res.pihat0, 1.0);
  EXPECT_DOUBLE_EQ(res.g, 1.0);
  EXPECT_EQ(res.rejected, step_up(bh(0.05), p, kFive));
}

TEST(Adaptive, FirstStageRejectsAll) {
  const PValueVector p({0.0, 0.0, 0.001, 0.0, 0.0});
  const auto res = adaptive_two_stage(0.05, 0.05, ShapeFunction::linear(), p, kFive);
  EXPECT_EQ(res.first_stage.count(), 5u);
  EXPECT_EQ(res.pihat0, 0.0);
  EXPECT_EQ(res.g, kInf);
  EXPECT_EQ(res.rejected.count(), 5u);
}

TEST(Adaptive, HalfRejectedDoublesThresholds) {
  const auto s = HypothesisSpace::standard(10);
  // Holm at 0.05 rejects exactly the five zeros
  const PValueVector p({0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.036, 0.06, 0.5, 0.9});
  const auto res = adaptive_two_stage(0.05, 0.05, ShapeFunction::linear(), p, s);
  EXPECT_EQ(res.first_stage.count(), 5u);
  EXPECT_DOUBLE_EQ(res.pihat0, 0.5);
  EXPECT_DOUBLE_EQ(res.g, 2.0);
  const FactorizedThresholds plain(0.05, ShapeFunction::linear());
  const FactorizedThresholds doubled(0.05 * res.g, ShapeFunction::linear());
  for (std::size_t h = 0; h < 10; ++h)
    for (double r = 1; r <= 10; ++r) EXPECT_DOUBLE_EQ(doubled(s, h, r), 2.0 * plain(s, h, r));
  EXPECT_EQ(res.rejected, step_up(doubled, p, s));
  // at alpha1 = 0.05 the plain step-up stops at 6; the doubled one reaches 8
  EXPECT_EQ(step_up(plain, p, s).count(), 6u);
  EXPECT_EQ(res.rejected.count(), 8u);
}
