#include <cmath>

#include <gtest/gtest.h>

#include "capax/error.hpp"
#include "capax/io.hpp"
#include "capax/rank_lab.hpp"

namespace capax {
namespace {

RankExperimentConfig config(RankExperiment e, RankDims dims, std::vector<std::string> acts, int trials = 10,
                            std::uint64_t seed = 7) {
  RankExperimentConfig c;
  c.experiment = e;
  c.dims = dims;
  c.activations = std::move(acts);
  c.trials = trials;
  c.seed = seed;
  return c;
}

TEST(RankLab, ExperimentNames) {
  EXPECT_EQ(parse_experiment("thm5"), RankExperiment::Full);
  EXPECT_EQ(parse_experiment("thm6-narrow"), RankExperiment::Narrow);
  EXPECT_EQ(parse_experiment("rank-one"), RankExperiment::RankOne);
  EXPECT_EQ(parse_experiment(to_string(RankExperiment::PolynomialRankOne)), RankExperiment::PolynomialRankOne);
  EXPECT_THROW(parse_experiment("thm7"), ValidationError);
}

TEST(RankLab, Bounds) {
  EXPECT_EQ(rank_bound(RankExperiment::RankOne, {6, 4, 2, 0}), 6);
  EXPECT_EQ(rank_bound(RankExperiment::Full, {10, 4, 3, 5}), 10);
  EXPECT_EQ(rank_bound(RankExperiment::Narrow, {8, 5, 3, 6}), 8);
  EXPECT_EQ(rank_bound(RankExperiment::RankOne, {7, 4, 5, 0}), 6);  // floor(7/3) * 3 < 7
}

TEST(RankLab, HypothesisChecks) {
  const auto run = [](RankExperimentConfig c) { return run_rank_experiment(c); };
  EXPECT_THROW(run(config(RankExperiment::RankOne, {6, 4, 2, 0}, {"identity", "tanh"})), HypothesisError);
  EXPECT_THROW(run(config(RankExperiment::Full, {10, 4, 3, 5}, {"relu", "tanh"})), HypothesisError);
  EXPECT_THROW(run(config(RankExperiment::Full, {10, 4, 1, 5}, {"tanh", "tanh"})), ValidationError);
  EXPECT_THROW(run(config(RankExperiment::Narrow, {8, 5, 3, 6}, {"sin", "identity", "tanh"})), HypothesisError);
  EXPECT_NO_THROW(validate(config(RankExperiment::Narrow, {8, 5, 3, 6}, {"identity", "tanh", "tanh"}),
                           resolve_activations(config(RankExperiment::Narrow, {8, 5, 3, 6}, {"identity", "tanh", "tanh"}))));
  EXPECT_THROW(run(config(RankExperiment::PolynomialRankOne, {6, 4, 2, 0}, {"tanh", "tanh"})), HypothesisError);
  EXPECT_THROW(run(config(RankExperiment::PolynomialRankOne, {6, 4, 2, 0}, {"poly:K=1,2", "poly:K=1,2"})),
               HypothesisError);
  EXPECT_THROW(run(config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh"})), ValidationError);
  EXPECT_THROW(run(config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh", "tanh"}, 0)), ValidationError);
}

TEST(RankLab, SampledPointsStayInDomain) {
  const auto tanh_acts = resolve_activations(config(RankExperiment::RankOne, {6, 4, 2, 0}, {"tanh", "tanh"}));
  const auto arctan_acts = resolve_activations(config(RankExperiment::RankOne, {6, 4, 2, 0}, {"arctan", "tanh"}));
  const auto exp_acts = resolve_activations(config(RankExperiment::Full, {6, 4, 3, 3}, {"exp", "exp"}));
  for (int t = 0; t < 20; ++t) {
    Rng rng(stream_seed(3, t));
    const auto s = sample_in_domain(RankExperiment::RankOne, {6, 4, 2, 0}, tanh_acts, rng);
    EXPECT_TRUE(s.in_domain);
    EXPECT_LT((s.point.u * s.point.v.transpose()).cwiseAbs().maxCoeff(), M_PI / 2);
    Rng rng2(stream_seed(4, t));
    const auto a = sample_in_domain(RankExperiment::RankOne, {6, 4, 2, 0}, arctan_acts, rng2);
    EXPECT_LT((a.point.u * a.point.v.transpose()).cwiseAbs().maxCoeff(), 1.0);
    Rng rng3(stream_seed(5, t));
    const auto e = sample_in_domain(RankExperiment::Full, {6, 4, 3, 3}, exp_acts, rng3);
    EXPECT_TRUE(e.in_domain);
    EXPECT_EQ(e.max_domain_ratio, 0.0);
  }
}

TEST(RankLab, PositiveSuites) {
  const std::vector<RankExperimentConfig> suites = {
      config(RankExperiment::RankOne, {6, 4, 2, 0}, {"tanh", "tanh"}),
      config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh", "tanh"}),
      config(RankExperiment::Narrow, {8, 5, 3, 6}, {"sin", "tanh", "tanh"}),
      config(RankExperiment::Full, {8, 3, 3, 4}, {"sigmoid", "gelu"}),
      config(RankExperiment::RankOne, {5, 3, 3, 0}, {"arctan", "softplus"}),
  };
  for (const auto& cfg : suites) {
    const auto rep = run_rank_experiment(cfg);
    EXPECT_TRUE(rep.all_pass) << to_string(cfg.experiment) << " pass rate " << rep.pass_rate;
    EXPECT_TRUE(rep.all_in_domain);
    for (const auto& t : rep.trials) EXPECT_GT(t.min_retained, t.tolerance);
  }
}

TEST(RankLab, IdentityNegativeControl) {
  auto cfg = config(RankExperiment::Full, {10, 2, 3, 5}, {"identity", "identity"}, 50);
  cfg.negative = true;
  const auto rep = run_rank_experiment(cfg);
  EXPECT_FALSE(rep.all_pass);
  EXPECT_TRUE(rep.all_within_ceiling);
  for (const auto& t : rep.trials) EXPECT_LE(t.rank, 4);
}

TEST(RankLab, DoublePrecisionIsAvailable) {
  auto cfg = config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh", "tanh"});
  cfg.precision = Precision::Double;
  const auto rep = run_rank_experiment(cfg);
  ASSERT_EQ(rep.trials.size(), 10u);
  EXPECT_TRUE(rep.all_pass);
  EXPECT_LT(rep.trials[0].tolerance, 1e-12);
}

TEST(RankLab, ExactCrossCheckTruncatedTanh) {
  const auto t7 = truncate_taylor(builtin("tanh"), 7).name();
  auto cfg = config(RankExperiment::PolynomialRankOne, {6, 4, 2, 0}, {t7, t7}, 3);
  cfg.negative = true;  // four monomials, fewer than the bound asks for
  for (int trial = 0; trial < 3; ++trial) EXPECT_TRUE(cross_check_exact(cfg, trial).agree);
}

TEST(RankLab, ExactCrossCheckMonomialAndZero) {
  auto cfg = config(RankExperiment::PolynomialRankOne, {6, 4, 2, 0}, {"poly:K=3", "poly:K=1,2,3,4,5,6"}, 2);
  cfg.negative = true;
  for (int trial = 0; trial < 2; ++trial) {
    const auto c = cross_check_exact(cfg, trial);
    EXPECT_TRUE(c.agree);
    EXPECT_LE(c.exact_rank, 2);
  }
  const auto acts = resolve_activations(cfg);
  RankPoint zero;
  zero.u = Vector::Zero(6);
  zero.v = Vector::Zero(4);
  zero.w = Vector::Zero(4);
  zero.z = Vector::Zero(2);
  const auto c = cross_check_point(RankExperiment::PolynomialRankOne, cfg.dims, zero, acts);
  EXPECT_EQ(c.exact_rank, 0);
  EXPECT_EQ(c.numerical_rank, 0);
}

TEST(RankLab, CrossCheckRejectsAnalyticActivations) {
  const auto cfg = config(RankExperiment::RankOne, {6, 4, 2, 0}, {"tanh", "tanh"});
  EXPECT_THROW(cross_check_exact(cfg, 0), UnsupportedError);
}

TEST(RankLab, DeterministicAcrossThreadCounts) {
  for (auto e : {RankExperiment::RankOne, RankExperiment::Full, RankExperiment::Narrow}) {
    const RankDims dims = e == RankExperiment::RankOne ? RankDims{6, 4, 2, 0}
                          : e == RankExperiment::Full  ? RankDims{10, 4, 3, 5}
                                                       : RankDims{8, 5, 3, 6};
    auto cfg = config(e, dims, {"tanh", "tanh"}, 12, 42);
    const auto one = to_json(run_rank_experiment(cfg)).dump();
    cfg.threads = 4;
    EXPECT_EQ(to_json(run_rank_experiment(cfg)).dump(), one);
  }
}

TEST(RankLab, SeedsChangeSamples) {
  auto a = config(RankExperiment::Full, {10, 4, 3, 5}, {"tanh", "tanh"}, 2, 1);
  auto b = a;
  b.seed = 2;
  EXPECT_NE(run_rank_experiment(a).trials[0].min_retained, run_rank_experiment(b).trials[0].min_retained);
}

}  // namespace
}  // namespace capax
