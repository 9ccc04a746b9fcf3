// Copyright 2026 The cgpo-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace cgpo;

namespace {

const HarmonicHamiltonian kQubit(std::log(3.0), {0, 1}, 1.0);

Matrix povm_sum(const PhasePOVM& p) {
  Matrix s = p.failure_effect();
  for (int k = 0; k < p.bins(); ++k) s += p.effect(k);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Phase estimation

TEST(PhasePovm, Completeness) {
  for (int m : {1, 2, 3}) {
    const auto p = build_phase_povm(kQubit, m, 4 * m, plus_state());
    const Index d = Index(p.total_dim());
    EXPECT_LT(max_abs(povm_sum(p) - Matrix::Identity(d, d)), 1e-12) << "m=" << m;
    for (int k = 0; k < p.bins(); ++k) EXPECT_GE(eigh(p.effect(k)).values.minCoeff(), -1e-12);
    EXPECT_GE(eigh(p.failure_effect()).values.minCoeff(), -1e-12);
  }
}

TEST(PhasePovm, RejectsTooFewBins) {
  try {
    build_phase_povm(kQubit, 3, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(build_phase_povm(kQubit, 3, 4));
}

TEST(PhasePovm, EffectsAreShiftedCopies) {
  const auto p = build_phase_povm(kQubit, 2, 8);
  const auto h = p.total_hamiltonian();
  for (int j : {1, 3}) {
    const double tau = j * p.period() / p.bins();
    for (int k = 0; k < p.bins(); ++k) {
      EXPECT_LT(max_abs(time_evolve(p.effect(k), h, tau) - p.effect((k + j) % p.bins())), 1e-12);
    }
  }
}

TEST(PhasePovm, CalibratedOnReference) {
  const auto p = build_phase_povm(kQubit, 4, 16, plus_state());
  const auto d = estimate_phase_product(plus_state(), p);
  EXPECT_NEAR(d.circular_mean, 0.0, 1e-12);
  EXPECT_LT(d.failure_probability, 1.0);
  EXPECT_THROW(build_phase_povm(kQubit, 1, 4, DensityMatrix::diagonal({0.5, 0.5})), Error);
}

TEST(EstimatePhase, IncoherentIsUniform) {
  const auto p = build_phase_povm(kQubit, 2, 8);
  const auto d = estimate_phase(tensor_power(DensityMatrix::diagonal({0.3, 0.7}), 2), p);
  for (double x : d.probs) EXPECT_NEAR(x, 1.0 / 8, 1e-12);
  // Uniform on 8 equally spaced points of the circle.
  const double step = p.period() / 8;
  double var = 0.0;
  for (int k = -3; k <= 4; ++k) var += (k * step) * (k * step) / 8;
  EXPECT_NEAR(d.circular_variance, var, 1e-9);
}

TEST(EstimatePhase, DenseAndProductPathsAgree) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto r = random_state(2, rng);
    const auto p = build_phase_povm(kQubit, 3, 8);
    const auto a = estimate_phase(tensor_power(r, 3), p), b = estimate_phase_product(r, p);
    for (std::size_t k = 0; k < a.probs.size(); ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-12);
    EXPECT_NEAR(a.failure_probability, b.failure_probability, 1e-12);
  }
}

TEST(EstimatePhase, NormalizedDistributions) {
  Rng rng(2);
  const auto p = build_phase_povm(kQubit, 4, 12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = estimate_phase_product(random_state(2, rng), p);
    EXPECT_NEAR(std::accumulate(d.probs.begin(), d.probs.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(EstimatePhase, ShiftMovesMean) {
  Rng rng(3);
  const auto r = random_state(2, rng);
  const auto p = build_phase_povm(kQubit, 4, 16, plus_state());
  const auto base = estimate_phase_product(r, p);
  for (int j : {1, 5, 11}) {
    const double tau = j * p.period() / p.bins();
    const auto sh = estimate_phase_product(time_evolve(r, kQubit, tau), p);
    for (int k = 0; k < p.bins(); ++k)
      EXPECT_NEAR(sh.probs[std::size_t((k + j) % p.bins())], base.probs[std::size_t(k)], 1e-12);
    EXPECT_NEAR(wrap_signed(sh.circular_mean - base.circular_mean - tau, p.period()), 0.0, 1e-9);
  }
}

TEST(EstimatePhase, VarianceDecreasesWithCopies) {
  double prev = kInf;
  for (int m : {2, 4, 8, 16}) {
    const auto p = build_phase_povm(kQubit, m, 4 * m, plus_state());
    const double v = estimate_phase_product(plus_state(), p).circular_variance;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SamplePhase, MatchesExactStatistics) {
  const auto p = build_phase_povm(kQubit, 8, 32, plus_state());
  const auto d = estimate_phase_product(plus_state(), p);
  Rng rng(4);
  const auto st = sampled_circular_stats(d, 20000, rng);
  EXPECT_NEAR(st.variance, d.circular_variance, 0.1 * d.circular_variance);
}

TEST(CircularStats, WrapsAcrossTheOrigin) {
  const double per = 1.0;
  const auto s = circular_stats({0.95, 0.05}, {0.5, 0.5}, per);
  EXPECT_NEAR(s.mean, 0.0, 1e-12);
  EXPECT_NEAR(s.variance, 0.0025, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_signed(0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(wrap_signed(-0.5, 1.0), 0.5);
}

// ---------------------------------------------------------------------------
// Sublinear preparation

TEST(Sublinear, ZeroCopiesIsTrivial) {
  const auto p = build_phase_povm(kQubit, 4, 16, plus_state());
  EXPECT_EQ(sublinear_prepare(plus_state(), plus_state(), 0, p, 1).dim(), 1u);
  EXPECT_EQ(sublinear_expected_error(plus_state(), plus_state(), 0, p), 0.0);
}

TEST(Sublinear, ErrorFallsWithEstimatorCopies) {
  double prev = kInf;
  for (int n : {8, 16, 32}) {
    const auto p = build_phase_povm(kQubit, n, 4 * n, plus_state());
    const double e = sublinear_expected_error(plus_state(), plus_state(), 1, p);
    EXPECT_LT(e, prev) << "N=" << n;
    prev = e;
  }
}

TEST(Sublinear, SampledMatchesExpectation) {
  const auto p = build_phase_povm(kQubit, 8, 32, plus_state());
  double mean = 0.0;
  const int seeds = 400;
  for (int s = 0; s < seeds; ++s) {
    const auto out = sublinear_prepare(plus_state(), plus_state(), 1, p, std::uint64_t(s));
    mean += trace_distance(out, plus_state()) / seeds;
  }
  EXPECT_NEAR(mean, sublinear_expected_error(plus_state(), plus_state(), 1, p), 0.05);
}

TEST(Sublinear, DoublingOutputCopiesGrowsErrorBySqrtTwo) {
  const auto p = build_phase_povm(kQubit, 16, 64, plus_state());
  const double e1 = sublinear_expected_error(plus_state(), plus_state(), 1, p);
  const double e2 = sublinear_expected_error(plus_state(), plus_state(), 2, p);
  const double e4 = sublinear_expected_error(plus_state(), plus_state(), 4, p);
  EXPECT_GT(e2, e1);
  EXPECT_GT(e4, e2);
  EXPECT_LE(e2, 2.0 * e1 + 1e-12);
  EXPECT_LE(e4, 2.0 * e2 + 1e-12);
  // Pure-state trace distance grows like sqrt(M) at small shifts.
  EXPECT_NEAR(e2 / e1, std::sqrt(2.0), 0.1);
  EXPECT_NEAR(e4 / e2, std::sqrt(2.0), 0.1);
}

// ---------------------------------------------------------------------------
// Pipeline

TEST(PipelineParams, RoundingRule) {
  const auto p = PipelineParams::resolve(6, 0.5, 2, 8);
  EXPECT_EQ(p.nu, 1);
  EXPECT_EQ(p.b1, 2);
  EXPECT_EQ(p.b2, 2);
  const auto q = PipelineParams::resolve(5, 0.4, 2, 8);
  EXPECT_EQ(q.nu, 1);
  EXPECT_EQ(q.b1 + q.b2, 3);
  EXPECT_EQ(q.nu * q.set_size + q.b1 + q.b2, 5);
  EXPECT_THROW(PipelineParams::resolve(3, 0.1, 2, 8), Error);
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    lambda_ = new QuantumChannel(random_gp_channel(tensor_power(kQubit, 2), 1.0, 21));
    params_ = PipelineParams::resolve(4, 0.5, 2, 8);
    pipe_ = new QuantumChannel(cgpo_pipeline(*lambda_, kQubit, 1.0, params_, Wiring::independent, plus_state()));
  }
  static void TearDownTestSuite() {
    delete lambda_;
    delete pipe_;
  }
  static QuantumChannel* lambda_;
  static QuantumChannel* pipe_;
  static PipelineParams params_;
};
QuantumChannel* PipelineTest::lambda_ = nullptr;
QuantumChannel* PipelineTest::pipe_ = nullptr;
PipelineParams PipelineTest::params_;

TEST_F(PipelineTest, CovariantAndGibbsPreserving) {
  EXPECT_FALSE(is_covariant(*lambda_).pass);
  EXPECT_TRUE(is_cptp(*pipe_).pass);
  EXPECT_TRUE(is_covariant(*pipe_).pass);
  EXPECT_TRUE(is_covariant_sampled(*pipe_).pass);
  const auto g = gibbs_state(kQubit, 1.0);
  const auto out = cgpo::apply(*pipe_, tensor_power(g, 4));
  EXPECT_LT(trace_distance(out, tensor_power(g, 2)), 1e-10);
}

TEST_F(PipelineTest, SampledSetMatchesExactMarginal) {
  // Averaging pipeline_sample over the estimator distributions reproduces
  // the set marginal of the exact channel.
  const auto b = pipeline_error_budget(*lambda_, kQubit, 1.0, params_, plus_state(), plus_state(), plus_state());
  const auto out = cgpo::apply(*pipe_, tensor_power(plus_state(), 4).matrix());
  EXPECT_LT(max_abs(out - b.set_state.matrix()), 1e-12);
}

TEST_F(PipelineTest, BareWiringIsNotCovariant) {
  const auto bare = cgpo_pipeline(*lambda_, kQubit, 1.0, params_, Wiring::bare);
  EXPECT_FALSE(is_covariant(bare).pass);
  EXPECT_TRUE(is_gibbs_preserving(bare, 1.0).pass);
}

TEST_F(PipelineTest, SharedEstimatorStillCovariant) {
  const auto p = PipelineParams::resolve(4, 0.5, 2, minimal_exact_bins(params_, kQubit, Wiring::shared));
  const auto shared = cgpo_pipeline(*lambda_, kQubit, 1.0, p, Wiring::shared, plus_state());
  EXPECT_TRUE(is_covariant(shared).pass);
  EXPECT_TRUE(is_gibbs_preserving(shared, 1.0).pass);
}

TEST_F(PipelineTest, RejectsNonGibbsPreservingMap) {
  const auto ground = DensityMatrix::diagonal({1.0, 0.0, 0.0, 0.0});
  const auto h2 = tensor_power(kQubit, 2);
  EXPECT_THROW(cgpo_pipeline(replacer_channel(ground, h2, h2), kQubit, 1.0, params_), Error);
}

TEST(PipelineBudget, InequalityAcrossSweep) {
  const auto h2 = tensor_power(kQubit, 2);
  Matrix target(2, 2);
  target << 0.5, 0.35, 0.35, 0.5;
  const DensityMatrix rp(target);
  for (double d1 : {0.05, 0.1}) {
    FeasibilityProblem fp{tensor_power(plus_state(), 2), tensor_power(rp, 2), h2};
    fp.epsilon = d1 / 2.0;
    const auto o = find_gpo(fp);
    ASSERT_TRUE(o.found());
    for (int L : {8, 16}) {
      const auto p = PipelineParams::resolve(4, 0.5, 2, L, d1);
      const auto b = pipeline_error_budget(*o.channel, kQubit, 1.0, p, plus_state(), rp, plus_state());
      EXPECT_LE(b.lambda_error, d1);
      EXPECT_LE(b.measured, b.bound());
    }
  }
}

TEST(PipelineBudget, DimensionBudgetEnforced) {
  const auto lam = random_gp_channel(tensor_power(kQubit, 2), 1.0, 3);
  // Exact construction stops at 64-dimensional inputs whatever the budget.
  EXPECT_THROW(cgpo_pipeline(lam, kQubit, 1.0, PipelineParams::resolve(8, 0.5, 2, 16)), Error);
  set_max_total_dim(128);
  EXPECT_THROW(cgpo_pipeline(lam, kQubit, 1.0, PipelineParams::resolve(6, 0.5, 2, 16)), Error);
  set_max_total_dim(4096);
  EXPECT_NO_THROW(cgpo_pipeline(lam, kQubit, 1.0, PipelineParams::resolve(6, 0.5, 2, 16)));
}

// ---------------------------------------------------------------------------
// Catalyst

TEST(Catalyst, SingleCopyIsTheMapItself) {
  const auto lam = random_gp_channel(kQubit, 1.0, 4, Structure::covariant);
  const auto run = build_catalyst(lam, plus_state(), 1);
  EXPECT_EQ(run.catalyst.dim(), 1u);
  EXPECT_LT(max_abs(run.report.output.matrix() - cgpo::apply(lam, plus_state()).matrix()), 1e-12);
}

TEST(Catalyst, DimensionAndExactness) {
  for (int n : {2, 3, 4}) {
    const auto lam = tensor_power(random_gp_channel(kQubit, 1.0, 40 + std::uint64_t(n), Structure::covariant), n);
    const auto run = build_catalyst(lam, plus_state(), n);
    EXPECT_EQ(run.report.catalyst_dim, (std::size_t(1) << (n - 1)) * std::size_t(n));
    EXPECT_LE(run.report.catalyst_deviation, 1e-9);
    EXPECT_LE(run.report.marginal_deviation, 1e-9);
    // Label distribution is uniform and blocks are unit trace.
    for (const auto& b : run.catalyst.blocks) EXPECT_NEAR(b.matrix().trace().real(), 1.0, 1e-12);
  }
}

TEST(Catalyst, OutputMatchesAveragedMarginals) {
  const int n = 3;
  const auto lam = random_gp_channel(tensor_power(kQubit, n), 1.0, 77);
  const auto tau = cgpo::apply(lam, tensor_power(plus_state(), n).matrix());
  Matrix avg = Matrix::Zero(2, 2);
  for (int k = 0; k < n; ++k) avg += oracle::single_marginal(tau, 2, n, k) / double(n);
  const auto run = build_catalyst(lam, plus_state(), n);
  EXPECT_LT(max_abs(run.report.output.matrix() - avg), 1e-12);
}

TEST(Catalyst, BudgetExceeded) {
  const auto lam = identity_channel(tensor_power(kQubit, 5));
  set_max_total_dim(32);
  EXPECT_THROW(build_catalyst(lam, plus_state(), 5), Error);
  set_max_total_dim(4096);
}

TEST(Convert, TrivialTargets) {
  ConversionBudget b;
  b.direct_copies = 2;
  b.bisection_steps = 6;
  auto rep = correlated_catalytic_convert(plus_state(), plus_state(), kQubit, 1.0, b);
  EXPECT_TRUE(rep.allowed);
  EXPECT_LE(rep.best_error, 1e-9);
  rep = correlated_catalytic_convert(plus_state(), gibbs_state(kQubit, 1.0), kQubit, 1.0, b);
  EXPECT_LE(rep.best_error, 1e-9);
}

TEST(Convert, FreeEnergyIncreaseRefused) {
  const auto rep = correlated_catalytic_convert(gibbs_state(kQubit, 1.0), plus_state(), kQubit, 1.0);
  EXPECT_FALSE(rep.allowed);
  EXPECT_TRUE(rep.routes.empty());
  ASSERT_FALSE(rep.warnings.empty());
}
