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
const HarmonicHamiltonian kQutrit(1.0, {0, 1, 2}, 1.0);

/// Checks a found witness with the independent checkers.
void expect_sound(const FeasibilityProblem& p, const FeasibilityOutcome& o) {
  ASSERT_TRUE(o.channel.has_value());
  const auto& ch = *o.channel;
  EXPECT_TRUE(is_cptp(ch, p.tol).pass);
  EXPECT_TRUE(is_gibbs_preserving(ch, p.beta, p.tol).pass);
  if (p.require_covariance) EXPECT_TRUE(is_covariant(ch, p.tol).pass);
  EXPECT_LE((cgpo::apply(ch, p.rho_in).matrix() - p.target.matrix()).norm(), p.epsilon + p.tol);
}

FeasibilityProblem problem(const DensityMatrix& a, const DensityMatrix& b, const HarmonicHamiltonian& h) {
  FeasibilityProblem p{a, b, h};
  p.beta = 1.0;
  return p;
}

}  // namespace

TEST(FindGpo, IdentityAndGibbsTargets) {
  Rng rng(1);
  const auto r = random_state(3, rng);
  auto p = problem(r, r, kQutrit);
  auto o = find_gpo(p);
  EXPECT_TRUE(o.found());
  expect_sound(p, o);

  p = problem(r, gibbs_state(kQutrit, 1.0), kQutrit);
  o = find_gpo(p);
  EXPECT_TRUE(o.found());
  expect_sound(p, o);
}

TEST(FindGpo, InfeasibleDiagonalPairCarriesOracle) {
  // Moving population up against the Gibbs weights is not allowed.
  const auto a = DensityMatrix::diagonal({0.75, 0.25});
  const auto b = DensityMatrix::diagonal({0.2, 0.8});
  auto p = problem(a, b, kQubit);
  p.max_iters = 3000;
  const auto o = find_gpo(p);
  EXPECT_FALSE(o.found());
  ASSERT_TRUE(o.oracle.has_value());
  EXPECT_FALSE(*o.oracle);
}

TEST(FindGpo, FoundImpliesFreeEnergyDecrease) {
  Rng rng(2);
  for (int trial = 0; trial < 15; ++trial) {
    const auto a = random_state(2, rng);
    const auto b = random_state(2, rng);
    auto p = problem(a, b, kQubit);
    p.max_iters = 4000;
    const auto o = find_gpo(p);
    if (o.found()) {
      expect_sound(p, o);
      EXPECT_LE(free_energy(b, kQubit, 1.0), free_energy(a, kQubit, 1.0) + 1e-6);
    }
  }
}

TEST(FindCgpo, IncoherentToCoherentFails) {
  auto p = problem(DensityMatrix::diagonal({0.4, 0.6}), plus_state(), kQubit);
  p.epsilon = 0.05;
  p.max_iters = 4000;
  const auto o = find_cgpo(p);
  EXPECT_FALSE(o.found());
  // No covariant output can be closer than the coherent part of the target.
  EXPECT_GE(o.residuals.at("output_frobenius"), 0.5 - 1e-6);
}

TEST(FindCgpo, DephasingWitness) {
  Rng rng(3);
  const auto r = random_state(3, rng);
  auto p = problem(r, dephase(r, kQutrit), kQutrit);
  p.require_covariance = true;
  const auto o = find_cgpo(p);
  EXPECT_TRUE(o.found());
  expect_sound(p, o);
}

TEST(FindCgpo, ReferenceQubitSingleShotFails) {
  auto p = problem(DensityMatrix::diagonal({3.0 / 200, 197.0 / 200}), plus_state(), kQubit);
  p.epsilon = 0.01;
  const auto o = find_cgpo(p);
  EXPECT_FALSE(o.found());
}

TEST(FindGpo, DeterministicOutcome) {
  Rng rng(4);
  const auto a = random_state(2, rng), b = random_state(2, rng);
  auto p = problem(a, b, kQubit);
  p.epsilon = 0.3;
  const auto o1 = find_gpo(p), o2 = find_gpo(p);
  EXPECT_EQ(o1.iterations, o2.iterations);
  if (o1.channel) EXPECT_EQ(o1.channel->choi(), o2.channel->choi());
}

TEST(Blackwell, TrivialVerdicts) {
  const auto p = ClassicalDistribution({0.1, 0.3, 0.6});
  EXPECT_TRUE(blackwell_oracle(p, p, kQutrit, 1.0));
  EXPECT_TRUE(blackwell_oracle(p, gibbs_distribution(kQutrit, 1.0), kQutrit, 1.0));
  EXPECT_THROW(blackwell_oracle(plus_state(), plus_state(), kQubit, 1.0), Error);
}

TEST(Blackwell, AgreesWithClassicalSolver) {
  Rng rng(5);
  const auto q = gibbs_distribution(kQutrit, 1.0);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = oracle::random_simplex(3, rng), pp = oracle::random_simplex(3, rng);
    const ClassicalDistribution P(p), PP(pp);
    if (std::abs(lorenz_margin(P, PP, q)) < 1e-6) continue;
    auto prob = problem(DensityMatrix::diagonal(p), DensityMatrix::diagonal(pp), kQutrit);
    prob.diagonal_only = true;
    const auto o = find_gpo(prob);
    const bool oracle_verdict = blackwell_oracle(P, PP, kQutrit, 1.0);
    EXPECT_EQ(oracle_verdict, oracle::thermomajorizes(p, pp, q.probs()));
    EXPECT_EQ(o.found(), oracle_verdict) << "trial " << trial << " margin " << lorenz_margin(P, PP, q);
    ++compared;
  }
  EXPECT_GT(compared, 20);
}

TEST(RandomGpChannel, PassesCheckersAndIsDeterministic) {
  for (auto s : {Structure::general, Structure::covariant, Structure::classical}) {
    const auto a = random_gp_channel(kQutrit, 1.0, 11, s);
    EXPECT_TRUE(is_cptp(a, 1e-8).pass);
    EXPECT_TRUE(is_gibbs_preserving(a, 1.0, 1e-8).pass);
    if (s != Structure::general) EXPECT_TRUE(is_covariant(a, 1e-8).pass);
    EXPECT_EQ(a.choi(), random_gp_channel(kQutrit, 1.0, 11, s).choi());
  }
}

TEST(RandomGpChannel, FreeEnergyMonotone) {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ch = random_gp_channel(kQubit, 1.0, 100 + std::uint64_t(trial));
    const auto r = random_state(2, rng);
    EXPECT_LE(free_energy(cgpo::apply(ch, r), kQubit, 1.0), free_energy(r, kQubit, 1.0) + 1e-7);
  }
}

TEST(ClassicalMonotonicity, ThermomajorizationUnderGpStochastic) {
  Rng rng(7);
  const auto q = gibbs_distribution(kQutrit, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ch = random_gp_channel(kQutrit, 1.0, 500 + std::uint64_t(trial), Structure::classical);
    const auto p = oracle::random_simplex(3, rng);
    const auto out = cgpo::apply(ch, DensityMatrix::diagonal(p));
    const auto tp = ClassicalDistribution::from_state(out);
    EXPECT_TRUE(thermomajorizes(ClassicalDistribution(p), tp, q, 1e-9));
    EXPECT_LE(free_energy(out, kQutrit, 1.0), free_energy(DensityMatrix::diagonal(p), kQutrit, 1.0) + 1e-7);
  }
}

TEST(Projector, CovarianceMaskIdempotent) {
  Rng rng(8);
  const detail::ChoiProjector proj(kQutrit, kQutrit, 1.0, Structure::covariant);
  const Matrix j = random_channel(kQutrit, kQutrit, rng).choi();
  const Matrix once = proj.mask(j);
  EXPECT_EQ(proj.mask(once), once);
}

TEST(MinimalEpsilon, BracketsTheFloor) {
  // Incoherent input, coherent target: the best covariant output is the
  // dephased target, at Frobenius distance sqrt(0.5).
  auto p = problem(DensityMatrix::diagonal({0.5, 0.5}), plus_state(), kQubit);
  p.require_covariance = true;
  const auto s = minimal_epsilon(p, 10);
  EXPECT_TRUE(s.outcome.found());
  EXPECT_GE(s.epsilon, std::sqrt(0.5) - 1e-6);
  EXPECT_LE(s.epsilon, std::sqrt(0.5) + 1e-2);
}
