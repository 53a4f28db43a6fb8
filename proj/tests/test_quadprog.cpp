#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aadj/error.hpp"
#include "aadj/quadprog.hpp"
#include "oracles.hpp"

using namespace aadj;
using namespace aadj::quad;
namespace tst = aadj::testing;

namespace {

MatrixPath ellipse_path() {
  return MatrixPath(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({0.0, 1.0}),
                    SymMatrix::diagonal({1.0, 0.0}), 0.9, QuadCase::kPositiveObjective);
}

MatrixPath trivial_path() {
  return MatrixPath(SymMatrix::identity(2), SymMatrix::identity(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                    QuadCase::kPositiveConstraint);
}

// Case (b) path with random symmetric Q0, Q1, A1 and SPD A0; τ small enough
// that A(t) stays positive definite.
MatrixPath random_path(std::size_t d, std::mt19937_64& rng) {
  const SymMatrix q0(d, tst::random_symmetric(d, rng));
  const SymMatrix q1(d, tst::random_symmetric(d, rng));
  const SymMatrix a0(d, tst::random_spd(d, rng, 1.0));
  std::vector<double> a1v = tst::random_symmetric(d, rng);
  for (double& v : a1v) v *= 0.1;
  return MatrixPath(q0, q1, a0, SymMatrix(d, a1v), 0.2, QuadCase::kPositiveConstraint);
}

}  // namespace

TEST(MatrixPath, ChecksCaseAtConstruction) {
  EXPECT_THROW(MatrixPath(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({1.0, -1.0}), SymMatrix(2), 1.0,
                          QuadCase::kPositiveConstraint),
               PreconditionError);
  EXPECT_THROW(MatrixPath(SymMatrix::diagonal({1.0, 0.0}), SymMatrix(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                          QuadCase::kPositiveObjective),
               PreconditionError);
  EXPECT_THROW(MatrixPath(SymMatrix::identity(2), SymMatrix(3), SymMatrix::identity(2), SymMatrix(2), 1.0,
                          QuadCase::kPositiveConstraint),
               PreconditionError);
}

TEST(Value, CounterexampleClosedForm) {
  const MatrixPath p = counterexample_path();
  for (double t : {0.0, 0.01, 0.05, 0.1, 0.2, 0.4}) {
    const ValueSample s = value(p, t);
    EXPECT_NEAR(s.g, tst::counterexample_g(t), 1e-13) << "t=" << t;
    EXPECT_NEAR(s.p, -s.g, 1e-12);
    EXPECT_NEAR(p.a(t).quadratic_form(s.u), 1.0, 1e-10);
  }
}

TEST(Value, CounterexampleEigenBranch) {
  const MatrixPath p = counterexample_path();
  double prev_b = 1.0;
  for (double t : {0.2, 0.1, 0.05, 0.01}) {
    const ValueSample s = value(p, t);
    const auto [ux, uy] = tst::counterexample_minimiser(t);
    EXPECT_NEAR(std::abs(s.u[0]), ux, 1e-12);
    EXPECT_NEAR(s.u[1] / s.u[0], tst::counterexample_b(t), 1e-12);
    EXPECT_GT(tst::counterexample_b(t), 0.0);
    EXPECT_LT(tst::counterexample_a(t), 0.0);
    EXPECT_LT(tst::counterexample_b(t), prev_b);
    prev_b = tst::counterexample_b(t);
  }
}

TEST(Value, EllipsePath) {
  const ValueSample s = value(ellipse_path(), 0.5);
  EXPECT_NEAR(s.g, 1.0, 1e-14);
  EXPECT_NEAR(s.u[0], 0.0, 1e-14);
  EXPECT_NEAR(std::abs(s.u[1]), 1.0, 1e-14);
}

TEST(Value, ObjectiveEqualsConstraint) {
  // Q(t) = A(t) at t = 0.5.
  const MatrixPath p(SymMatrix::diagonal({1.0, 2.0}), SymMatrix::diagonal({2.0, 2.0}), SymMatrix::diagonal({1.5, 2.5}),
                     SymMatrix::diagonal({1.0, 1.0}), 1.0, QuadCase::kPositiveConstraint);
  EXPECT_NEAR(value(p, 0.5).g, 1.0, 1e-14);
}

TEST(Value, RejectsOutOfRangeAndLostCase) {
  EXPECT_THROW(value(counterexample_path(), 0.6), PreconditionError);
  EXPECT_THROW(value(counterexample_path(), -0.1), PreconditionError);
  const MatrixPath shrinking(SymMatrix::identity(2), SymMatrix(2), SymMatrix::identity(2),
                             -2.0 * SymMatrix::identity(2), 1.0, QuadCase::kPositiveConstraint);
  try {
    value(shrinking, 0.75);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("case condition violated at t"), std::string::npos);
  }
}

TEST(Lagrangian, Examples) {
  const MatrixPath p = counterexample_path();
  const Vector feasible = value(p, 0.1).u;
  EXPECT_NEAR(lagrangian(p, 0.1, feasible, 3.0), lagrangian(p, 0.1, feasible, -7.0), 1e-12);
  EXPECT_DOUBLE_EQ(lagrangian(p, 0.0, Vector{0.0, 0.0}, 3.0), -3.0);
  EXPECT_DOUBLE_EQ(lagrangian(p, 0.0, Vector{1.0, 0.0}, 1.0), 1.0);
}

TEST(DtLagrangian, Examples) {
  const MatrixPath constant(SymMatrix::diagonal({1.0, 2.0}), SymMatrix(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                            QuadCase::kPositiveConstraint);
  EXPECT_EQ(dt_lagrangian0(constant, Vector{0.3, 0.7}, 5.0), 0.0);
  EXPECT_EQ(dt_lagrangian0(counterexample_path(), Vector{1.0, 0.0}, 1.0), 0.0);
  EXPECT_EQ(dt_lagrangian0(ellipse_path(), Vector{0.0, 1.0}, 1.0), 0.0);
}

TEST(DtLagrangian, AffineInMultiplier) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixPath p = random_path(3, rng);
    const Vector u{n(rng), n(rng), n(rng)};
    const double p1 = n(rng), p3 = n(rng);
    const double lhs = dt_lagrangian0(p, u, p1) + dt_lagrangian0(p, u, p3);
    const double rhs = 2.0 * dt_lagrangian0(p, u, 0.5 * (p1 + p3));
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(Dg0ClosedForm, Examples) {
  EXPECT_NEAR(dg0_closed_form(counterexample_path()).dg0, 0.0, 1e-15);
  EXPECT_NEAR(dg0_closed_form(ellipse_path()).dg0, 0.0, 1e-15);
  EXPECT_NEAR(dg0_closed_form(trivial_path()).dg0, 1.0, 1e-14);
  EXPECT_NEAR(dg0_closed_form(counterexample_path()).p0, -1.0, 1e-15);
}

TEST(Dg0ClosedForm, MinimisesOverRepeatedEigenspace) {
  // X(0) is the whole unit circle; Q1 = diag(3, 1) selects e₂.
  const MatrixPath p(SymMatrix::identity(2), SymMatrix::diagonal({3.0, 1.0}), SymMatrix::identity(2), SymMatrix(2),
                     1.0, QuadCase::kPositiveConstraint);
  const Dg0Result r = dg0_closed_form(p);
  EXPECT_NEAR(r.dg0, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(r.u0[1]), 1.0, 1e-14);
}

TEST(Dg0ClosedForm, SimpleEigenvalueMatchesDtLagrangian) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixPath p = random_path(2 + static_cast<std::size_t>(trial % 3), rng);
    const ValueSample s = value(p, 0.0);
    if (s.eigenspace_dim() != 1) continue;
    const Dg0Result r = dg0_closed_form(p);
    EXPECT_NEAR(r.dg0, dt_lagrangian0(p, s.u, s.p), 1e-10 * (1 + std::abs(r.dg0)));
  }
}

TEST(AveragedAdjoint, EqualPairReducesToAdjoint) {
  const MatrixPath p = counterexample_path();
  const Vector u0 = value(p, 0.0).u;
  const AveragedAdjointOutcome o = averaged_adjoint(p, 0.0, u0, u0);
  ASSERT_TRUE(o.exists());
  EXPECT_NEAR(o.q, -1.0, 1e-14);
}

TEST(AveragedAdjoint, CounterexampleHasNone) {
  const MatrixPath p = counterexample_path();
  const Vector ut = value(p, 0.1).u;
  for (double sign : {1.0, -1.0}) {
    const AveragedAdjointOutcome o = averaged_adjoint(p, 0.1, Vector{sign, 0.0}, ut);
    EXPECT_FALSE(o.exists());
    EXPECT_GT(o.collinearity_defect, 1e-3);
  }
}

TEST(AveragedAdjoint, LiftedPairExistsAndConverges) {
  const MatrixPath p = counterexample_path();
  double prev = 1.0;
  for (double t : {0.1, 0.05, 0.025, 0.0125}) {
    const Vector ut = value(p, t).u;
    const AveragedAdjointOutcome o = averaged_adjoint(p, t, h3_lift(p, ut), ut);
    ASSERT_TRUE(o.exists());
    EXPECT_LE(o.residual, kAveragedAdjointTol);
    // The lifted pair is collinear with ut, so q^t = -g(t).
    EXPECT_NEAR(o.q, -tst::counterexample_g(t), 1e-12);
    EXPECT_LT(std::abs(o.q + 1.0), prev);
    prev = std::abs(o.q + 1.0);
  }
}

TEST(H3Lift, Examples) {
  const MatrixPath p = counterexample_path();
  const Vector on{0.6, 0.8};
  const Vector same = h3_lift(p, on);
  EXPECT_NEAR(same[0], 0.6, 1e-15);
  EXPECT_NEAR(same[1], 0.8, 1e-15);
  const Vector half = h3_lift(p, Vector{1.2, 1.6});
  EXPECT_NEAR(half[0], 0.6, 1e-15);
  EXPECT_NEAR(half[1], 0.8, 1e-15);
  const auto [ux, uy] = tst::counterexample_minimiser(0.1);
  EXPECT_NEAR(p.a0().quadratic_form(h3_lift(p, Vector{ux, uy})), 1.0, 1e-12);
  const MatrixPath lines(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({0.0, 1.0}), SymMatrix(2), 1.0,
                         QuadCase::kPositiveObjective);
  EXPECT_THROW(h3_lift(lines, Vector{1.0, 0.0}), PreconditionError);
}

TEST(SuboptimalPath, Examples) {
  const MatrixPath p = counterexample_path();
  const Vector u0{1.0, 0.0};
  EXPECT_EQ(suboptimal_path(p, u0, 0.0), u0);
  const Vector at = suboptimal_path(p, u0, 0.2);
  EXPECT_NEAR(at[0], 1.0, 1e-15);
  EXPECT_NEAR(at[1], 0.0, 1e-15);
  const MatrixPath constant_a = trivial_path();
  const Vector v{0.6, 0.8};
  EXPECT_EQ(suboptimal_path(constant_a, v, 0.7), v);
}

TEST(SuboptimalPath, LeavesConeThrows) {
  const MatrixPath p(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({1.0, -1.0}),
                     SymMatrix::diagonal({-2.0, 0.0}), 1.0, QuadCase::kPositiveObjective);
  try {
    suboptimal_path(p, Vector{1.0, 0.0}, 0.75);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("shrink tau"), std::string::npos);
  }
}

TEST(SuboptimalPath, HolderRatioVanishes) {
  const MatrixPath p = counterexample_path();
  const Vector u0 = value(p, 0.0).u;
  const MatrixPath moving(p.q0(), p.q1(), p.a0(), SymMatrix::diagonal({1.0, 0.0}), 0.5, QuadCase::kPositiveConstraint);
  double prev = 1e300;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const Vector ut = suboptimal_path(moving, u0, t);
    EXPECT_NEAR(moving.a(t).quadratic_form(ut), 1.0, 1e-12);
    const double r = std::hypot(ut[0] - u0[0], ut[1] - u0[1]) / std::sqrt(t);
    EXPECT_LT(r, prev / 3.0);
    prev = r;
  }
}

TEST(MuMultiplier, Examples) {
  const MatrixPath p = counterexample_path();
  const Vector u0 = value(p, 0.0).u;
  EXPECT_NEAR(mu_multiplier(p, u0, u0), -1.0, 1e-15);

  // Q(0)u0 ⟂ v while A(0)u0·v ≠ 0.
  const MatrixPath skew(SymMatrix::diagonal({0.0, 1.0}), SymMatrix(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                        QuadCase::kPositiveConstraint);
  EXPECT_NEAR(mu_multiplier(skew, Vector{1.0, 1.0}, Vector{1.0, 0.0}), 0.0, 1e-15);

  EXPECT_THROW(mu_multiplier(p, Vector{1.0, 0.0}, Vector{0.0, 1.0}), PreconditionError);
}

TEST(MuMultiplier, BranchTangentGivesAdjoint) {
  const MatrixPath p = counterexample_path();
  const Vector u0 = value(p, 0.0).u;
  const double t = 1e-3;
  const Vector ut = value(p, t).u;
  const Vector v{(ut[0] - u0[0]) / t, (ut[1] - u0[1]) / t};
  const double mu = mu_multiplier(p, u0, v);
  EXPECT_NEAR(mu, dg0_closed_form(p).p0, 1e-9);
  // μ = p0 on this branch, so ∂_tG(0,u0,μ) coincides with dg(0).
  EXPECT_NEAR(dt_lagrangian0(p, u0, mu), dg0_closed_form(p).dg0, 1e-12);
}

TEST(SecondOrder, Examples) {
  const MatrixPath round(SymMatrix::identity(2), SymMatrix(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                         QuadCase::kPositiveConstraint);
  const SecondOrderCheck fail = check_second_order(round, Vector{1.0, 0.0}, -1.0, 0.1);
  EXPECT_FALSE(fail.holds);
  ASSERT_EQ(fail.witness.size(), 2u);
  EXPECT_NEAR(fail.witness[0], 0.0, 1e-15);
  EXPECT_NEAR(std::abs(fail.witness[1]), 1.0, 1e-15);

  const MatrixPath split(SymMatrix::diagonal({1.0, 2.0}), SymMatrix(2), SymMatrix::identity(2), SymMatrix(2), 1.0,
                         QuadCase::kPositiveConstraint);
  const SecondOrderCheck ok = check_second_order(split, Vector{1.0, 0.0}, -1.0, 0.5);
  EXPECT_TRUE(ok.holds);
  EXPECT_NEAR(ok.min_restricted, 1.0, 1e-14);

  const MatrixPath scalar(SymMatrix::identity(1), SymMatrix(1), SymMatrix::identity(1), SymMatrix(1), 1.0,
                          QuadCase::kPositiveConstraint);
  const SecondOrderCheck vacuous = check_second_order(scalar, Vector{1.0}, -1.0, 1.0);
  EXPECT_TRUE(vacuous.holds);
  EXPECT_TRUE(std::isinf(vacuous.min_restricted));
}

TEST(SecondOrder, WitnessIsOrthogonalInHigherDimension) {
  const MatrixPath p(SymMatrix::diagonal({1.0, 1.0, 3.0, 5.0}), SymMatrix(4), SymMatrix::identity(4), SymMatrix(4),
                     1.0, QuadCase::kPositiveConstraint);
  const Vector u0{1.0, 0.0, 0.0, 0.0};
  const SecondOrderCheck c = check_second_order(p, u0, -1.0, 1e-3);
  EXPECT_FALSE(c.holds);
  EXPECT_NEAR(dot(c.witness, u0), 0.0, 1e-14);
  EXPECT_NEAR(norm2(c.witness), 1.0, 1e-14);
}

TEST(IdentityCheck, Examples) {
  const MatrixPath p = counterexample_path();
  const Vector u = value(p, 0.05).u;
  EXPECT_EQ(identity_check(p, 0.05, u, u, 0.3), 0.0);
  const Vector lifted = h3_lift(p, u);
  const AveragedAdjointOutcome o = averaged_adjoint(p, 0.05, lifted, u);
  ASSERT_TRUE(o.exists());
  EXPECT_LE(identity_check(p, 0.05, lifted, u, o.q), 1e-10);
}

TEST(Properties, MultiplierIsMinusValue) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixPath p = random_path(2 + static_cast<std::size_t>(trial % 3), rng);
    for (double t : {0.0, 0.05, 0.2}) {
      const ValueSample s = value(p, t);
      EXPECT_NEAR(s.p, -s.g, 1e-12 * (1 + std::abs(s.g)));
    }
  }
}

TEST(Properties, ValueEqualsLagrangianAtAveragedAdjoint) {
  std::mt19937_64 rng(43);
  int exists = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixPath p = random_path(2 + static_cast<std::size_t>(trial % 3), rng);
    const double t = 0.1;
    const ValueSample s = value(p, t);
    const Vector u0 = h3_lift(p, s.u);
    const AveragedAdjointOutcome o = averaged_adjoint(p, t, u0, s.u);
    if (!o.exists()) continue;
    ++exists;
    EXPECT_NEAR(s.g, lagrangian(p, t, u0, o.q), 1e-9 * (1 + std::abs(s.g)));
  }
  EXPECT_EQ(exists, 100);
}

TEST(Properties, QuadraticRemainderBound) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixPath p = random_path(3, rng);
    const ValueSample s = value(p, 0.0);
    const SymMatrix h = p.q0() + s.p * p.a0();
    Vector grad = h.apply(s.u);
    for (double& g : grad) g *= 2.0;
    const double g0 = lagrangian(p, 0.0, s.u, s.p);
    for (int k = 0; k < 10; ++k) {
      Vector du{n(rng), n(rng), n(rng)};
      Vector u = s.u;
      for (std::size_t i = 0; i < 3; ++i) u[i] += du[i];
      const double rem = std::abs(lagrangian(p, 0.0, u, s.p) - g0 - dot(grad, du));
      EXPECT_LE(rem, 2.0 * h.frobenius() * dot(du, du) * (1 + 1e-12) + 1e-12);
    }
  }
}

TEST(Properties, FiniteDifferencesBracketFormula) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixPath p = random_path(3, rng);
    if (value(p, 0.0).eigenspace_dim() != 1) continue;
    const double dg0 = dg0_closed_form(p).dg0;
    const double g0 = value(p, 0.0).g;
    double prev = 1e300;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      const double err = std::abs((value(p, h).g - g0) / h - dg0);
      EXPECT_LT(err, prev * 0.6 + 1e-9);
      prev = err;
    }
  }
}

TEST(QuadAdapter, AuditsPassOnBuiltins) {
  for (const NamedPath& named : builtin_paths()) {
    const QuadAdapter adapter(named.path, 1);
    for (const auto& [name, a] : adapter.audits()) EXPECT_TRUE(a.pass) << named.id << " " << name << ": " << a.detail;
  }
}

TEST(QuadAdapter, UnknownAuditThrows) {
  EXPECT_THROW(QuadAdapter(counterexample_path()).audit("h9"), PreconditionError);
}

TEST(Builtins, Registry) {
  const auto& paths = builtin_paths();
  ASSERT_EQ(paths.size(), 5u);
  EXPECT_EQ(paths[0].id, "counterexample-3.4");
  EXPECT_TRUE(find_builtin("ellipse-degenerate").has_value());
  EXPECT_FALSE(find_builtin("nope").has_value());
  EXPECT_NEAR(value(*find_builtin("hyperbola-3.1i"), 0.0).g, 1.0, 1e-14);
  EXPECT_NEAR(value(*find_builtin("lines-3.1ii"), 0.0).g, 1.0, 1e-14);
  EXPECT_NEAR(value(*find_builtin("ellipse-3.1iii"), 0.0).g, 0.0, 1e-14);
}
