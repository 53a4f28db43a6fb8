#pragma once

// Parametric quadratic value function
//
//   g(t) = inf { Q(t)u·u : A(t)u·u = 1 },   Q(t) = Q0 + t Q1,  A(t) = A0 + t A1,
//
// with its Lagrangian G(t,u,p) = Q(t)u·u + p (A(t)u·u − 1), adjoints,
// averaged adjoints and the constructions used to check the hypotheses of the
// right-derivative formula dg(0) = min over minimisers of (Q1 + p⁰A1)u·u.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aadj/densela.hpp"
#include "aadj/sensitivity.hpp"

namespace aadj::quad {

class MatrixPath {
 public:
  /// Throws PreconditionError unless (Q0, A0) satisfies the declared case.
  MatrixPath(SymMatrix q0, SymMatrix q1, SymMatrix a0, SymMatrix a1, double tau, QuadCase which);

  std::size_t dim() const { return q0_.dim(); }
  double tau() const { return tau_; }
  QuadCase which() const { return which_; }

  const SymMatrix& q0() const { return q0_; }
  const SymMatrix& q1() const { return q1_; }
  const SymMatrix& a0() const { return a0_; }
  const SymMatrix& a1() const { return a1_; }

  SymMatrix q(double t) const { return q0_ + t * q1_; }
  SymMatrix a(double t) const { return a0_ + t * a1_; }

 private:
  SymMatrix q0_, q1_, a0_, a1_;
  double tau_;
  QuadCase which_;
};

struct ValueSample {
  double t = 0.0;
  double g = 0.0;
  Vector u;             // one minimiser, A(t)u·u = 1
  double p = 0.0;       // multiplier, p = -g
  DenseMatrix eigenspace;
  std::size_t eigenspace_dim() const { return eigenspace.cols(); }
};

/// g(t) and a minimiser. The case condition is re-checked at t.
ValueSample value(const MatrixPath& path, double t);

double lagrangian(const MatrixPath& path, double t, std::span<const double> u, double p);

/// ∂_t G(0,u,p) = (Q1 + p A1)u·u.
double dt_lagrangian0(const MatrixPath& path, std::span<const double> u, double p);

struct Dg0Result {
  double dg0 = 0.0;
  Vector u0;
  double p0 = 0.0;
};

/// Minimises (Q1 + p⁰A1)u·u over the minimiser set X(0).
Dg0Result dg0_closed_form(const MatrixPath& path);

struct AveragedAdjointOutcome {
  enum class Status { kExists, kNotSolvable };
  Status status = Status::kNotSolvable;
  double q = 0.0;
  double residual = 0.0;
  double collinearity_defect = 0.0;
  bool exists() const { return status == Status::kExists; }
};

/// Relative stationarity defect above which no averaged adjoint exists.
inline constexpr double kAveragedAdjointTol = 1e-9;

/// Solves Q(t)w + q A(t)w = 0 for w = ut + u0 in the least-squares sense and
/// classifies the pair.
AveragedAdjointOutcome averaged_adjoint(const MatrixPath& path, double t, std::span<const double> u0,
                                        std::span<const double> ut);

/// ut / sqrt(A(0)ut·ut): the point of E(0) collinear with ut.
Vector h3_lift(const MatrixPath& path, std::span<const double> ut);

/// u0 / sqrt(A(t)u0·u0), a path in E(t) through u0.
Vector suboptimal_path(const MatrixPath& path, std::span<const double> u0, double t);

/// μ = −(Q(0)u0·v)/(A(0)u0·v).
double mu_multiplier(const MatrixPath& path, std::span<const double> u0, std::span<const double> v);

struct SecondOrderCheck {
  bool holds = true;
  double min_restricted = 0.0;  // +inf when the complement is empty
  Vector witness;               // unit vector in (A(0)u0)^⊥, set when !holds
};

/// Tests (Q(0) + p0 A(0))v·v >= α|v|² on (A(0)u0)^⊥.
SecondOrderCheck check_second_order(const MatrixPath& path, std::span<const double> u0, double p0, double alpha);

/// |G(t,ut,q) − G(t,u0,q)|.
double identity_check(const MatrixPath& path, double t, std::span<const double> u0, std::span<const double> ut,
                      double q);

// Hypothesis audits along the lines of the verification of the main theorem.

/// Averaged adjoints of lifted pairs along t_n = 2⁻ⁿ·t0, n = 1..levels.
AuditResult audit_h3(const MatrixPath& path, double t0 = 0.1, int levels = 8);
/// ‖ū^t − u⁰‖/√t at t = 1e-2, 1e-3, 1e-4 for the suboptimal path.
AuditResult audit_h4(const MatrixPath& path);
/// Quadratic remainder of G(0,·,p⁰) at u⁰ over random perturbations.
AuditResult audit_h5(const MatrixPath& path, std::uint64_t seed, int samples = 100);
/// G(t,u^t,q^t) = G(t,u⁰,q^t) and g(t) = G(t,u⁰,q^t) along the audit sequence.
AuditResult audit_identity(const MatrixPath& path, double t0 = 0.1, int levels = 8);

class QuadAdapter final : public ProblemAdapter {
 public:
  explicit QuadAdapter(MatrixPath path, std::uint64_t seed = 1) : path_(std::move(path)), seed_(seed) {}

  double value(double t) const override { return quad::value(path_, t).g; }
  double dg0_closed_form() const override { return quad::dg0_closed_form(path_).dg0; }
  AuditMap audits() const override;
  /// Single audit by name ("h3", "h4", "h5", "identity").
  AuditResult audit(const std::string& name) const;

  const MatrixPath& path() const { return path_; }

 private:
  MatrixPath path_;
  std::uint64_t seed_;
};

struct NamedPath {
  std::string id;
  std::string description;
  MatrixPath path;
};

/// Built-in scenarios, in listing order.
const std::vector<NamedPath>& builtin_paths();
std::optional<MatrixPath> find_builtin(const std::string& id);

/// Q = diag(1,2), A(t) = [[1,t],[t,1]].
MatrixPath counterexample_path();

}  // namespace aadj::quad
