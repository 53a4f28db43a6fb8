#include "aadj/quadprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "aadj/error.hpp"

namespace aadj::quad {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Throws PreconditionError with a diagnostic eigenvalue when (Q, A) leaves the case.
void require_case(const SymMatrix& q, const SymMatrix& a, QuadCase which, double t) {
  if (which == QuadCase::kPositiveConstraint) {
    const double amin = sym_eigen(a).eigenvalues.front();
    if (!(amin > 1e-14 * std::max(1.0, a.max_abs()))) {
      throw PreconditionError("case condition violated at t=" + fmt(t) + ": A(t) not positive definite (min eigenvalue " +
                              fmt(amin) + ")");
    }
    return;
  }
  const double qmin = sym_eigen(q).eigenvalues.front();
  if (!(qmin > 1e-14 * std::max(1.0, q.max_abs()))) {
    throw PreconditionError("case condition violated at t=" + fmt(t) + ": Q(t) not positive definite (min eigenvalue " +
                            fmt(qmin) + ")");
  }
  const double amax = sym_eigen(a).eigenvalues.back();
  if (!(amax > 1e-12 * std::max(1.0, a.max_abs()))) {
    throw PreconditionError("case condition violated at t=" + fmt(t) + ": A(t) has no positive direction (max eigenvalue " +
                            fmt(amax) + ")");
  }
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * x[i];
  return out;
}

void require_dim(const MatrixPath& path, std::span<const double> v, const char* what) {
  if (v.size() != path.dim()) {
    throw PreconditionError(std::string(what) + ": vector length " + std::to_string(v.size()) + " != dimension " +
                            std::to_string(path.dim()));
  }
}

}  // namespace

MatrixPath::MatrixPath(SymMatrix q0, SymMatrix q1, SymMatrix a0, SymMatrix a1, double tau, QuadCase which)
    : q0_(std::move(q0)), q1_(std::move(q1)), a0_(std::move(a0)), a1_(std::move(a1)), tau_(tau), which_(which) {
  const std::size_t d = q0_.dim();
  if (d == 0 || q1_.dim() != d || a0_.dim() != d || a1_.dim() != d) {
    throw PreconditionError("MatrixPath: Q0, Q1, A0, A1 must share one dimension >= 1");
  }
  if (!(tau_ > 0.0)) throw PreconditionError("MatrixPath: tau must be positive");
  require_case(q0_, a0_, which_, 0.0);
}

ValueSample value(const MatrixPath& path, double t) {
  if (!(t >= 0.0) || t > path.tau() * (1.0 + 1e-12)) {
    throw PreconditionError("value: t=" + fmt(t) + " outside [0, tau=" + fmt(path.tau()) + "]");
  }
  const SymMatrix q = path.q(t);
  const SymMatrix a = path.a(t);
  require_case(q, a, path.which(), t);
  ConstrainedQuadMin m = min_constrained_quadratic(q, a, path.which());
  ValueSample s;
  s.t = t;
  s.g = m.value;
  s.p = m.multiplier;
  s.u = std::move(m.minimiser);
  s.eigenspace = std::move(m.eigenspace);
  return s;
}

double lagrangian(const MatrixPath& path, double t, std::span<const double> u, double p) {
  require_dim(path, u, "lagrangian");
  return path.q(t).quadratic_form(u) + p * (path.a(t).quadratic_form(u) - 1.0);
}

double dt_lagrangian0(const MatrixPath& path, std::span<const double> u, double p) {
  require_dim(path, u, "dt_lagrangian0");
  return path.q1().quadratic_form(u) + p * path.a1().quadratic_form(u);
}

Dg0Result dg0_closed_form(const MatrixPath& path) {
  const ValueSample s = value(path, 0.0);
  const SymMatrix reduced_q = congruence(path.q1() + s.p * path.a1(), s.eigenspace);
  const SymMatrix reduced_a = congruence(path.a0(), s.eigenspace);
  ConstrainedQuadMin r;
  try {
    r = min_constrained_quadratic(reduced_q, reduced_a, QuadCase::kPositiveConstraint);
  } catch (const Error& e) {
    throw PreconditionError(std::string("dg0_closed_form: reduced pencil on the minimiser eigenspace failed: ") +
                            e.what());
  }
  Dg0Result out;
  out.dg0 = r.value;
  out.p0 = s.p;
  out.u0 = s.eigenspace.apply(r.minimiser);
  return out;
}

AveragedAdjointOutcome averaged_adjoint(const MatrixPath& path, double t, std::span<const double> u0,
                                        std::span<const double> ut) {
  require_dim(path, u0, "averaged_adjoint");
  require_dim(path, ut, "averaged_adjoint");
  const SymMatrix q = path.q(t);
  const SymMatrix a = path.a(t);
  const Vector w = axpy(1.0, u0, ut);
  const Vector qw = q.apply(w);
  const Vector aw = a.apply(w);
  const double wn = norm2(w);
  const double qn = q.frobenius();
  const double an = a.frobenius();
  const double eps = 1e-12 * std::max({1.0, qn, an});

  AveragedAdjointOutcome out;
  const bool a_small = norm2(aw) <= eps * wn;
  if (a_small && norm2(qw) <= eps * wn) {
    // Every q solves the equation.
    out.status = AveragedAdjointOutcome::Status::kExists;
    return out;
  }
  if (a_small) {
    out.residual = out.collinearity_defect = norm2(qw) / (qn * wn);
    out.status = out.residual <= kAveragedAdjointTol ? AveragedAdjointOutcome::Status::kExists
                                                     : AveragedAdjointOutcome::Status::kNotSolvable;
    return out;
  }
  out.q = -dot(qw, aw) / dot(aw, aw);
  const Vector r = axpy(out.q, aw, qw);
  out.residual = norm2(r) / ((qn + std::abs(out.q) * an) * wn);
  out.collinearity_defect = out.residual;
  out.status = out.residual <= kAveragedAdjointTol ? AveragedAdjointOutcome::Status::kExists
                                                   : AveragedAdjointOutcome::Status::kNotSolvable;
  return out;
}

Vector h3_lift(const MatrixPath& path, std::span<const double> ut) {
  require_dim(path, ut, "h3_lift");
  const double n = path.a0().quadratic_form(ut);
  if (!(n > 0.0)) throw PreconditionError("h3_lift: lift undefined, A(0)u·u = " + fmt(n) + " <= 0");
  Vector out(ut.begin(), ut.end());
  const double s = 1.0 / std::sqrt(n);
  for (double& x : out) x *= s;
  return out;
}

Vector suboptimal_path(const MatrixPath& path, std::span<const double> u0, double t) {
  require_dim(path, u0, "suboptimal_path");
  const double n = path.a(t).quadratic_form(u0);
  if (!(n > 0.0)) {
    throw PreconditionError("suboptimal_path: path leaves cone at t=" + fmt(t) + " (A(t)u0·u0 = " + fmt(n) +
                            "), shrink tau");
  }
  Vector out(u0.begin(), u0.end());
  const double s = 1.0 / std::sqrt(n);
  for (double& x : out) x *= s;
  return out;
}

double mu_multiplier(const MatrixPath& path, std::span<const double> u0, std::span<const double> v) {
  require_dim(path, u0, "mu_multiplier");
  require_dim(path, v, "mu_multiplier");
  const Vector au = path.a0().apply(u0);
  const double den = dot(au, v);
  if (std::abs(den) <= 1e-12 * norm2(au) * norm2(v)) {
    throw PreconditionError("mu undefined: A(0)u0·v = 0");
  }
  return -dot(path.q0().apply(u0), v) / den;
}

SecondOrderCheck check_second_order(const MatrixPath& path, std::span<const double> u0, double p0, double alpha) {
  require_dim(path, u0, "check_second_order");
  const std::size_t d = path.dim();
  SecondOrderCheck out;
  if (d == 1) {
    out.min_restricted = std::numeric_limits<double>::infinity();
    return out;
  }
  Vector n = path.a0().apply(u0);
  const double nn = norm2(n);
  if (!(nn > 0.0)) throw PreconditionError("check_second_order: A(0)u0 vanishes");
  for (double& x : n) x /= nn;

  // The projector I − nnᵀ has eigenvalue 0 on n and 1 on its complement.
  std::vector<double> proj(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) proj[i * d + j] = (i == j ? 1.0 : 0.0) - n[i] * n[j];
  const EigenDecomp pe = sym_eigen(SymMatrix(d, proj));
  DenseMatrix basis(d, d - 1);
  for (std::size_t k = 1; k < d; ++k) {
    std::copy(pe.eigenvectors.col(k).begin(), pe.eigenvectors.col(k).end(), basis.col(k - 1).begin());
  }

  const EigenDecomp re = sym_eigen(congruence(path.q0() + p0 * path.a0(), basis));
  out.min_restricted = re.eigenvalues.front();
  out.holds = out.min_restricted >= alpha;
  if (!out.holds) {
    out.witness = basis.apply(re.eigenvectors.col(0));
    const double wn = norm2(out.witness);
    for (double& x : out.witness) x /= wn;
  }
  return out;
}

double identity_check(const MatrixPath& path, double t, std::span<const double> u0, std::span<const double> ut,
                      double q) {
  return std::abs(lagrangian(path, t, ut, q) - lagrangian(path, t, u0, q));
}

AuditResult audit_h3(const MatrixPath& path, double t0, int levels) {
  const double p0 = value(path, 0.0).p;
  AuditResult res;
  res.pass = true;
  for (int n = 1; n <= levels; ++n) {
    const double t = std::ldexp(t0, -n);
    const ValueSample s = value(path, t);
    const Vector lifted = h3_lift(path, s.u);
    const AveragedAdjointOutcome o = averaged_adjoint(path, t, lifted, s.u);
    if (!o.exists()) {
      res.pass = false;
      res.detail = "no averaged adjoint for the lifted pair at t=" + fmt(t);
      res.series.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    res.series.push_back(std::abs(o.q - p0));
  }
  for (std::size_t k = 1; k < res.series.size(); ++k) {
    if (res.series[k] > res.series[k - 1] + 1e-14) {
      res.pass = false;
      if (res.detail.empty()) res.detail = "|q^t - p0| not monotone along t_n";
    }
  }
  res.value = res.series.empty() ? 0.0 : res.series.back();
  if (res.value > 1e-3) {
    res.pass = false;
    if (res.detail.empty()) res.detail = "|q^t - p0| at the smallest t exceeds 1e-3";
  }
  if (res.pass) res.detail = "q^t -> p0 = " + fmt(p0);
  return res;
}

AuditResult audit_h4(const MatrixPath& path) {
  const Vector u0 = value(path, 0.0).u;
  AuditResult res;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const Vector ut = suboptimal_path(path, u0, t);
    res.series.push_back(norm2(axpy(-1.0, u0, ut)) / std::sqrt(t));
  }
  res.value = res.series.back();
  res.pass = res.series.back() <= 0.5 * res.series.front();
  res.detail = res.pass ? "suboptimal path ratio decays like sqrt(t)" : "ratio does not halve from t=1e-2 to t=1e-4";
  return res;
}

AuditResult audit_h5(const MatrixPath& path, std::uint64_t seed, int samples) {
  const ValueSample s0 = value(path, 0.0);
  const SymMatrix hess = path.q0() + s0.p * path.a0();
  const double bound = 2.0 * hess.frobenius();
  const Vector grad = [&] {
    Vector g = hess.apply(s0.u);
    for (double& x : g) x *= 2.0;
    return g;
  }();
  const double g0 = lagrangian(path, 0.0, s0.u, s0.p);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> expo(-3.0, 0.0);

  AuditResult res;
  res.pass = true;
  const double slack = 1e-8 * (1.0 + bound + std::abs(g0));
  for (int k = 0; k < samples; ++k) {
    Vector dir(path.dim());
    for (double& x : dir) x = normal(rng);
    const double scale = std::pow(10.0, expo(rng)) / norm2(dir);
    for (double& x : dir) x *= scale;
    const Vector u = axpy(1.0, dir, s0.u);
    const double rem = std::abs(lagrangian(path, 0.0, u, s0.p) - g0 - dot(grad, dir));
    const double ratio = rem / dot(dir, dir);
    res.series.push_back(ratio);
    res.value = std::max(res.value, ratio);
    if (ratio > bound + slack) res.pass = false;
  }
  res.detail = "max remainder/|du|^2 vs bound " + fmt(bound);
  return res;
}

AuditResult audit_identity(const MatrixPath& path, double t0, int levels) {
  AuditResult res;
  res.pass = true;
  for (int n = 1; n <= levels; ++n) {
    const double t = std::ldexp(t0, -n);
    const ValueSample s = value(path, t);
    const Vector lifted = h3_lift(path, s.u);
    const AveragedAdjointOutcome o = averaged_adjoint(path, t, lifted, s.u);
    if (!o.exists()) continue;
    const double scale = 1.0 + std::abs(s.g);
    const double swap = identity_check(path, t, lifted, s.u, o.q) / scale;
    const double ginf = std::abs(s.g - lagrangian(path, t, lifted, o.q)) / scale;
    const double worst = std::max(swap, ginf);
    res.series.push_back(worst);
    res.value = std::max(res.value, worst);
  }
  res.pass = !res.series.empty() && res.value <= 1e-9;
  res.detail = "max |G(t,u^t,q^t) - G(t,u0,q^t)| and |g(t) - G(t,u0,q^t)| over (1+|g|)";
  return res;
}

AuditMap QuadAdapter::audits() const {
  AuditMap out;
  for (const char* name : {"h3", "h4", "h5", "identity"}) out.emplace(name, audit(name));
  return out;
}

AuditResult QuadAdapter::audit(const std::string& name) const {
  if (name == "h3") return audit_h3(path_);
  if (name == "h4") return audit_h4(path_);
  if (name == "h5") return audit_h5(path_, seed_);
  if (name == "identity") return audit_identity(path_);
  throw PreconditionError("unknown audit '" + name + "' (expected h3, h4, h5 or identity)");
}

MatrixPath counterexample_path() {
  return MatrixPath(SymMatrix::diagonal({1.0, 2.0}), SymMatrix(2), SymMatrix::identity(2), SymMatrix{{0, 1}, {1, 0}},
                    0.5, QuadCase::kPositiveConstraint);
}

const std::vector<NamedPath>& builtin_paths() {
  static const std::vector<NamedPath> paths = [] {
    std::vector<NamedPath> v;
    v.push_back({"counterexample-3.4", "Q=diag(1,2), A(t)=[[1,t],[t,1]]; averaged adjoints fail for X(0)xX(t) pairs",
                 counterexample_path()});
    v.push_back({"ellipse-degenerate", "Q=I, A(t)=diag(t,1); ellipses collapsing onto two lines at t=0",
                 MatrixPath(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({0.0, 1.0}),
                            SymMatrix::diagonal({1.0, 0.0}), 0.5, QuadCase::kPositiveObjective)});
    v.push_back({"hyperbola-3.1i", "Q=I, A=diag(1,-1); constraint set is a hyperbola",
                 MatrixPath(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({1.0, -1.0}), SymMatrix(2), 1.0,
                            QuadCase::kPositiveObjective)});
    v.push_back({"lines-3.1ii", "Q=I, A=diag(0,1); constraint set is two parallel lines",
                 MatrixPath(SymMatrix::identity(2), SymMatrix(2), SymMatrix::diagonal({0.0, 1.0}), SymMatrix(2), 1.0,
                            QuadCase::kPositiveObjective)});
    v.push_back({"ellipse-3.1iii", "Q=diag(1,0), A=diag(2,1); constraint set is an ellipse",
                 MatrixPath(SymMatrix::diagonal({1.0, 0.0}), SymMatrix(2), SymMatrix::diagonal({2.0, 1.0}),
                            SymMatrix(2), 1.0, QuadCase::kPositiveConstraint)});
    return v;
  }();
  return paths;
}

std::optional<MatrixPath> find_builtin(const std::string& id) {
  for (const NamedPath& p : builtin_paths()) {
    if (p.id == id) return p.path;
  }
  return std::nullopt;
}

}  // namespace aadj::quad
