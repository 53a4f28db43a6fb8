#pragma once

// Shape sensitivity of
//
//   J(Ω) = inf { ∫_Ω (u − u_r)² + γ|∇u|² : u ∈ H¹(Ω), −Δu + ϱ(u) = f weakly in Ω },
//
// under T_t = id + tX, discretised with P1 elements on a reference mesh.
// The solution set E(t) is searched through Dirichlet traces: each trace has
// exactly one state, so the inner problem is an unconstrained minimisation
// over boundary values (limited-memory BFGS with the discrete adjoint gradient).
//
// The discrete Lagrangian is
//   G(t,u,p) = Σ m_t,i (u_i − u_r,i^t)² + γ uᵀK_t u + Σ_interior p_i R_t(u)_i,
// with R_t the pulled-back state residual; every derivative below is the exact
// derivative of this expression.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "aadj/fem2d.hpp"
#include "aadj/fields.hpp"
#include "aadj/sensitivity.hpp"

namespace aadj::shape {

struct InnerOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;  // relative to 1 + |J|
  int memory = 10;
};

struct ShapeScenario {
  std::string id;
  int mesh_n = 32;
  std::string rho_id = "monotone-sine";
  fields::FieldSpec f_spec{"constant", {1.0}};
  fields::FieldSpec ur_spec{"poly-xy", {1.0}};
  fields::FieldSpec x_spec{"bump-x", {1.0}};
  double gamma = 1e-2;
  InnerOptions inner;
  fem::NewtonOptions newton{25, 1e-12, 1e-13};

  /// Builds mesh and fields; throws PreconditionError on invalid parameters.
  void materialise();

  // Populated by materialise().
  std::shared_ptr<const fem::TriMesh> mesh;
  fem::ScalarField f;
  fem::ScalarField u_r;
  fem::VectorField x;
  const fem::Nonlinearity* rho = nullptr;
};

/// n = 32, ϱ(u) = 2u + sin u, f = 1, u_r = x·y, γ = 1e-2, X = (x(1−x)y(1−y), 0).
ShapeScenario square_basic();

enum class ValueMode { kPullback, kTransformedMesh };
enum class Variant { kCorrected, kAsPrinted };

const char* to_string(Variant v);
const char* to_string(ValueMode m);

/// The discrete problem at one t: mesh, pulled-back operator and data.
class DiscreteProblem {
 public:
  DiscreteProblem(const ShapeScenario& scenario, double t, ValueMode mode = ValueMode::kPullback);
  DiscreteProblem(const DiscreteProblem&) = delete;
  DiscreteProblem& operator=(const DiscreteProblem&) = delete;
  DiscreteProblem(DiscreteProblem&&) = default;

  double t() const { return t_; }
  const fem::TriMesh& mesh() const { return *mesh_; }
  const fem::SemilinearOperator& op() const { return *op_; }
  const Vector& f_t() const { return f_t_; }
  const Vector& ur_t() const { return ur_t_; }
  double gamma() const { return gamma_; }

  /// State with the given boundary trace; `guess` seeds interior values.
  fem::P1Field state(std::span<const double> trace, const fem::P1Field* guess = nullptr) const;
  double cost(const fem::P1Field& u) const;
  /// Gradient of the cost with respect to all nodal values.
  Vector cost_gradient(const fem::P1Field& u) const;
  /// Interior adjoint: (K_II + diag(m ϱ'(u))) p = −∂cost/∂u_I, p = 0 on the boundary.
  fem::P1Field adjoint(const fem::P1Field& u) const;
  /// Derivative of the reduced cost with respect to the trace.
  Vector reduced_gradient(const fem::P1Field& u, const fem::P1Field& p) const;
  double lagrangian(const fem::P1Field& u, const fem::P1Field& p) const;
  Vector trace_of(const fem::P1Field& u) const;

 private:
  double t_;
  double gamma_;
  std::shared_ptr<const fem::TriMesh> mesh_;
  std::unique_ptr<fem::SemilinearOperator> op_;
  Vector f_t_;
  Vector ur_t_;
  fem::NewtonOptions newton_;
};

struct InnerSolution {
  double t = 0.0;
  fem::P1Field u;
  Vector trace;
  double J = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
  std::vector<double> J_history;  // accepted iterates
};

fem::P1Field state_solve(const ShapeScenario& scenario, double t, std::span<const double> trace);
double cost(const ShapeScenario& scenario, double t, const fem::P1Field& u);
double lagrangian(const ShapeScenario& scenario, double t, const fem::P1Field& u, const fem::P1Field& p);

/// Minimises the reduced cost over Dirichlet traces. Starts from `warm_start`
/// or, if absent, from the trace of u_r^t.
InnerSolution inner_minimize(const ShapeScenario& scenario, double t,
                             const std::optional<Vector>& warm_start = std::nullopt,
                             ValueMode mode = ValueMode::kPullback);
InnerSolution inner_minimize(const DiscreteProblem& problem, const InnerOptions& options,
                             const std::optional<Vector>& warm_start = std::nullopt);

fem::P1Field adjoint0(const ShapeScenario& scenario, const fem::P1Field& u);

/// ∂_t G(0,u,p). kCorrected uses the chain-rule coefficient 2 on
/// (u − u_r)∇u_r·X; kAsPrinted uses 1.
double shape_derivative(const ShapeScenario& scenario, const fem::P1Field& u, const fem::P1Field& p,
                        Variant variant = Variant::kCorrected);

/// Averaged adjoint for a pair with equal traces. kCorrected is the u-derivative
/// of G averaged along [u0, ut]; kAsPrinted keeps the alternative right-hand
/// side (sign-flipped tracking term, det·A(t) gradient term without γ).
fem::P1Field averaged_adjoint_fem(const ShapeScenario& scenario, double t, const fem::P1Field& u0,
                                  const fem::P1Field& ut, Variant variant = Variant::kCorrected);

/// g(t) by inner minimisation, either pulled back or on the moved mesh.
double value_oracle(const ShapeScenario& scenario, double t, ValueMode mode,
                    const std::optional<Vector>& warm_start = std::nullopt);

/// sqrt(vᵀK₀v + vᵀM₀v) on the reference mesh.
double h1_norm(const ShapeScenario& scenario, std::span<const double> v);

class ShapeAdapter final : public ProblemAdapter {
 public:
  /// `variant` selects the formula returned by dg0_closed_form(); both are
  /// always listed in variant_results().
  explicit ShapeAdapter(ShapeScenario scenario, std::uint64_t seed = 1, Variant variant = Variant::kCorrected);

  double value(double t) const override;
  double dg0_closed_form() const override;
  AuditMap audits() const override;
  VariantMap variant_results() const override;

  /// Single audit by name: "identity", "h3", "h4", "h5", "reduced_gradient".
  AuditResult audit(const std::string& name) const;

  const ShapeScenario& scenario() const { return scenario_; }
  const InnerSolution& reference() const { return ref_; }
  const fem::P1Field& reference_adjoint() const { return p0_; }

  /// Inner minimiser at t warm-started from the t = 0 trace (memoised).
  InnerSolution minimiser(double t) const;

 private:
  ShapeScenario scenario_;
  std::uint64_t seed_;
  Variant variant_;
  InnerSolution ref_;
  fem::P1Field p0_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, InnerSolution> cache_;
};

}  // namespace aadj::shape
