#pragma once

// Minimal P1 finite elements on 2D triangle meshes.
//
// Zeroth-order terms (reaction, load, tracking) use the lumped (vertex) mass;
// diffusion coefficients and volume weights are taken per element at the
// centroid. Dirichlet dofs are the boundary vertices.

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aadj/densela.hpp"

namespace aadj::fem {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// General 2×2 matrix, row-major: [[xx, xy], [yx, yy]].
struct Mat2 {
  double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

  double det() const { return xx * yy - xy * yx; }
  double trace() const { return xx + yy; }
  Mat2 inverse() const;
  Mat2 transpose() const { return {xx, yx, xy, yy}; }
  double spectral_norm() const;
  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
};

Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator*(double s, const Mat2& a);

/// Symmetric 2×2 coefficient [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 1.0, xy = 0.0, yy = 1.0;
  double min_eigenvalue() const;
  Point2 apply(Point2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
};

using Triangle = std::array<int, 3>;

class TriMesh {
 public:
  /// Boundary vertices are derived from edges with a single incident triangle.
  TriMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles);
  /// As above, and checks that `boundary_mask` matches the derived one.
  TriMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<bool> boundary_mask);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary_mask() const { return boundary_; }
  bool is_boundary(std::size_t v) const { return boundary_[v]; }
  /// Sorted vertex indices.
  const std::vector<int>& boundary_vertices() const { return boundary_list_; }
  const std::vector<int>& interior_vertices() const { return interior_list_; }

  double area(std::size_t tri) const { return areas_[tri]; }
  double total_area() const;
  Point2 centroid(std::size_t tri) const;
  /// Gradients of the three barycentric basis functions on `tri`.
  std::array<Point2, 3> basis_gradients(std::size_t tri) const;

 private:
  void validate();

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  std::vector<int> boundary_list_;
  std::vector<int> interior_list_;
  std::vector<double> areas_;
};

/// Uniform right-triangle mesh of [0,1]² with (n+1)² vertices.
TriMesh unit_square_mesh(int n);

/// Nodal values, one per vertex.
struct P1Field {
  Vector values;

  P1Field() = default;
  explicit P1Field(Vector v) : values(std::move(v)) {}
  static P1Field zeros(const TriMesh& mesh) { return P1Field(Vector(mesh.num_vertices(), 0.0)); }
  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Throws PreconditionError unless field has one value per vertex.
void require_field(const TriMesh& mesh, const P1Field& field, std::string_view what);

/// Per-triangle diffusion tensor and volume weight (det of the pullback Jacobian).
struct ElementCoeffs {
  std::vector<Sym2> diffusion;
  std::vector<double> volume;

  static ElementCoeffs identity(const TriMesh& mesh);
  /// Throws unless sizes match and each diffusion tensor has eigenvalues >= 1e-10.
  void validate(const TriMesh& mesh) const;
};

/// Compressed sparse row matrix with a sorted column pattern.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<int> cols);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return cols_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& cols() const { return cols_; }
  std::vector<double>& values() { return vals_; }
  const std::vector<double>& values() const { return vals_; }

  /// Entry (i, j), 0 when outside the pattern.
  double at(std::size_t i, std::size_t j) const;
  /// Adds to an entry that must lie in the pattern.
  void add(std::size_t i, std::size_t j, double v);
  void add_to_diagonal(std::span<const double> d);

  Vector multiply(std::span<const double> x) const;
  Vector diagonal() const;
  double max_asymmetry() const;

  /// The square block on `dofs` (rows and columns), renumbered 0..k-1.
  SparseMatrix submatrix(std::span<const int> dofs) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

/// Vertex-adjacency pattern of the mesh (including the diagonal).
SparseMatrix mesh_pattern(const TriMesh& mesh);

/// ∑_T |T| A_T ∇φ_j·∇φ_i.
SparseMatrix assemble_stiffness(const TriMesh& mesh, const ElementCoeffs& coeffs);

/// ∑_{T∋i} volume_T |T| / 3.
Vector lumped_mass(const TriMesh& mesh, const ElementCoeffs& coeffs);
/// ∑_{T∋i} |T| / 3.
Vector lumped_mass(const TriMesh& mesh);

/// Stiffness plus lumped (volume-weighted) mass times per-vertex reaction weights.
SparseMatrix assemble_operator(const TriMesh& mesh, const ElementCoeffs& coeffs,
                               std::span<const double> reaction_weights);

struct CgOptions {
  double tol = 1e-12;      // relative residual
  std::size_t max_iters = 0;  // 0: 10 × dofs
};

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  double rel_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for an SPD operator.
/// Throws ConvergenceError("CG stagnation ...") at the iteration cap.
CgResult cg_solve(const SparseMatrix& op, std::span<const double> rhs, const CgOptions& options = {},
                  std::span<const double> initial_guess = {});

/// Strongly monotone, Lipschitz scalar nonlinearity with ϱ(0) = 0.
struct Nonlinearity {
  std::string id;
  double (*rho)(double);
  double (*drho)(double);
  double slope_min;  // inf ϱ'
  double slope_max;  // sup ϱ'
};

/// Registry lookup: "linear", "monotone-sine", "tanh".
const Nonlinearity& nonlinearity(std::string_view id);
std::vector<std::string> nonlinearity_ids();

/// The discrete semilinear operator
///   R(u)_i = (K u)_i + m_i ϱ(u_i) − m0_i f_i   on interior vertices,
/// with K the stiffness for `coeffs`, m the volume-weighted lumped mass and m0
/// the plain lumped mass.
class SemilinearOperator {
 public:
  SemilinearOperator(const TriMesh& mesh, ElementCoeffs coeffs, const Nonlinearity& rho);

  const TriMesh& mesh() const { return *mesh_; }
  const ElementCoeffs& coeffs() const { return coeffs_; }
  const Nonlinearity& rho() const { return *rho_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const Vector& weighted_mass() const { return mass_w_; }
  const Vector& mass() const { return mass_; }
  const std::vector<int>& interior() const { return mesh_->interior_vertices(); }

  /// Residual restricted to interior vertices (ordered as interior()).
  Vector interior_residual(std::span<const double> u, std::span<const double> f) const;
  /// K_II + diag(m_i · reaction_i) over interior vertices.
  SparseMatrix interior_operator(std::span<const double> reaction) const;
  /// Jacobian of the interior residual with respect to interior values.
  SparseMatrix interior_jacobian(std::span<const double> u) const;

 private:
  const TriMesh* mesh_;
  ElementCoeffs coeffs_;
  const Nonlinearity* rho_;
  SparseMatrix stiffness_;
  SparseMatrix stiffness_ii_;
  Vector mass_w_;
  Vector mass_;
};

struct NewtonOptions {
  std::size_t max_iters = 25;
  /// Converged when |R| <= abs_tol · (1 + |m0 f|).
  double abs_tol = 1e-10;
  double cg_tol = 1e-12;
};

struct NewtonResult {
  P1Field u;
  std::size_t iterations = 0;
  std::vector<double> residual_history;
};

/// Solves the semilinear Dirichlet problem. Boundary entries of `dirichlet`
/// are imposed exactly; its interior entries are the initial guess.
NewtonResult newton_semilinear(const SemilinearOperator& op, std::span<const double> f, const P1Field& dirichlet,
                               const NewtonOptions& options = {});
NewtonResult newton_semilinear(const TriMesh& mesh, const ElementCoeffs& coeffs, std::span<const double> f,
                               const P1Field& dirichlet, const Nonlinearity& rho, const NewtonOptions& options = {});

/// Analytic scalar field with gradient.
struct ScalarField {
  std::string name;
  std::function<double(Point2)> value;
  std::function<Point2(Point2)> gradient;
};

/// Analytic vector field with Jacobian ∂X (row i holds ∇X_i).
struct VectorField {
  std::string name;
  std::function<Point2(Point2)> value;
  std::function<Mat2(Point2)> jacobian;
};

Vector interpolate(const TriMesh& mesh, const ScalarField& field);

struct Pullback {
  ElementCoeffs coeffs;  // A(t) = det(∂T_t) ∂T_t⁻¹ ∂T_t⁻ᵀ and det(∂T_t) per element
  Vector f_t;            // det(∂T_t)(x) f(T_t(x)) at vertices
  Vector ur_t;           // u_r(T_t(x)) at vertices
};

/// max over element centroids of the spectral norm of ∂X.
double lipschitz_estimate(const TriMesh& mesh, const VectorField& x);

/// Transports the problem on T_t(Ω), T_t = id + tX, back to the reference mesh.
/// Throws PreconditionError when t·Lip(X) >= 1 or some det(∂T_t) <= 0.
Pullback pullback_coeffs(const TriMesh& mesh, const VectorField& x, double t, const ScalarField& f,
                         const ScalarField& u_r);

/// Moves every vertex to T_t(vertex); throws on inverted elements.
TriMesh transform_mesh(const TriMesh& mesh, const VectorField& x, double t);

/// "vertices N triangles M", then N lines "x y", then M lines "i j k" (zero-based).
void write_mesh(std::ostream& os, const TriMesh& mesh);
TriMesh read_mesh(std::istream& is);
/// CSV "vertex_id,x,y,value".
void write_field_csv(std::ostream& os, const TriMesh& mesh, const P1Field& field);

}  // namespace aadj::fem
