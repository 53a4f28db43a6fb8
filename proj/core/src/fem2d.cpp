#include "aadj/fem2d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "aadj/error.hpp"

namespace aadj::fem {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

// ---------------------------------------------------------------------------
// Small 2×2 algebra

Mat2 Mat2::inverse() const {
  const double d = det();
  return {yy / d, -xy / d, -yx / d, xx / d};
}

double Mat2::spectral_norm() const {
  const double s = 0.5 * (xx * xx + xy * xy + yx * yx + yy * yy);
  const double d = det();
  return std::sqrt(s + std::sqrt(std::max(0.0, s * s - d * d)));
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy, a.yx * b.xx + a.yy * b.yx,
          a.yx * b.xy + a.yy * b.yy};
}

Mat2 operator+(const Mat2& a, const Mat2& b) { return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy}; }

Mat2 operator*(double s, const Mat2& a) { return {s * a.xx, s * a.xy, s * a.yx, s * a.yy}; }

double Sym2::min_eigenvalue() const {
  const double m = 0.5 * (xx + yy);
  const double r = std::hypot(0.5 * (xx - yy), xy);
  return m - r;
}

// ---------------------------------------------------------------------------
// Mesh

TriMesh::TriMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  validate();
}

TriMesh::TriMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<bool> boundary_mask)
    : TriMesh(std::move(vertices), std::move(triangles)) {
  if (boundary_mask != boundary_) {
    throw PreconditionError("TriMesh: boundary mask disagrees with edge incidence");
  }
}

void TriMesh::validate() {
  const int nv = static_cast<int>(vertices_.size());
  if (nv < 3 || triangles_.empty()) throw PreconditionError("TriMesh: need at least one triangle");
  areas_.resize(triangles_.size());
  std::map<std::pair<int, int>, int> edges;
  for (std::size_t k = 0; k < triangles_.size(); ++k) {
    const Triangle& tri = triangles_[k];
    for (int v : tri) {
      if (v < 0 || v >= nv) {
        throw PreconditionError("TriMesh: triangle " + std::to_string(k) + " has vertex index out of range");
      }
    }
    const double a = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    if (!(a >= 1e-14)) {
      throw PreconditionError("TriMesh: triangle " + std::to_string(k) + " has area " + fmt(a) + " < 1e-14");
    }
    areas_[k] = a;
    for (int e = 0; e < 3; ++e) {
      const int i = tri[e];
      const int j = tri[(e + 1) % 3];
      ++edges[{std::min(i, j), std::max(i, j)}];
    }
  }
  boundary_.assign(vertices_.size(), false);
  for (const auto& [edge, count] : edges) {
    if (count > 2) throw PreconditionError("TriMesh: edge shared by more than two triangles");
    if (count == 1) boundary_[edge.first] = boundary_[edge.second] = true;
  }
  boundary_list_.clear();
  interior_list_.clear();
  for (int v = 0; v < nv; ++v) (boundary_[v] ? boundary_list_ : interior_list_).push_back(v);
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (double a : areas_) s += a;
  return s;
}

Point2 TriMesh::centroid(std::size_t tri) const {
  const Triangle& t = triangles_[tri];
  return {(vertices_[t[0]].x + vertices_[t[1]].x + vertices_[t[2]].x) / 3.0,
          (vertices_[t[0]].y + vertices_[t[1]].y + vertices_[t[2]].y) / 3.0};
}

std::array<Point2, 3> TriMesh::basis_gradients(std::size_t tri) const {
  const Triangle& t = triangles_[tri];
  const Point2 p0 = vertices_[t[0]], p1 = vertices_[t[1]], p2 = vertices_[t[2]];
  const double s = 1.0 / (2.0 * areas_[tri]);
  return {Point2{(p1.y - p2.y) * s, (p2.x - p1.x) * s}, Point2{(p2.y - p0.y) * s, (p0.x - p2.x) * s},
          Point2{(p0.y - p1.y) * s, (p1.x - p0.x) * s}};
}

TriMesh unit_square_mesh(int n) {
  if (n < 2) throw PreconditionError("unit_square_mesh: n must be at least 2");
  std::vector<Point2> verts;
  verts.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  const double h = 1.0 / n;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) verts.push_back({i == n ? 1.0 : i * h, j == n ? 1.0 : j * h});
  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2 * n * n));
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriMesh(std::move(verts), std::move(tris));
}

void require_field(const TriMesh& mesh, const P1Field& field, std::string_view what) {
  if (field.size() != mesh.num_vertices()) {
    throw PreconditionError(std::string(what) + ": field has " + std::to_string(field.size()) + " values for " +
                            std::to_string(mesh.num_vertices()) + " vertices");
  }
}

ElementCoeffs ElementCoeffs::identity(const TriMesh& mesh) {
  return {std::vector<Sym2>(mesh.num_triangles()), std::vector<double>(mesh.num_triangles(), 1.0)};
}

void ElementCoeffs::validate(const TriMesh& mesh) const {
  if (diffusion.size() != mesh.num_triangles() || volume.size() != mesh.num_triangles()) {
    throw PreconditionError("ElementCoeffs: one coefficient per triangle required");
  }
  for (std::size_t k = 0; k < diffusion.size(); ++k) {
    if (!(diffusion[k].min_eigenvalue() >= 1e-10)) {
      throw PreconditionError("ElementCoeffs: diffusion on triangle " + std::to_string(k) +
                              " is not positive definite");
    }
    if (!(volume[k] > 0.0)) {
      throw PreconditionError("ElementCoeffs: volume weight on triangle " + std::to_string(k) + " is not positive");
    }
  }
}

// ---------------------------------------------------------------------------
// Sparse matrices

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<int> cols)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(cols_.size(), 0.0) {}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<int>(j));
  if (it == last || *it != static_cast<int>(j)) return 0.0;
  return vals_[static_cast<std::size_t>(it - cols_.begin())];
}

void SparseMatrix::add(std::size_t i, std::size_t j, double v) {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<int>(j));
  if (it == last || *it != static_cast<int>(j)) throw PreconditionError("SparseMatrix::add: entry outside pattern");
  vals_[static_cast<std::size_t>(it - cols_.begin())] += v;
}

void SparseMatrix::add_to_diagonal(std::span<const double> d) {
  for (std::size_t i = 0; i < n_; ++i) add(i, i, d[i]);
}

Vector SparseMatrix::multiply(std::span<const double> x) const {
  Vector y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[static_cast<std::size_t>(cols_[k])];
    y[i] = s;
  }
  return y;
}

Vector SparseMatrix::diagonal() const {
  Vector d(n_);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

double SparseMatrix::max_asymmetry() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      m = std::max(m, std::abs(vals_[k] - at(static_cast<std::size_t>(cols_[k]), i)));
    }
  }
  return m;
}

SparseMatrix SparseMatrix::submatrix(std::span<const int> dofs) const {
  std::vector<int> local(n_, -1);
  for (std::size_t k = 0; k < dofs.size(); ++k) local[static_cast<std::size_t>(dofs[k])] = static_cast<int>(k);
  std::vector<std::size_t> rp{0};
  std::vector<int> cols;
  std::vector<double> vals;
  for (int gi : dofs) {
    const auto i = static_cast<std::size_t>(gi);
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const int lj = local[static_cast<std::size_t>(cols_[k])];
      if (lj >= 0) {
        cols.push_back(lj);
        vals.push_back(vals_[k]);
      }
    }
    rp.push_back(cols.size());
  }
  // Rows are already sorted when `dofs` is increasing.
  SparseMatrix out(dofs.size(), std::move(rp), {});
  out.cols_ = std::move(cols);
  out.vals_ = std::move(vals);
  for (std::size_t i = 0; i < out.n_; ++i) {
    const auto b = out.row_ptr_[i], e = out.row_ptr_[i + 1];
    if (!std::is_sorted(out.cols_.begin() + static_cast<std::ptrdiff_t>(b),
                        out.cols_.begin() + static_cast<std::ptrdiff_t>(e))) {
      std::vector<std::pair<int, double>> row;
      for (auto k = b; k < e; ++k) row.emplace_back(out.cols_[k], out.vals_[k]);
      std::sort(row.begin(), row.end());
      for (auto k = b; k < e; ++k) std::tie(out.cols_[k], out.vals_[k]) = row[k - b];
    }
  }
  return out;
}

SparseMatrix mesh_pattern(const TriMesh& mesh) {
  std::vector<std::vector<int>> adj(mesh.num_vertices());
  for (const Triangle& t : mesh.triangles()) {
    for (int a : t)
      for (int b : t) adj[static_cast<std::size_t>(a)].push_back(b);
  }
  std::vector<std::size_t> rp{0};
  std::vector<int> cols;
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    rp.push_back(cols.size());
  }
  return SparseMatrix(mesh.num_vertices(), std::move(rp), std::move(cols));
}

SparseMatrix assemble_stiffness(const TriMesh& mesh, const ElementCoeffs& coeffs) {
  coeffs.validate(mesh);
  SparseMatrix k = mesh_pattern(mesh);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const auto grads = mesh.basis_gradients(e);
    const Triangle& tri = mesh.triangles()[e];
    const double area = mesh.area(e);
    for (int b = 0; b < 3; ++b) {
      const Point2 ag = coeffs.diffusion[e].apply(grads[b]);
      for (int a = 0; a < 3; ++a) {
        k.add(static_cast<std::size_t>(tri[a]), static_cast<std::size_t>(tri[b]),
              area * (ag.x * grads[a].x + ag.y * grads[a].y));
      }
    }
  }
  return k;
}

Vector lumped_mass(const TriMesh& mesh, const ElementCoeffs& coeffs) {
  Vector m(mesh.num_vertices(), 0.0);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const double w = coeffs.volume[e] * mesh.area(e) / 3.0;
    for (int v : mesh.triangles()[e]) m[static_cast<std::size_t>(v)] += w;
  }
  return m;
}

Vector lumped_mass(const TriMesh& mesh) {
  Vector m(mesh.num_vertices(), 0.0);
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const double w = mesh.area(e) / 3.0;
    for (int v : mesh.triangles()[e]) m[static_cast<std::size_t>(v)] += w;
  }
  return m;
}

SparseMatrix assemble_operator(const TriMesh& mesh, const ElementCoeffs& coeffs,
                               std::span<const double> reaction_weights) {
  if (reaction_weights.size() != mesh.num_vertices()) {
    throw PreconditionError("assemble_operator: one reaction weight per vertex required");
  }
  SparseMatrix op = assemble_stiffness(mesh, coeffs);
  Vector m = lumped_mass(mesh, coeffs);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] *= reaction_weights[i];
  op.add_to_diagonal(m);
  return op;
}

CgResult cg_solve(const SparseMatrix& op, std::span<const double> rhs, const CgOptions& options,
                  std::span<const double> initial_guess) {
  const std::size_t n = op.size();
  if (rhs.size() != n) throw PreconditionError("cg_solve: rhs size mismatch");
  CgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) return res;
  if (!initial_guess.empty()) res.x.assign(initial_guess.begin(), initial_guess.end());

  Vector inv_diag = op.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw PreconditionError("cg_solve: operator has a non-positive diagonal entry");
    d = 1.0 / d;
  }
  Vector r(rhs.begin(), rhs.end());
  if (!initial_guess.empty()) {
    const Vector ax = op.multiply(res.x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
  }
  Vector z(n), p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
  double rz = dot(r, z);
  const std::size_t cap = options.max_iters > 0 ? options.max_iters : 10 * n;
  double rnorm = norm2(r);
  while (rnorm > options.tol * bnorm) {
    if (res.iterations >= cap) {
      throw ConvergenceError("CG stagnation after " + std::to_string(res.iterations) +
                             " iterations, relative residual " + fmt(rnorm / bnorm));
    }
    const Vector ap = op.multiply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw ConvergenceError("CG breakdown: operator not positive definite");
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rnorm = norm2(r);
    ++res.iterations;
  }
  res.rel_residual = rnorm / bnorm;
  return res;
}

// ---------------------------------------------------------------------------
// Nonlinearities

namespace {

double rho_linear(double u) { return u; }
double drho_linear(double) { return 1.0; }
double rho_msine(double u) { return 2.0 * u + std::sin(u); }
double drho_msine(double u) { return 2.0 + std::cos(u); }
double rho_tanh(double u) { return u + std::tanh(u); }
double drho_tanh(double u) {
  const double th = std::tanh(u);
  return 2.0 - th * th;
}

const std::vector<Nonlinearity>& registry() {
  static const std::vector<Nonlinearity> r{
      {"linear", rho_linear, drho_linear, 1.0, 1.0},
      {"monotone-sine", rho_msine, drho_msine, 1.0, 3.0},
      {"tanh", rho_tanh, drho_tanh, 1.0, 2.0},
  };
  return r;
}

}  // namespace

const Nonlinearity& nonlinearity(std::string_view id) {
  for (const Nonlinearity& n : registry()) {
    if (n.id == id) return n;
  }
  throw PreconditionError("unknown nonlinearity '" + std::string(id) + "'");
}

std::vector<std::string> nonlinearity_ids() {
  std::vector<std::string> ids;
  for (const Nonlinearity& n : registry()) ids.push_back(n.id);
  return ids;
}

// ---------------------------------------------------------------------------
// Semilinear operator and Newton

SemilinearOperator::SemilinearOperator(const TriMesh& mesh, ElementCoeffs coeffs, const Nonlinearity& rho)
    : mesh_(&mesh), coeffs_(std::move(coeffs)), rho_(&rho) {
  stiffness_ = assemble_stiffness(mesh, coeffs_);
  stiffness_ii_ = stiffness_.submatrix(mesh.interior_vertices());
  mass_w_ = lumped_mass(mesh, coeffs_);
  mass_ = lumped_mass(mesh);
}

Vector SemilinearOperator::interior_residual(std::span<const double> u, std::span<const double> f) const {
  const Vector ku = stiffness_.multiply(u);
  const auto& in = interior();
  Vector r(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto i = static_cast<std::size_t>(in[k]);
    r[k] = ku[i] + mass_w_[i] * rho_->rho(u[i]) - mass_[i] * f[i];
  }
  return r;
}

SparseMatrix SemilinearOperator::interior_operator(std::span<const double> reaction) const {
  SparseMatrix op = stiffness_ii_;
  const auto& in = interior();
  Vector d(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto i = static_cast<std::size_t>(in[k]);
    d[k] = mass_w_[i] * reaction[i];
  }
  op.add_to_diagonal(d);
  return op;
}

SparseMatrix SemilinearOperator::interior_jacobian(std::span<const double> u) const {
  Vector reaction(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) reaction[i] = rho_->drho(u[i]);
  return interior_operator(reaction);
}

NewtonResult newton_semilinear(const SemilinearOperator& op, std::span<const double> f, const P1Field& dirichlet,
                               const NewtonOptions& options) {
  const TriMesh& mesh = op.mesh();
  require_field(mesh, dirichlet, "newton_semilinear");
  if (f.size() != mesh.num_vertices()) throw PreconditionError("newton_semilinear: rhs field size mismatch");
  const auto& in = op.interior();

  double load = 0.0;
  for (int i : in) load += std::pow(op.mass()[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)], 2);
  const double tol = options.abs_tol * (1.0 + std::sqrt(load));

  NewtonResult res;
  res.u = dirichlet;
  Vector r = op.interior_residual(res.u.values, f);
  double rn = norm2(r);
  res.residual_history.push_back(rn);
  const CgOptions cg{options.cg_tol, 0};

  while (rn > tol) {
    if (res.iterations >= options.max_iters) {
      std::ostringstream os;
      os << "Newton did not converge in " << options.max_iters << " iterations; residual history:";
      for (double h : res.residual_history) os << ' ' << fmt(h);
      throw ConvergenceError(os.str());
    }
    const SparseMatrix jac = op.interior_jacobian(res.u.values);
    Vector neg(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) neg[k] = -r[k];
    const Vector delta = cg_solve(jac, neg, cg).x;

    double step = 1.0;
    bool accepted = false;
    P1Field trial = res.u;
    Vector rt;
    for (int halvings = 0; halvings < 30; ++halvings, step *= 0.5) {
      for (std::size_t k = 0; k < in.size(); ++k) {
        const auto i = static_cast<std::size_t>(in[k]);
        trial[i] = res.u[i] + step * delta[k];
      }
      rt = op.interior_residual(trial.values, f);
      if (norm2(rt) < rn) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("Newton line search failed at residual " + fmt(rn));
    }
    res.u = std::move(trial);
    r = std::move(rt);
    rn = norm2(r);
    res.residual_history.push_back(rn);
    ++res.iterations;
  }
  return res;
}

NewtonResult newton_semilinear(const TriMesh& mesh, const ElementCoeffs& coeffs, std::span<const double> f,
                               const P1Field& dirichlet, const Nonlinearity& rho, const NewtonOptions& options) {
  const SemilinearOperator op(mesh, coeffs, rho);
  return newton_semilinear(op, f, dirichlet, options);
}

// ---------------------------------------------------------------------------
// Domain transformation

Vector interpolate(const TriMesh& mesh, const ScalarField& field) {
  Vector v(mesh.num_vertices());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = field.value(mesh.vertices()[i]);
  return v;
}

double lipschitz_estimate(const TriMesh& mesh, const VectorField& x) {
  double l = 0.0;
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) l = std::max(l, x.jacobian(mesh.centroid(e)).spectral_norm());
  return l;
}

namespace {

void require_small_t(const TriMesh& mesh, const VectorField& x, double t, const char* who) {
  const double lip = lipschitz_estimate(mesh, x);
  if (!(std::abs(t) * lip < 1.0)) {
    throw PreconditionError(std::string(who) + ": t*Lip(X) = " + fmt(std::abs(t) * lip) + " >= 1 at t=" + fmt(t));
  }
}

}  // namespace

Pullback pullback_coeffs(const TriMesh& mesh, const VectorField& x, double t, const ScalarField& f,
                         const ScalarField& u_r) {
  require_small_t(mesh, x, t, "pullback_coeffs");
  Pullback pb;
  pb.coeffs.diffusion.resize(mesh.num_triangles());
  pb.coeffs.volume.resize(mesh.num_triangles());
  for (std::size_t e = 0; e < mesh.num_triangles(); ++e) {
    const Mat2 dt = Mat2::identity() + t * x.jacobian(mesh.centroid(e));
    const double det = dt.det();
    if (!(det > 0.0)) throw PreconditionError("mesh tangling at t=" + fmt(t) + " (triangle " + std::to_string(e) + ")");
    const Mat2 inv = dt.inverse();
    const Mat2 a = det * (inv * inv.transpose());
    pb.coeffs.diffusion[e] = Sym2{a.xx, 0.5 * (a.xy + a.yx), a.yy};
    pb.coeffs.volume[e] = det;
  }
  pb.f_t.resize(mesh.num_vertices());
  pb.ur_t.resize(mesh.num_vertices());
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Point2 p = mesh.vertices()[i];
    const Point2 xv = x.value(p);
    const Point2 moved{p.x + t * xv.x, p.y + t * xv.y};
    const double det = (Mat2::identity() + t * x.jacobian(p)).det();
    pb.f_t[i] = det * f.value(moved);
    pb.ur_t[i] = u_r.value(moved);
  }
  return pb;
}

TriMesh transform_mesh(const TriMesh& mesh, const VectorField& x, double t) {
  require_small_t(mesh, x, t, "transform_mesh");
  std::vector<Point2> moved = mesh.vertices();
  for (Point2& p : moved) {
    const Point2 xv = x.value(p);
    p = {p.x + t * xv.x, p.y + t * xv.y};
  }
  try {
    return TriMesh(std::move(moved), mesh.triangles());
  } catch (const PreconditionError& e) {
    throw PreconditionError("mesh tangling at t=" + fmt(t) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Text formats

void write_mesh(std::ostream& os, const TriMesh& mesh) {
  char buf[128];
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (const Point2& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  for (const Triangle& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriMesh read_mesh(std::istream& is) {
  std::string w1, w2;
  std::size_t nv = 0, nt = 0;
  if (!(is >> w1 >> nv >> w2 >> nt) || w1 != "vertices" || w2 != "triangles") {
    throw PreconditionError("read_mesh: expected header 'vertices N triangles M'");
  }
  std::vector<Point2> verts(nv);
  for (Point2& p : verts) {
    if (!(is >> p.x >> p.y)) throw PreconditionError("read_mesh: truncated vertex block");
  }
  std::vector<Triangle> tris(nt);
  for (Triangle& t : tris) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw PreconditionError("read_mesh: truncated triangle block");
  }
  return TriMesh(std::move(verts), std::move(tris));
}

void write_field_csv(std::ostream& os, const TriMesh& mesh, const P1Field& field) {
  require_field(mesh, field, "write_field_csv");
  char buf[160];
  os << "vertex_id,x,y,value\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Point2& p = mesh.vertices()[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, p.x, p.y, field[i]);
    os << buf;
  }
}

}  // namespace aadj::fem
