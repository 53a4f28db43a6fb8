#include "aadj/densela.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aadj/error.hpp"

namespace aadj {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SymMatrix::SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {
  if (dim == 0) throw PreconditionError("SymMatrix: dimension must be at least 1");
}

SymMatrix::SymMatrix(std::size_t dim, std::span<const double> row_major) : SymMatrix(dim) {
  if (row_major.size() != dim * dim) {
    std::ostringstream os;
    os << "SymMatrix: expected " << dim * dim << " entries, got " << row_major.size();
    throw PreconditionError(os.str());
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      data_[i * dim + j] = 0.5 * (row_major[i * dim + j] + row_major[j * dim + i]);
    }
  }
}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw PreconditionError("SymMatrix: rows must form a square matrix");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  *this = SymMatrix(rows.size(), flat);
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.data_[i * dim + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.data_[i * diag.size() + i] = diag[i];
  return m;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

Vector SymMatrix::apply(std::span<const double> x) const {
  Vector y(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += data_[i * dim_ + j] * x[j];
    y[i] = s;
  }
  return y;
}

double SymMatrix::quadratic_form(std::span<const double> x) const { return dot(x, apply(x)); }

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::frobenius() const { return norm2(data_); }

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim_ != b.dim_) throw PreconditionError("SymMatrix: dimension mismatch in sum");
  SymMatrix c = a;
  for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] += b.data_[k];
  return c;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix c = a;
  for (double& v : c.data_) v *= s;
  return c;
}

Vector DenseMatrix::apply(std::span<const double> x) const {
  Vector y(rows_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) y[i] += (*this)(i, j) * x[j];
  }
  return y;
}

SymMatrix congruence(const SymMatrix& s, const DenseMatrix& basis) {
  const std::size_t k = basis.cols();
  std::vector<Vector> sb;
  sb.reserve(k);
  for (std::size_t j = 0; j < k; ++j) sb.push_back(s.apply(basis.col(j)));
  std::vector<double> out(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = dot(basis.col(i), sb[j]);
  }
  return SymMatrix(k, out);
}

namespace {

void fix_sign(std::span<double> v) {
  double big = 0.0;
  for (double x : v) big = std::max(big, std::abs(x));
  if (big == 0.0) return;
  for (double x : v) {
    if (std::abs(x) > 1e-10 * big) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      return;
    }
  }
}

}  // namespace

EigenDecomp sym_eigen(const SymMatrix& s) {
  const std::size_t n = s.dim();
  std::vector<double> a(s.row_major().begin(), s.row_major().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  DenseMatrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  Vector d(n), b(n), z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = b[i] = at(i, i);

  auto rotate = [](double& x, double& y, double sn, double tau) {
    const double g = x;
    const double h = y;
    x = g - sn * (h + g * tau);
    y = h + sn * (g - h * tau);
  };

  constexpr int kMaxSweeps = 100;
  bool converged = n == 1;
  for (int sweep = 1; sweep <= kMaxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(at(p, q));
    if (off == 0.0) {
      converged = true;
      break;
    }
    const double thresh = sweep < 4 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = 100.0 * std::abs(at(p, q));
        if (sweep > 4 && std::abs(d[p]) + g == std::abs(d[p]) && std::abs(d[q]) + g == std::abs(d[q])) {
          at(p, q) = 0.0;
        } else if (std::abs(at(p, q)) > thresh) {
          double h = d[q] - d[p];
          double t;
          if (std::abs(h) + g == std::abs(h)) {
            t = at(p, q) / h;
          } else {
            const double theta = 0.5 * h / at(p, q);
            t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
            if (theta < 0.0) t = -t;
          }
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double sn = t * c;
          const double tau = sn / (1.0 + c);
          h = t * at(p, q);
          z[p] -= h;
          z[q] += h;
          d[p] -= h;
          d[q] += h;
          at(p, q) = 0.0;
          for (std::size_t j = 0; j < p; ++j) rotate(at(j, p), at(j, q), sn, tau);
          for (std::size_t j = p + 1; j < q; ++j) rotate(at(p, j), at(j, q), sn, tau);
          for (std::size_t j = q + 1; j < n; ++j) rotate(at(p, j), at(q, j), sn, tau);
          for (std::size_t j = 0; j < n; ++j) rotate(v(j, p), v(j, q), sn, tau);
        }
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      b[p] += z[p];
      d[p] = b[p];
      z[p] = 0.0;
    }
  }
  if (!converged) {
    throw ConvergenceError("sym_eigen: cyclic Jacobi did not converge in 100 sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });

  EigenDecomp out{Vector(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = d[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
    fix_sign(out.eigenvectors.col(k));
  }
  return out;
}

DenseMatrix cholesky(const SymMatrix& s) {
  const std::size_t n = s.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, s(i, i));
  const double floor = 1e-14 * max_diag;

  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = s(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > floor) || max_diag <= 0.0) throw PreconditionError("cholesky: not positive definite");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

Vector solve_lower(const DenseMatrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

Vector solve_lower_transpose(const DenseMatrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  Vector x(b.begin(), b.end());
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l(k, ii) * x[k];
    x[ii] /= l(ii, ii);
  }
  return x;
}

namespace {

// L⁻¹ S L⁻ᵀ for a Cholesky factor L.
SymMatrix whiten(const SymMatrix& s, const DenseMatrix& l) {
  const std::size_t n = s.dim();
  DenseMatrix y(n, n);  // column j: L⁻¹ S e_j
  for (std::size_t j = 0; j < n; ++j) {
    Vector ej(n, 0.0);
    ej[j] = 1.0;
    const Vector col = solve_lower(l, s.apply(ej));
    std::copy(col.begin(), col.end(), y.col(j).begin());
  }
  // (L⁻¹ S L⁻ᵀ) = L⁻¹ (L⁻¹ S)ᵀ; row i of Y is column i of Yᵀ.
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector row(n);
    for (std::size_t j = 0; j < n; ++j) row[j] = y(i, j);
    const Vector col = solve_lower(l, row);
    for (std::size_t k = 0; k < n; ++k) m[k * n + i] = col[k];
  }
  return SymMatrix(n, m);
}

}  // namespace

EigenDecomp gen_eigen_pd(const SymMatrix& q, const SymMatrix& a) {
  if (q.dim() != a.dim()) throw PreconditionError("gen_eigen_pd: dimension mismatch");
  const DenseMatrix l = cholesky(a);
  EigenDecomp e = sym_eigen(whiten(q, l));
  const std::size_t n = q.dim();
  for (std::size_t k = 0; k < n; ++k) {
    const Vector u = solve_lower_transpose(l, e.eigenvectors.col(k));
    std::copy(u.begin(), u.end(), e.eigenvectors.col(k).begin());
    fix_sign(e.eigenvectors.col(k));
  }
  return e;
}

ConstrainedQuadMin min_constrained_quadratic(const SymMatrix& q, const SymMatrix& a, QuadCase which) {
  if (q.dim() != a.dim()) throw PreconditionError("min_constrained_quadratic: dimension mismatch");
  const std::size_t n = q.dim();
  ConstrainedQuadMin out;

  if (which == QuadCase::kPositiveConstraint) {
    const EigenDecomp e = gen_eigen_pd(q, a);
    const double lmin = e.eigenvalues.front();
    std::size_t mult = 1;
    while (mult < n && std::abs(e.eigenvalues[mult] - lmin) <= kEigenspaceTol * (1.0 + std::abs(lmin))) ++mult;
    out.value = lmin;
    out.multiplier = -lmin;
    out.eigenspace = DenseMatrix(n, mult);
    for (std::size_t k = 0; k < mult; ++k) {
      std::copy(e.eigenvectors.col(k).begin(), e.eigenvectors.col(k).end(), out.eigenspace.col(k).begin());
    }
  } else {
    DenseMatrix lq;
    try {
      lq = cholesky(q);
    } catch (const PreconditionError&) {
      throw PreconditionError("min_constrained_quadratic: case (a) requires Q positive definite");
    }
    const EigenDecomp e = sym_eigen(whiten(a, lq));
    const double lmax = e.eigenvalues.back();
    double scale = 1.0;
    for (double v : e.eigenvalues) scale = std::max(scale, std::abs(v));
    if (!(lmax > 1e-12 * scale)) {
      throw PreconditionError("constraint set misses positive A-cone: value unbounded or empty");
    }
    std::size_t mult = 1;
    while (mult < n && std::abs(e.eigenvalues[n - 1 - mult] - lmax) <= kEigenspaceTol * (1.0 + std::abs(lmax))) {
      ++mult;
    }
    out.value = 1.0 / lmax;
    out.multiplier = -out.value;
    out.eigenspace = DenseMatrix(n, mult);
    const double s = 1.0 / std::sqrt(lmax);
    for (std::size_t k = 0; k < mult; ++k) {
      Vector u = solve_lower_transpose(lq, e.eigenvectors.col(n - 1 - k));
      for (double& x : u) x *= s;
      fix_sign(u);
      std::copy(u.begin(), u.end(), out.eigenspace.col(k).begin());
    }
  }
  out.minimiser.assign(out.eigenspace.col(0).begin(), out.eigenspace.col(0).end());
  return out;
}

}  // namespace aadj
