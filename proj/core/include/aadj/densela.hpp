#pragma once

// Small dense symmetric linear algebra for the finite-dimensional backend.
// Everything here is sized for d <= 16; no blocking, no BLAS.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace aadj {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Symmetric d×d matrix stored row-major. Construction symmetrises (M + Mᵀ)/2,
/// so entries(i, j) == entries(j, i) holds bitwise.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim);
  SymMatrix(std::size_t dim, std::span<const double> row_major);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix diagonal(std::initializer_list<double> diag);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  std::span<const double> row_major() const { return data_; }

  Vector apply(std::span<const double> x) const;
  /// x·(S x)
  double quadratic_form(std::span<const double> x) const;
  double max_abs() const;
  double frobenius() const;

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Dense column-major rectangular matrix; used for eigenvector bases and factors.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }

  Vector apply(std::span<const double> x) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Bᵀ S B for a symmetric S and a d×k basis B.
SymMatrix congruence(const SymMatrix& s, const DenseMatrix& basis);

struct EigenDecomp {
  Vector eigenvalues;      // ascending
  DenseMatrix eigenvectors;  // one eigenvector per column
};

/// Full spectral decomposition by cyclic Jacobi rotations (at most 100 sweeps).
/// Each eigenvector has its first non-negligible component positive.
EigenDecomp sym_eigen(const SymMatrix& s);

/// Lower-triangular L with S = L Lᵀ. Throws PreconditionError("not positive
/// definite") when a pivot drops below 1e-14 · max diagonal.
DenseMatrix cholesky(const SymMatrix& s);

/// Solves L y = b (forward) and Lᵀ x = y (backward) for a Cholesky factor.
Vector solve_lower(const DenseMatrix& l, std::span<const double> b);
Vector solve_lower_transpose(const DenseMatrix& l, std::span<const double> b);

/// Generalised eigenpairs Q u = λ A u for A positive definite. Eigenvectors are
/// A-orthonormal: u_iᵀ A u_j = δ_ij.
EigenDecomp gen_eigen_pd(const SymMatrix& q, const SymMatrix& a);

/// The two existence regimes for inf { Qu·u : Au·u = 1 }.
enum class QuadCase {
  kPositiveObjective,   // (a) Q positive definite, A takes a positive value somewhere
  kPositiveConstraint,  // (b) A positive definite, Q arbitrary
};

struct ConstrainedQuadMin {
  double value = 0.0;        // g
  Vector minimiser;          // A u·u = 1
  double multiplier = 0.0;   // p with Q u + p A u = 0, p = -g
  DenseMatrix eigenspace;    // A-orthonormal basis of the minimiser eigenspace
};

/// Relative tolerance grouping eigenvalues into the minimiser eigenspace.
inline constexpr double kEigenspaceTol = 1e-9;

/// Minimises Q u·u over A u·u = 1 via the generalised eigenproblem of (Q, A).
ConstrainedQuadMin min_constrained_quadratic(const SymMatrix& q, const SymMatrix& a, QuadCase which);

}  // namespace aadj
