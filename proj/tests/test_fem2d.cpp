#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "aadj/error.hpp"
#include "aadj/fem2d.hpp"
#include "aadj/fields.hpp"
#include "oracles.hpp"

using namespace aadj;
using namespace aadj::fem;
namespace tst = aadj::testing;

namespace {

constexpr double kPi = std::numbers::pi;

P1Field zero_dirichlet(const TriMesh& mesh) { return P1Field::zeros(mesh); }

Vector interior_values(const TriMesh& mesh, const Vector& full) {
  Vector out;
  for (int i : mesh.interior_vertices()) out.push_back(full[static_cast<std::size_t>(i)]);
  return out;
}

// u = sin(πx)sin(πy) solves −Δu + ϱ(u) = f for f = 2π²u + ϱ(u).
double manufactured_error(int n, const Nonlinearity& rho) {
  const TriMesh mesh = unit_square_mesh(n);
  Vector f(mesh.num_vertices()), exact(mesh.num_vertices());
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const Point2 p = mesh.vertices()[i];
    exact[i] = std::sin(kPi * p.x) * std::sin(kPi * p.y);
    f[i] = 2 * kPi * kPi * exact[i] + rho.rho(exact[i]);
  }
  const NewtonResult r = newton_semilinear(mesh, ElementCoeffs::identity(mesh), f, zero_dirichlet(mesh), rho);
  double err = 0.0;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) err = std::max(err, std::abs(r.u[i] - exact[i]));
  return err;
}

}  // namespace

TEST(TriMesh, UnitSquareCounts) {
  const TriMesh m = unit_square_mesh(4);
  EXPECT_EQ(m.num_vertices(), 25u);
  EXPECT_EQ(m.num_triangles(), 32u);
  EXPECT_EQ(m.boundary_vertices().size(), 16u);
  EXPECT_EQ(m.interior_vertices().size(), 9u);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-14);
  EXPECT_TRUE(m.is_boundary(0));
  EXPECT_FALSE(m.is_boundary(6));
  EXPECT_THROW(unit_square_mesh(1), PreconditionError);
}

TEST(TriMesh, BasisGradientsSumToZero) {
  const TriMesh m = unit_square_mesh(3);
  for (std::size_t e = 0; e < m.num_triangles(); ++e) {
    const auto g = m.basis_gradients(e);
    EXPECT_NEAR(g[0].x + g[1].x + g[2].x, 0.0, 1e-13);
    EXPECT_NEAR(g[0].y + g[1].y + g[2].y, 0.0, 1e-13);
  }
}

TEST(TriMesh, RejectsInvalidInput) {
  const std::vector<Point2> v{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_THROW(TriMesh(v, {{0, 1, 7}}), PreconditionError);
  EXPECT_THROW(TriMesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}), PreconditionError);
  EXPECT_THROW(TriMesh(v, {}), PreconditionError);
  EXPECT_THROW(TriMesh(v, {{0, 1, 2}}, {true, true, false, false}), PreconditionError);
  const std::vector<Point2> fan{{0, 0}, {1, 0}, {0, 1}, {-1, -1}, {1, -1}};
  EXPECT_THROW(TriMesh(fan, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}}), PreconditionError);
  EXPECT_NO_THROW(TriMesh(v, {{0, 1, 3}}, {true, true, false, true}));
}

TEST(Stiffness, ConstantsInKernelAndSymmetric) {
  const TriMesh m = unit_square_mesh(8);
  const SparseMatrix k = assemble_stiffness(m, ElementCoeffs::identity(m));
  const Vector ones(m.num_vertices(), 1.0);
  for (double r : k.multiply(ones)) EXPECT_NEAR(r, 0.0, 1e-12);
  EXPECT_LE(k.max_asymmetry(), 1e-14);
  const Vector mass = lumped_mass(m);
  double total = 0.0;
  for (double x : mass) total += x;
  EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(Stiffness, LinearFieldEnergy) {
  // ∫|∇(x + 2y)|² = 5 on the unit square.
  const TriMesh m = unit_square_mesh(5);
  const SparseMatrix k = assemble_stiffness(m, ElementCoeffs::identity(m));
  const Vector u = interpolate(m, fields::make_scalar({"linear", {0.0, 1.0, 2.0}}));
  EXPECT_NEAR(dot(u, k.multiply(u)), 5.0, 1e-12);
}

TEST(Stiffness, SmallestEigenvalueApproximatesLaplacian) {
  const TriMesh m = unit_square_mesh(16);
  const SparseMatrix kii = assemble_stiffness(m, ElementCoeffs::identity(m)).submatrix(m.interior_vertices());
  const Vector mass = interior_values(m, lumped_mass(m));
  Vector x(kii.size(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector rhs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) rhs[i] = mass[i] * x[i];
    Vector y = cg_solve(kii, rhs, {1e-13, 0}).x;
    double mn = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) mn += mass[i] * y[i] * y[i];
    for (double& v : y) v /= std::sqrt(mn);
    x = std::move(y);
  }
  const Vector kx = kii.multiply(x);
  lambda = dot(x, kx);
  EXPECT_NEAR(lambda, 2 * kPi * kPi, 0.05 * 2 * kPi * kPi);
}

TEST(SparseMatrix, PatternAndEntries) {
  const TriMesh m = unit_square_mesh(2);
  SparseMatrix p = mesh_pattern(m);
  EXPECT_EQ(p.size(), 9u);
  EXPECT_EQ(p.at(0, 8), 0.0);
  EXPECT_THROW(p.add(0, 8, 1.0), PreconditionError);
  p.add(0, 1, 2.5);
  EXPECT_EQ(p.at(0, 1), 2.5);
}

TEST(CgSolve, ZeroRhsAndIdentity) {
  const TriMesh m = unit_square_mesh(4);
  SparseMatrix id = mesh_pattern(m);
  id.add_to_diagonal(Vector(m.num_vertices(), 1.0));
  const CgResult zero = cg_solve(id, Vector(m.num_vertices(), 0.0));
  EXPECT_EQ(zero.iterations, 0u);
  for (double v : zero.x) EXPECT_EQ(v, 0.0);
  Vector b(m.num_vertices());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(i) - 3.0;
  const CgResult r = cg_solve(id, b);
  EXPECT_LE(r.iterations, 1u);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(r.x[i], b[i], 1e-14);
}

TEST(CgSolve, MatchesDenseSolve) {
  const TriMesh m = unit_square_mesh(8);
  const ElementCoeffs c = ElementCoeffs::identity(m);
  const SparseMatrix op = assemble_operator(m, c, Vector(m.num_vertices(), 1.0)).submatrix(m.interior_vertices());
  const std::size_t n = op.size();
  ASSERT_EQ(n, 49u);
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dense[i * n + j] = op.at(i, j);
  Vector b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = std::cos(static_cast<double>(i));
  const Vector expected = tst::dense_spd_solve(dense, b);
  const CgResult r = cg_solve(op, b, {1e-14, 0});
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.x[i], expected[i], 1e-11);
}

TEST(CgSolve, StagnationThrows) {
  const TriMesh m = unit_square_mesh(8);
  const SparseMatrix op =
      assemble_stiffness(m, ElementCoeffs::identity(m)).submatrix(m.interior_vertices());
  Vector b(op.size(), 1.0);
  try {
    cg_solve(op, b, {1e-14, 2});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("CG stagnation"), std::string::npos);
  }
}

TEST(Nonlinearity, Registry) {
  const auto ids = nonlinearity_ids();
  EXPECT_EQ(ids.size(), 3u);
  for (const std::string& id : ids) {
    const Nonlinearity& r = nonlinearity(id);
    EXPECT_EQ(r.rho(0.0), 0.0);
    for (double u : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
      const double fd = (r.rho(u + 1e-6) - r.rho(u - 1e-6)) / 2e-6;
      EXPECT_NEAR(r.drho(u), fd, 1e-8) << id;
      EXPECT_GE(r.drho(u), r.slope_min - 1e-12);
      EXPECT_LE(r.drho(u), r.slope_max + 1e-12);
    }
  }
  EXPECT_THROW(nonlinearity("cubic"), PreconditionError);
}

TEST(Newton, ZeroDataGivesZero) {
  const TriMesh m = unit_square_mesh(6);
  const NewtonResult r = newton_semilinear(m, ElementCoeffs::identity(m), Vector(m.num_vertices(), 0.0),
                                           zero_dirichlet(m), nonlinearity("monotone-sine"));
  EXPECT_EQ(r.iterations, 0u);
  for (double v : r.u.values) EXPECT_EQ(v, 0.0);
}

TEST(Newton, ImposesDirichletData) {
  const TriMesh m = unit_square_mesh(6);
  P1Field g = P1Field::zeros(m);
  for (int b : m.boundary_vertices()) g[static_cast<std::size_t>(b)] = 1.0 + m.vertices()[b].x;
  const NewtonResult r =
      newton_semilinear(m, ElementCoeffs::identity(m), Vector(m.num_vertices(), 1.0), g, nonlinearity("tanh"));
  for (int b : m.boundary_vertices()) EXPECT_EQ(r.u[static_cast<std::size_t>(b)], g[static_cast<std::size_t>(b)]);
}

TEST(Newton, ManufacturedSolutionConvergesAtSecondOrder) {
  const Nonlinearity& rho = nonlinearity("monotone-sine");
  const double e8 = manufactured_error(8, rho);
  const double e16 = manufactured_error(16, rho);
  const double e32 = manufactured_error(32, rho);
  EXPECT_GE(std::log2(e8 / e16), 1.8);
  EXPECT_GE(std::log2(e16 / e32), 1.8);
}

TEST(Newton, MonotoneSineConvergesQuadratically) {
  const TriMesh m = unit_square_mesh(32);
  const NewtonResult r = newton_semilinear(m, ElementCoeffs::identity(m), Vector(m.num_vertices(), 50.0),
                                           zero_dirichlet(m), nonlinearity("monotone-sine"), {25, 1e-12, 1e-13});
  EXPECT_LE(r.iterations, 8u);
  const auto& h = r.residual_history;
  for (std::size_t k = 1; k + 1 < h.size(); ++k) {
    if (h[k] < 1e-2 * h[0] && h[k + 1] > 1e-11 * h[0]) {
      EXPECT_LE(h[k + 1], 10.0 * h[k] * h[k] / h[0] + 1e-14);
    }
  }
}

TEST(Newton, IterationCapThrows) {
  const TriMesh m = unit_square_mesh(8);
  EXPECT_THROW(newton_semilinear(m, ElementCoeffs::identity(m), Vector(m.num_vertices(), 50.0), zero_dirichlet(m),
                                 nonlinearity("monotone-sine"), {1, 1e-14, 1e-13}),
               ConvergenceError);
}

TEST(Pullback, IdentityAtZero) {
  const TriMesh m = unit_square_mesh(4);
  const auto x = fields::make_vector({"bump-x", {1.0}});
  const auto f = fields::make_scalar({"exp-x", {2.0}});
  const auto ur = fields::make_scalar({"poly-xy", {1.0}});
  const Pullback pb = pullback_coeffs(m, x, 0.0, f, ur);
  for (std::size_t e = 0; e < m.num_triangles(); ++e) {
    EXPECT_EQ(pb.coeffs.volume[e], 1.0);
    EXPECT_EQ(pb.coeffs.diffusion[e].xx, 1.0);
    EXPECT_EQ(pb.coeffs.diffusion[e].xy, 0.0);
  }
  const Vector fi = interpolate(m, f);
  for (std::size_t i = 0; i < m.num_vertices(); ++i) EXPECT_EQ(pb.f_t[i], fi[i]);
}

TEST(Pullback, StretchClosedForm) {
  const TriMesh m = unit_square_mesh(4);
  const double s = 0.5, t = 0.2;
  const Pullback pb = pullback_coeffs(m, fields::make_vector({"stretch-x", {s}}), t,
                                      fields::make_scalar({"constant", {3.0}}),
                                      fields::make_scalar({"linear", {0.0, 1.0, 0.0}}));
  const double j = 1 + t * s;
  for (std::size_t e = 0; e < m.num_triangles(); ++e) {
    EXPECT_NEAR(pb.coeffs.volume[e], j, 1e-15);
    EXPECT_NEAR(pb.coeffs.diffusion[e].xx, 1 / j, 1e-15);
    EXPECT_NEAR(pb.coeffs.diffusion[e].yy, j, 1e-15);
  }
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    EXPECT_NEAR(pb.f_t[i], 3 * j, 1e-14);
    EXPECT_NEAR(pb.ur_t[i], j * m.vertices()[i].x, 1e-15);
  }
}

TEST(Pullback, CoefficientsVaryLinearlyForSmallT) {
  const TriMesh m = unit_square_mesh(8);
  const auto x = fields::make_vector({"bump-y", {1.0}});
  const auto c = fields::make_scalar({"constant", {1.0}});
  double prev = 1e300;
  for (double t : {0.1, 0.05, 0.025}) {
    const Pullback pb = pullback_coeffs(m, x, t, c, c);
    double dev = 0.0;
    for (std::size_t e = 0; e < m.num_triangles(); ++e) {
      const Sym2& a = pb.coeffs.diffusion[e];
      dev = std::max({dev, std::abs(a.xx - 1), std::abs(a.xy), std::abs(a.yy - 1)});
    }
    EXPECT_LT(dev, 0.6 * prev);
    EXPECT_LE(dev, 2.5 * t);
    prev = dev;
  }
}

TEST(Pullback, RejectsLargeT) {
  const TriMesh m = unit_square_mesh(4);
  const auto c = fields::make_scalar({"constant", {1.0}});
  EXPECT_THROW(pullback_coeffs(m, fields::make_vector({"stretch-x", {2.0}}), 0.5, c, c), PreconditionError);
  EXPECT_NEAR(lipschitz_estimate(m, fields::make_vector({"stretch-x", {2.0}})), 2.0, 1e-15);
}

TEST(TransformMesh, StretchScalesArea) {
  const TriMesh m = unit_square_mesh(4);
  const TriMesh moved = transform_mesh(m, fields::make_vector({"stretch-x", {1.0}}), 0.5);
  EXPECT_NEAR(moved.total_area(), 1.5, 1e-14);
  EXPECT_NEAR(moved.vertices()[4].x, 1.5, 1e-15);
  const TriMesh same = transform_mesh(m, fields::make_vector({"bump-x", {1.0}}), 0.0);
  for (std::size_t i = 0; i < m.num_vertices(); ++i) EXPECT_EQ(same.vertices()[i].x, m.vertices()[i].x);
  EXPECT_THROW(transform_mesh(m, fields::make_vector({"stretch-x", {-2.0}}), 0.5), PreconditionError);
}

TEST(ChangeOfVariables, PullbackMatchesTransformedMesh) {
  const TriMesh m = unit_square_mesh(32);
  const auto x = fields::make_vector({"bump-x", {1.0}});
  const auto f = fields::make_scalar({"exp-x", {1.0}});
  const Nonlinearity& rho = nonlinearity("monotone-sine");
  const double t = 0.1;

  const Pullback pb = pullback_coeffs(m, x, t, f, f);
  const NewtonResult ref = newton_semilinear(m, pb.coeffs, pb.f_t, zero_dirichlet(m), rho);

  const TriMesh moved = transform_mesh(m, x, t);
  const NewtonResult direct = newton_semilinear(moved, ElementCoeffs::identity(moved), interpolate(moved, f),
                                                zero_dirichlet(moved), rho);

  const ElementCoeffs id = ElementCoeffs::identity(moved);
  const SparseMatrix k = assemble_stiffness(moved, id);
  const double e_direct = dot(direct.u.values, k.multiply(direct.u.values));
  const double e_pull = dot(ref.u.values, assemble_stiffness(m, pb.coeffs).multiply(ref.u.values));
  EXPECT_NEAR(e_pull / e_direct, 1.0, 5e-3);
  double du = 0.0, umax = 0.0;
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    du = std::max(du, std::abs(ref.u[i] - direct.u[i]));
    umax = std::max(umax, std::abs(direct.u[i]));
  }
  EXPECT_LE(du, 5e-3 * umax);
}

TEST(MeshIo, RoundTrip) {
  const TriMesh m = transform_mesh(unit_square_mesh(3), fields::make_vector({"bump-y", {0.7}}), 0.3);
  std::stringstream ss;
  write_mesh(ss, m);
  const TriMesh back = read_mesh(ss);
  ASSERT_EQ(back.num_vertices(), m.num_vertices());
  ASSERT_EQ(back.num_triangles(), m.num_triangles());
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    EXPECT_EQ(back.vertices()[i].x, m.vertices()[i].x);
    EXPECT_EQ(back.vertices()[i].y, m.vertices()[i].y);
  }
  EXPECT_EQ(back.triangles(), m.triangles());
  std::stringstream bad("vertices 3 triangles 1\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(bad), PreconditionError);
  std::stringstream header("verts 3");
  EXPECT_THROW(read_mesh(header), PreconditionError);
}

TEST(MeshIo, FieldCsv) {
  const TriMesh m = unit_square_mesh(2);
  std::ostringstream os;
  write_field_csv(os, m, P1Field(Vector(9, 0.5)));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("vertex_id,x,y,value\n0,0,0,0.5\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 10);
  EXPECT_THROW(write_field_csv(os, m, P1Field(Vector(3, 0.0))), PreconditionError);
}
