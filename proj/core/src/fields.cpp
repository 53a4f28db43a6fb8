#include "aadj/fields.hpp"

#include <cmath>
#include <numbers>

#include "aadj/error.hpp"

namespace aadj::fields {

using fem::Mat2;
using fem::Point2;
using fem::ScalarField;
using fem::VectorField;

namespace {

void require_params(const FieldSpec& spec, std::size_t n) {
  if (spec.params.size() != n) {
    throw PreconditionError("field '" + spec.name + "' expects " + std::to_string(n) + " parameter(s), got " +
                            std::to_string(spec.params.size()));
  }
}

}  // namespace

ScalarField make_scalar(const FieldSpec& spec) {
  const auto& p = spec.params;
  if (spec.name == "constant") {
    require_params(spec, 1);
    const double c = p[0];
    return {spec.name, [c](Point2) { return c; }, [](Point2) { return Point2{}; }};
  }
  if (spec.name == "poly-xy") {
    require_params(spec, 1);
    const double a = p[0];
    return {spec.name, [a](Point2 x) { return a * x.x * x.y; }, [a](Point2 x) { return Point2{a * x.y, a * x.x}; }};
  }
  if (spec.name == "linear") {
    require_params(spec, 3);
    const double c0 = p[0], cx = p[1], cy = p[2];
    return {spec.name, [=](Point2 x) { return c0 + cx * x.x + cy * x.y; }, [=](Point2) { return Point2{cx, cy}; }};
  }
  if (spec.name == "exp-x") {
    require_params(spec, 1);
    const double a = p[0];
    return {spec.name, [a](Point2 x) { return a * std::exp(x.x); },
            [a](Point2 x) { return Point2{a * std::exp(x.x), 0.0}; }};
  }
  if (spec.name == "sin-sin") {
    require_params(spec, 2);
    const double a = p[0], w = p[1] * std::numbers::pi;
    return {spec.name, [=](Point2 x) { return a * std::sin(w * x.x) * std::sin(w * x.y); },
            [=](Point2 x) {
              return Point2{a * w * std::cos(w * x.x) * std::sin(w * x.y), a * w * std::sin(w * x.x) * std::cos(w * x.y)};
            }};
  }
  throw PreconditionError("unknown scalar field '" + spec.name + "'");
}

VectorField make_vector(const FieldSpec& spec) {
  const auto& p = spec.params;
  if (spec.name == "zero") {
    require_params(spec, 0);
    return {spec.name, [](Point2) { return Point2{}; }, [](Point2) { return Mat2{}; }};
  }
  if (spec.name == "constant") {
    require_params(spec, 2);
    const double cx = p[0], cy = p[1];
    return {spec.name, [=](Point2) { return Point2{cx, cy}; }, [](Point2) { return Mat2{}; }};
  }
  if (spec.name == "stretch-x") {
    require_params(spec, 1);
    const double s = p[0];
    return {spec.name, [s](Point2 x) { return Point2{s * x.x, 0.0}; }, [s](Point2) { return Mat2{s, 0.0, 0.0, 0.0}; }};
  }
  if (spec.name == "bump-x" || spec.name == "bump-y") {
    require_params(spec, 1);
    const double s = p[0];
    const bool along_x = spec.name == "bump-x";
    auto bump = [s](Point2 x) { return s * x.x * (1 - x.x) * x.y * (1 - x.y); };
    auto grad = [s](Point2 x) {
      return Point2{s * (1 - 2 * x.x) * x.y * (1 - x.y), s * x.x * (1 - x.x) * (1 - 2 * x.y)};
    };
    return {spec.name,
            [=](Point2 x) { return along_x ? Point2{bump(x), 0.0} : Point2{0.0, bump(x)}; },
            [=](Point2 x) {
              const Point2 g = grad(x);
              return along_x ? Mat2{g.x, g.y, 0.0, 0.0} : Mat2{0.0, 0.0, g.x, g.y};
            }};
  }
  throw PreconditionError("unknown vector field '" + spec.name + "'");
}

std::vector<std::string> scalar_names() { return {"constant", "poly-xy", "linear", "exp-x", "sin-sin"}; }

std::vector<std::string> vector_names() { return {"zero", "constant", "stretch-x", "bump-x", "bump-y"}; }

}  // namespace aadj::fields
