#pragma once

// Closed registry of named analytic fields used by shape scenarios.
//
// scalar: constant(c), poly-xy(a) = a·x·y, linear(c0,cx,cy), exp-x(a) = a·eˣ,
//         sin-sin(a,k) = a·sin(kπx)·sin(kπy)
// vector: zero, constant(cx,cy), stretch-x(s) = (s·x, 0),
//         bump-x(s) = (s·x(1−x)y(1−y), 0), bump-y(s) = (0, s·x(1−x)y(1−y))

#include <string>
#include <vector>

#include "aadj/fem2d.hpp"

namespace aadj::fields {

struct FieldSpec {
  std::string name;
  std::vector<double> params;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

/// Throws PreconditionError for unknown names or a wrong parameter count.
fem::ScalarField make_scalar(const FieldSpec& spec);
fem::VectorField make_vector(const FieldSpec& spec);

std::vector<std::string> scalar_names();
std::vector<std::string> vector_names();

}  // namespace aadj::fields
