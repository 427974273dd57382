#pragma once

#include <functional>
#include <string>

#include "ergolab/flow.hpp"
#include "ergolab/subadditive.hpp"

namespace ergolab {

/// Named flows for the CLI and tests:
///   sink      x' = -x (any dimension)
///   rotation  planar (x', y') = (-y, x)
///   bowen     the eye field (see bowen.hpp), eps-configurable
/// Anything else is treated as a path to a polynomial-field JSON document:
/// {"dimension": d, "components": [[{"coef": c, "powers": [p...]}...]...]}.
FlowSpec make_flow(const std::string& spec, int dim = 1, double eps = 0.1);

struct NamedObservable {
    std::string name;
    Observable fn;
};

/// Named planar/vector observables:
///   x              first coordinate
///   x2             first coordinate squared
///   norm2          squared euclidean norm
///   cos            x / |p| (cosine of the planar angle)
///   eye-symmetric  (x^2-1)^2 + y^2  (vanishes at both eye saddles)
///   const:<v>      constant
///   file:<path>    polynomial {"terms": [{"coef": c, "powers": [p...]}...]}
NamedObservable make_observable(const std::string& spec);

/// Named scalar sequences for the fekete/derriennic commands:
///   n+log(n+1) | sqrt(n) | n+sqrt(n) | linear:<c> | affine:<a>,<b>
ScalarSequence make_scalar_sequence(const std::string& spec, int horizon);

} // namespace ergolab
