#pragma once

#include <nlohmann/json.hpp>

#include "mbp/kernels.hpp"

namespace mbp {

using json = nlohmann::ordered_json;

json complex_to_json(cd z);
cd complex_from_json(const json& j);

/// Matrix as row-major list of [re, im] pairs.
json mat_to_json(const Mat& m);
Mat mat_from_json(const json& j, int rows, int cols);

/// {"p": int, "coeffs": [[[re,im], ...], ...]} with index = degree.
json matpoly_to_json(const MatPoly& P);
MatPoly matpoly_from_json(const json& j);

/// {"variant": "hankel"|"discrete", "p": ..., ...}
json kernel_to_json(const KernelRep& k);
KernelRep kernel_from_json(const json& j);

json vec_functional_to_json(const VecFunctional& f);
VecFunctional vec_functional_from_json(const json& j, int p);
json uvarov_term_to_json(const UvarovTerm& t);
UvarovTerm uvarov_term_from_json(const json& j, int p);

}  // namespace mbp
