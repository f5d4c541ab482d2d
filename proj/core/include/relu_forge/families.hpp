#pragma once

#include <string>
#include <vector>

#include "relu_forge/pipeline.hpp"

namespace relu_forge {

// Constructs one of the built-in staged families at scale d (d >= 2).  The
// scale is the family's growth parameter, not always the input dimension:
// tower, nested_log, powermax and gauss_prod read d inputs, prodmax_tree d^2
// and cos_max 3d.  The returned spec has already passed full validation.
//
//   tower         x1^(x2^(...^xd)) on [1/e,1]^d                  (theorem1, l1)
//   nested_log    x1 + ln(x2 + ln(... + ln(xd))) on [1,2]^d      (theorem1, l1)
//   prodmax_tree  alternating product/max groups of size d over
//                 [-1/8,1/8]^(d^2)                               (theorem1, l1)
//   powermax      max{x1^d, (x1 x2)^(d+1), ..., (x1...xd)^(2d-1)}
//                 on [-1,1]^d                                    (theorem2, linf)
//   gauss_prod    prod_i exp(-i xi^2) on [-d,d]^d                (theorem2, linf)
//   cos_max       max_l cos(l a + l^2 b + l^3 c) over d triples
//                 on [-d,d]^(3d)                                 (theorem2, linf)
FunctionSpec builtin_family(const std::string& name, int d);

struct FamilyInfo {
    std::string name;
    std::string formula;
    std::string mode;
    std::string norm;
    std::string scale_note;
};

const std::vector<FamilyInfo>& family_catalog();

// Builds and certifies `family` over d in [d_lo, d_hi] x eps_set.  Failed
// cells are recorded with a diagnostic and the run continues.  Growth
// exponents are fitted per eps (params vs d) and per d (params vs 1/eps)
// wherever at least three cells are available.
ScalingReport run_scaling(const std::string& family, int d_lo, int d_hi,
                          const std::vector<double>& eps_set,
                          const SampleConfig& cfg = pipeline_sample_defaults());

} // namespace relu_forge
