#include "relu_forge/families.hpp"

#include <cmath>
#include <map>

#include "relu_forge/errors.hpp"
#include "relu_forge/expression.hpp"

namespace relu_forge {

namespace {

nlohmann::json domain_json(double a, double b, int dim) {
    return {{"a", a}, {"b", b}, {"dim", dim}};
}

nlohmann::json block_json(int dim, const std::string& expr, double lipschitz) {
    return {{"dim", dim}, {"expr", expr}, {"lipschitz", lipschitz}};
}

nlohmann::json pass_block() { return block_json(1, "x1", 1.0); }

// x1^(x2^(...^xd)), peeled from the innermost power outward: each stage
// rewrites its last two coordinates (x, t) as x^t and forwards the rest.
nlohmann::json tower_spec(int d) {
    const double lo = std::exp(-1.0);
    nlohmann::json stages = nlohmann::json::array();
    for (int m = d; m >= 2; --m) {
        nlohmann::json blocks = nlohmann::json::array();
        for (int i = 0; i < m - 2; ++i) blocks.push_back(pass_block());
        blocks.push_back(block_json(2, "pow(x1,x2)", 1.0));
        stages.push_back({{"kind", "lipschitz_parallel"},
                          {"domain", domain_json(lo, 1.0, m)},
                          {"blocks", blocks}});
    }
    return {{"mode", "theorem1"}, {"norm", "1"}, {"stages", stages}};
}

// x1 + ln(x2 + ln(... + ln(xd))); intermediate values stay in [1, a_m] where
// a_d = 2 and a_m = a_{m+1} + ln(a_{m+1}).
nlohmann::json nested_log_spec(int d) {
    std::vector<double> upper(static_cast<std::size_t>(d + 1), 2.0);
    for (int m = d - 1; m >= 1; --m) {
        upper[static_cast<std::size_t>(m)] = upper[static_cast<std::size_t>(m + 1)] +
                                             std::log(upper[static_cast<std::size_t>(m + 1)]);
    }
    nlohmann::json stages = nlohmann::json::array();
    for (int m = d; m >= 2; --m) {
        nlohmann::json blocks = nlohmann::json::array();
        for (int i = 0; i < m - 2; ++i) blocks.push_back(pass_block());
        blocks.push_back(block_json(2, "x1 + ln(x2)", 1.0));
        stages.push_back({{"kind", "lipschitz_parallel"},
                          {"domain", domain_json(1.0, upper[static_cast<std::size_t>(m)], m)},
                          {"blocks", blocks}});
    }
    return {{"mode", "theorem1"}, {"norm", "1"}, {"stages", stages}};
}

// (x1...xd) * max{ x_{d+1..2d}, (x_{2d+1..3d}) * max{ ... } } on
// [-1/8,1/8]^(d^2): groups of size d, odd groups multiplied in, even groups
// maxed in, folded from the innermost group outward.
nlohmann::json prodmax_tree_spec(int d) {
    const double a = 0.125;
    nlohmann::json stages = nlohmann::json::array();
    for (int k = d; k >= 1; --k) {
        const bool has_tail = k < d;
        const int dim = k * d + (has_tail ? 1 : 0);
        nlohmann::json partition = nlohmann::json::array();
        for (int i = 0; i < (k - 1) * d; ++i) partition.push_back(1);
        partition.push_back(d + (has_tail ? 1 : 0));
        stages.push_back({{"kind", k % 2 == 1 ? "product_parallel" : "max_parallel"},
                          {"domain", domain_json(-a, a, dim)},
                          {"partition", partition}});
    }
    return {{"mode", "theorem1"}, {"norm", "1"}, {"stages", stages}};
}

// max{x1^d, (x1 x2)^(d+1), ..., (x1...xd)^(2d-1)}: running products, then
// slotwise powers with exponents d..2d-1, then one maximum.
nlohmann::json powermax_spec(int d) {
    nlohmann::json stages = nlohmann::json::array();
    stages.push_back({{"kind", "ext_prod"}, {"domain", domain_json(-1.0, 1.0, d)}});
    nlohmann::json blocks = nlohmann::json::array();
    for (int i = 1; i <= d; ++i) {
        const int k = d + i - 1;
        blocks.push_back(
            block_json(1, "pow(x1," + std::to_string(k) + ")", static_cast<double>(k)));
    }
    stages.push_back({{"kind", "lipschitz_parallel"},
                      {"domain", domain_json(-1.0, 1.0, d)},
                      {"blocks", blocks}});
    stages.push_back({{"kind", "max_parallel"},
                      {"domain", domain_json(-1.0, 1.0, d)},
                      {"partition", nlohmann::json::array({d})}});
    return {{"mode", "theorem2"}, {"norm", "inf"}, {"stages", stages}};
}

// prod_i exp(-i xi^2) on [-d,d]^d: squeezing blocks into [0,1], then one
// d-ary product.  Declared constants are the interval derivative bounds the
// validator itself computes, so they are accepted verbatim.
nlohmann::json gauss_prod_spec(int d) {
    Hypercube Q{-static_cast<double>(d), static_cast<double>(d), 1};
    nlohmann::json blocks = nlohmann::json::array();
    for (int i = 1; i <= d; ++i) {
        const std::string expr = "exp(-" + std::to_string(i) + "*pow(x1,2))";
        const double L =
            lipschitz_upper_bound(parse_expression(expr, 1), 1, Q, 1.0);
        blocks.push_back(block_json(1, expr, L));
    }
    nlohmann::json stages = nlohmann::json::array();
    stages.push_back({{"kind", "lipschitz_parallel"},
                      {"domain", domain_json(Q.a, Q.b, d)},
                      {"blocks", blocks}});
    stages.push_back({{"kind", "product_parallel"},
                      {"domain", domain_json(0.0, 1.0, d)},
                      {"partition", nlohmann::json::array({d})}});
    return {{"mode", "theorem2"}, {"norm", "inf"}, {"stages", stages}};
}

// max_l cos(l x_{3l-2} + l^2 x_{3l-1} + l^3 x_{3l}) on [-d,d]^(3d).
nlohmann::json cos_max_spec(int d) {
    nlohmann::json blocks = nlohmann::json::array();
    for (int l = 1; l <= d; ++l) {
        const long l2 = static_cast<long>(l) * l;
        const long l3 = l2 * l;
        const std::string expr = "cos(" + std::to_string(l) + "*x1 + " + std::to_string(l2) +
                                 "*x2 + " + std::to_string(l3) + "*x3)";
        blocks.push_back(block_json(3, expr, static_cast<double>(l + l2 + l3)));
    }
    nlohmann::json stages = nlohmann::json::array();
    stages.push_back({{"kind", "lipschitz_parallel"},
                      {"domain", domain_json(-static_cast<double>(d), static_cast<double>(d), 3 * d)},
                      {"blocks", blocks}});
    stages.push_back({{"kind", "max_parallel"},
                      {"domain", domain_json(-1.0, 1.0, d)},
                      {"partition", nlohmann::json::array({d})}});
    return {{"mode", "theorem2"}, {"norm", "inf"}, {"stages", stages}};
}

} // namespace

FunctionSpec builtin_family(const std::string& name, int d) {
    if (d < 2) throw ValidationError("builtin_family: scale must be at least 2");
    nlohmann::json doc;
    if (name == "tower") doc = tower_spec(d);
    else if (name == "nested_log") doc = nested_log_spec(d);
    else if (name == "prodmax_tree") doc = prodmax_tree_spec(d);
    else if (name == "powermax") doc = powermax_spec(d);
    else if (name == "gauss_prod") doc = gauss_prod_spec(d);
    else if (name == "cos_max") doc = cos_max_spec(d);
    else {
        throw ValidationError("builtin_family: unknown family \"" + name +
                              "\" (known: tower, nested_log, prodmax_tree, powermax, "
                              "gauss_prod, cos_max)");
    }
    return parse_spec(doc);
}

const std::vector<FamilyInfo>& family_catalog() {
    static const std::vector<FamilyInfo> table = {
        {"tower", "x1^(x2^(...^xd)) on [1/e,1]^d", "theorem1", "1", "d inputs, d-1 stages"},
        {"nested_log", "x1 + ln(x2 + ln(... + ln(xd))) on [1,2]^d", "theorem1", "1",
         "d inputs, d-1 stages"},
        {"prodmax_tree",
         "(x1..xd)*max{x_{d+1..2d}, (x_{2d+1..3d})*max{...}} on [-1/8,1/8]^(d^2)", "theorem1",
         "1", "d^2 inputs, d stages"},
        {"powermax", "max{x1^d, (x1 x2)^(d+1), ..., (x1...xd)^(2d-1)} on [-1,1]^d", "theorem2",
         "inf", "d inputs, 3 stages"},
        {"gauss_prod", "prod_i exp(-i*xi^2) on [-d,d]^d", "theorem2", "inf",
         "d inputs, 2 stages"},
        {"cos_max", "max_l cos(l*x_{3l-2} + l^2*x_{3l-1} + l^3*x_{3l}) on [-d,d]^(3d)",
         "theorem2", "inf", "3d inputs, 2 stages"},
    };
    return table;
}

ScalingReport run_scaling(const std::string& family, int d_lo, int d_hi,
                          const std::vector<double>& eps_set, const SampleConfig& cfg) {
    if (d_lo < 2 || d_hi < d_lo) {
        throw ValidationError("run_scaling: need 2 <= d_lo <= d_hi");
    }
    if (eps_set.empty()) throw ValidationError("run_scaling: empty accuracy set");

    ScalingReport report;
    report.family = family;
    for (int d = d_lo; d <= d_hi; ++d) {
        for (double eps : eps_set) {
            ScalingRow row;
            row.d = d;
            row.eps = eps;
            try {
                const FunctionSpec spec = builtin_family(family, d);
                BuildResult built = build(spec, eps, cfg);
                row.params = built.report.param_count;
                row.sup_error = built.report.sup_error_estimate;
                row.certified = built.certified;
            } catch (const std::exception& e) {
                row.certified = false;
                row.note = e.what();
            }
            if (!row.certified) report.all_certified = false;
            report.rows.push_back(std::move(row));
        }
    }

    std::map<double, std::vector<std::pair<double, double>>> by_eps;
    std::map<int, std::vector<std::pair<double, double>>> by_d;
    for (const auto& row : report.rows) {
        if (row.params <= 0) continue;
        by_eps[row.eps].emplace_back(static_cast<double>(row.d),
                                     static_cast<double>(row.params));
        by_d[row.d].emplace_back(1.0 / row.eps, static_cast<double>(row.params));
    }
    for (const auto& [eps, pts] : by_eps) {
        if (pts.size() >= 3) {
            report.fits.emplace_back("params_vs_d@eps=" + format_double(eps), scaling_fit(pts));
        }
    }
    for (const auto& [d, pts] : by_d) {
        if (pts.size() >= 3) {
            report.fits.emplace_back("params_vs_inv_eps@d=" + std::to_string(d),
                                     scaling_fit(pts));
        }
    }
    return report;
}

} // namespace relu_forge
