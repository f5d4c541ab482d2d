#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relu_forge/network.hpp"

namespace relu_forge {

// Sampling plan for empirical certification.  All draws come from a single
// mt19937_64 stream seeded below, so results are reproducible and independent
// of the worker thread count (threads only split the evaluation of an already
// generated point set, and the max-reduction is order-insensitive).
struct SampleConfig {
    std::int64_t samples = 100000;   // interior points for sup-error checks
    std::int64_t pairs = 10000;      // point pairs for Lipschitz estimation
    double local_scale = 1e-3;       // relative radius of the local pair cloud
    std::uint64_t seed = 42;
    int corner_dim_cap = 16;         // include all 2^d corners up to this dim
};

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Largest lp deviation ||net(x) - ref(x)||_p over uniform samples in Q, the
// center, and (for dim <= corner_dim_cap) all corners.  A lower bound of the
// true sup; `ref` must be safe to call concurrently.
double sup_error(const Network& net, const VectorFn& ref, const Hypercube& Q,
                 double p, const SampleConfig& cfg = {});

// Empirical Lipschitz constant in the lp norm: max difference quotient over
// cfg.pairs random pairs, half spread across Q and half tightly clustered
// (separation ~ local_scale * side) to probe local slopes.  A lower bound of
// the true constant.
double lipschitz_est(const Network& net, const Hypercube& Q, double p,
                     const SampleConfig& cfg = {});

// Factors relating lp and lq certificates on R^m -> R^n:
// first = max(m^{1/p-1/q}, n^{1/q-1/p}) rescales a Lipschitz constant,
// second = max(n^{1/q-1/p}, 1) rescales an accuracy, with 1/inf = 0.
std::pair<double, double> norm_factors(int m, int n, double p, double q);

// Least-squares power-law fit y ~ C x^e through log-log space.
struct PowerFit {
    double exponent = 0.0;
    double log_prefactor = 0.0;   // natural log of C
    double max_residual = 0.0;    // largest |log y - fitted| over the points
};

// Requires at least three points with positive coordinates.
PowerFit scaling_fit(const std::vector<std::pair<double, double>>& points);

// Empirical certificate for one network on one domain.
struct CertReport {
    double sup_error_estimate = 0.0;
    double lipschitz_l1 = 0.0;
    double lipschitz_l2 = 0.0;
    double lipschitz_linf = 0.0;
    std::int64_t param_count = 0;
    std::int64_t sample_count = 0;   // points actually used for the sup check
    Hypercube domain;
    double norm_p = 2.0;             // norm of the sup-error estimate
    std::uint64_t seed = 42;
};

// Runs sup_error against `ref` in the given norm plus lipschitz_est for
// p in {1, 2, inf} under one config.
CertReport certify(const Network& net, const VectorFn& ref, const Hypercube& Q,
                   double p, const SampleConfig& cfg = {});

nlohmann::json report_to_json(const CertReport& report);

// One cell of a scaling study plus the fitted growth exponents.
struct ScalingRow {
    int d = 0;
    double eps = 0.0;
    std::int64_t params = 0;
    double sup_error = 0.0;
    bool certified = false;
    std::string note;   // failure diagnostic when a cell could not build
};

struct ScalingReport {
    std::string family;
    std::vector<ScalingRow> rows;
    // Labelled fits, e.g. "params_vs_d@eps=0.1" or "params_vs_inv_eps@d=4";
    // only axes with at least three usable points are fitted.
    std::vector<std::pair<std::string, PowerFit>> fits;
    bool all_certified = true;
};

nlohmann::json scaling_report_to_json(const ScalingReport& report);

// CSV with header d,eps,params,sup_error, '.' decimals, LF line endings.
void write_scaling_csv(std::ostream& out, const ScalingReport& report);

// Shortest decimal representation that round-trips to the same double; used
// for all numeric text output so artifacts are byte-stable.
std::string format_double(double v);

// Worker count used for certification sweeps: RELU_FORGE_THREADS if set,
// otherwise the hardware concurrency.
int certifier_thread_count();

} // namespace relu_forge
