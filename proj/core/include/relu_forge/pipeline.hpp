#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relu_forge/certifier.hpp"
#include "relu_forge/constructors.hpp"
#include "relu_forge/network.hpp"

namespace relu_forge {

enum class StageKind {
    lipschitz_parallel,   // disjoint expression blocks, one scalar output each
    max_parallel,         // partition-wise maxima
    product_parallel,     // partition-wise products
    ext_max,              // running (cumulative) maximum, d outputs
    ext_prod,             // running (cumulative) product, d outputs
};

enum class TheoremMode {
    theorem1,   // every stage 1-Lipschitz, stage count may grow; products on [-1/8,1/8]
    theorem2,   // fixed stage count, any finite Lipschitz; products on [-1,1]
};

struct StageSpec {
    StageKind kind = StageKind::lipschitz_parallel;
    Hypercube domain;                        // Q_i, the hypercube this stage is fed from
    std::vector<LipschitzBlockSpec> blocks;  // lipschitz_parallel only
    std::vector<int> partition;              // max_parallel / product_parallel only

    int input_dim() const { return domain.dim; }
    int output_dim() const;
};

struct FunctionSpec {
    TheoremMode mode = TheoremMode::theorem1;
    double norm_p = 1.0;   // global lp norm; inf is allowed
    std::vector<StageSpec> stages;

    int input_dim() const { return stages.front().domain.dim; }
    int output_dim() const { return stages.back().output_dim(); }
};

// Parses and fully validates a staged function document, in order: structure
// and expression syntax, expression evaluability on the stage domain, mode
// admissibility, the dimension chain, product domain size, declared Lipschitz
// constants against interval derivative bounds, and range containment
// g_i(Q_i) within Q_{i+1}.  The first violated condition is named in the
// thrown ParseError/ValidationError.
FunctionSpec parse_spec(const nlohmann::json& doc);
FunctionSpec parse_spec_text(const std::string& text);

// Declared Lipschitz constant of one stage in the spec's norm, as used for
// budget telescoping (an upper bound of the stage's true constant).
double stage_lipschitz(const StageSpec& stage, TheoremMode mode, double p);

// True when the stage compiles to an exactly representing network (maxima,
// affine blocks, trivial products) and therefore consumes no error budget.
bool stage_exact(const StageSpec& stage);

// Exact staged evaluation in double precision; the oracle all certification
// measures against.  Rejects points outside the first stage domain.
Eigen::VectorXd reference_eval(const FunctionSpec& spec, const Eigen::VectorXd& x);

struct StageBudget {
    double eps = 0.0;        // accuracy allocated to this stage
    double lipschitz = 1.0;  // declared constant used in the telescoping
    bool exact = false;
};

struct BuildResult {
    Network net;
    std::vector<StageBudget> budgets;
    CertReport report;
    double eps_target = 0.0;
    bool certified = false;
};

// Sampling defaults for end-to-end pipeline certification; far fewer points
// than the constructor-level defaults because pipeline networks are orders of
// magnitude larger to evaluate.
SampleConfig pipeline_sample_defaults();

// Compiles every stage at its budget eps_i = eps / (n_inexact * prod_{j>i} L_j)
// (exact stages get 0), clips each intermediate output into the next stage's
// domain and the final output into its interval range, composes, and
// certifies the result against reference_eval.  Throws on build failure;
// certification failure is reported via `certified`, not thrown.
BuildResult build(const FunctionSpec& spec, double eps,
                  const SampleConfig& cfg = pipeline_sample_defaults());

nlohmann::json build_report_json(const BuildResult& result);

} // namespace relu_forge
