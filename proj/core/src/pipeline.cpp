#include "relu_forge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "relu_forge/calculus.hpp"
#include "relu_forge/errors.hpp"
#include "relu_forge/expression.hpp"
#include "relu_forge/interval.hpp"

namespace relu_forge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string stage_tag(std::size_t i) { return "stage " + std::to_string(i + 1); }

const nlohmann::json& need(const nlohmann::json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field \"" + key + "\"");
    return *it;
}

double need_number(const nlohmann::json& j, const char* key, const std::string& where) {
    const nlohmann::json& v = need(j, key, where);
    if (!v.is_number()) throw ParseError(where + ": field \"" + key + "\" must be a number");
    return v.get<double>();
}

int need_int(const nlohmann::json& j, const char* key, const std::string& where) {
    const nlohmann::json& v = need(j, key, where);
    if (!v.is_number_integer()) {
        throw ParseError(where + ": field \"" + key + "\" must be an integer");
    }
    return v.get<int>();
}

std::string need_string(const nlohmann::json& j, const char* key, const std::string& where) {
    const nlohmann::json& v = need(j, key, where);
    if (!v.is_string()) throw ParseError(where + ": field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

StageKind parse_kind(const std::string& text, const std::string& where) {
    if (text == "lipschitz_parallel") return StageKind::lipschitz_parallel;
    if (text == "max_parallel") return StageKind::max_parallel;
    if (text == "product_parallel") return StageKind::product_parallel;
    if (text == "ext_max") return StageKind::ext_max;
    if (text == "ext_prod") return StageKind::ext_prod;
    throw ParseError(where + ": unknown stage kind \"" + text + "\"");
}

Hypercube parse_domain(const nlohmann::json& j, const std::string& where) {
    const nlohmann::json& dom = need(j, "domain", where);
    Hypercube Q;
    Q.a = need_number(dom, "a", where + " domain");
    Q.b = need_number(dom, "b", where + " domain");
    Q.dim = need_int(dom, "dim", where + " domain");
    if (!std::isfinite(Q.a) || !std::isfinite(Q.b) || !(Q.a < Q.b)) {
        throw ValidationError(where + ": domain must satisfy a < b with finite bounds");
    }
    if (Q.dim < 1) throw ValidationError(where + ": domain dimension must be positive");
    return Q;
}

std::vector<Interval> box_of(const Hypercube& Q, int dim) {
    return std::vector<Interval>(static_cast<std::size_t>(dim), Interval{Q.a, Q.b});
}

// Outward interval enclosure of each stage output over the stage domain.
std::vector<Interval> stage_image(const StageSpec& stage) {
    const Interval coord{stage.domain.a, stage.domain.b};
    std::vector<Interval> out;
    switch (stage.kind) {
        case StageKind::lipschitz_parallel:
            for (const auto& blk : stage.blocks) {
                out.push_back(eval_interval(blk.expr, box_of(stage.domain, blk.dim)));
            }
            break;
        case StageKind::max_parallel:
            out.assign(stage.partition.size(), coord);
            break;
        case StageKind::product_parallel:
            for (int part : stage.partition) {
                Interval v = coord;
                for (int i = 1; i < part; ++i) v = v * coord;
                out.push_back(v);
            }
            break;
        case StageKind::ext_max:
            out.assign(static_cast<std::size_t>(stage.domain.dim), coord);
            break;
        case StageKind::ext_prod: {
            Interval v = coord;
            out.push_back(v);
            for (int i = 1; i < stage.domain.dim; ++i) {
                v = v * coord;
                out.push_back(v);
            }
            break;
        }
    }
    return out;
}

void validate_structure(StageSpec& stage, const nlohmann::json& j, const std::string& where) {
    switch (stage.kind) {
        case StageKind::lipschitz_parallel: {
            const nlohmann::json& blocks = need(j, "blocks", where);
            if (!blocks.is_array() || blocks.empty()) {
                throw ParseError(where + ": \"blocks\" must be a nonempty array");
            }
            int covered = 0;
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                const std::string bwhere = where + " block " + std::to_string(b + 1);
                LipschitzBlockSpec blk;
                blk.dim = need_int(blocks[b], "dim", bwhere);
                if (blk.dim < 1) throw ValidationError(bwhere + ": dimension must be positive");
                const std::string text = need_string(blocks[b], "expr", bwhere);
                try {
                    blk.expr = parse_expression(text, blk.dim);
                } catch (const ParseError& e) {
                    throw ParseError(bwhere + ": " + e.what());
                }
                blk.lipschitz = need_number(blocks[b], "lipschitz", bwhere);
                if (!std::isfinite(blk.lipschitz) || blk.lipschitz < 0.0) {
                    throw ValidationError(bwhere + ": Lipschitz constant must be finite and >= 0");
                }
                covered += blk.dim;
                stage.blocks.push_back(std::move(blk));
            }
            if (covered != stage.domain.dim) {
                throw ValidationError(where + ": blocks cover " + std::to_string(covered) +
                                      " coordinates but the domain has " +
                                      std::to_string(stage.domain.dim));
            }
            break;
        }
        case StageKind::max_parallel:
        case StageKind::product_parallel: {
            const nlohmann::json& parts = need(j, "partition", where);
            if (!parts.is_array() || parts.empty()) {
                throw ParseError(where + ": \"partition\" must be a nonempty array");
            }
            int covered = 0;
            for (const auto& part : parts) {
                if (!part.is_number_integer() || part.get<int>() < 1) {
                    throw ValidationError(where + ": partition entries must be positive integers");
                }
                stage.partition.push_back(part.get<int>());
                covered += stage.partition.back();
            }
            if (covered != stage.domain.dim) {
                throw ValidationError(where + ": partition covers " + std::to_string(covered) +
                                      " coordinates but the domain has " +
                                      std::to_string(stage.domain.dim));
            }
            break;
        }
        case StageKind::ext_max:
        case StageKind::ext_prod:
            break;
    }
}

void validate_evaluability(const StageSpec& stage, const std::string& where) {
    if (stage.kind != StageKind::lipschitz_parallel) return;
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
        const auto& blk = stage.blocks[b];
        try {
            (void)eval_interval(blk.expr, box_of(stage.domain, blk.dim));
        } catch (const DomainError& e) {
            throw ValidationError(where + " block " + std::to_string(b + 1) + ": expression " +
                                  to_string(blk.expr) + " is not evaluable on [" +
                                  format_double(stage.domain.a) + ", " +
                                  format_double(stage.domain.b) + "]: " + e.what());
        }
    }
}

void validate_mode(const FunctionSpec& spec) {
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const auto& stage = spec.stages[i];
        const std::string where = stage_tag(i);
        if (spec.mode == TheoremMode::theorem1) {
            if (stage.kind == StageKind::ext_max || stage.kind == StageKind::ext_prod) {
                throw ValidationError(where +
                                      ": extended max/product stages are only admissible in "
                                      "theorem2 mode");
            }
            const double L = stage_lipschitz(stage, spec.mode, spec.norm_p);
            if (L > 1.0 + 1e-9) {
                throw ValidationError(where + ": declared Lipschitz constant " + format_double(L) +
                                      " exceeds 1; theorem1 mode requires every stage to be "
                                      "1-Lipschitz");
            }
        }
        if (stage.kind == StageKind::product_parallel || stage.kind == StageKind::ext_prod) {
            const double lim = spec.mode == TheoremMode::theorem1 ? 0.125 : 1.0;
            if (stage.domain.a < -lim - 1e-12 || stage.domain.b > lim + 1e-12) {
                throw ValidationError(
                    where + ": product stage domain [" + format_double(stage.domain.a) + ", " +
                    format_double(stage.domain.b) + "] must lie inside [-" +
                    (lim == 0.125 ? std::string("1/8") : std::string("1")) + ", " +
                    (lim == 0.125 ? std::string("1/8") : std::string("1")) + "]");
            }
        }
    }
}

void validate_chain(const FunctionSpec& spec) {
    for (std::size_t i = 0; i + 1 < spec.stages.size(); ++i) {
        const int out = spec.stages[i].output_dim();
        const int next = spec.stages[i + 1].domain.dim;
        if (out != next) {
            throw ValidationError(stage_tag(i) + ": output dimension " + std::to_string(out) +
                                  " does not match the stage " + std::to_string(i + 2) +
                                  " domain dimension " + std::to_string(next));
        }
    }
}

void validate_lipschitz_declarations(const FunctionSpec& spec) {
    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const auto& stage = spec.stages[i];
        if (stage.kind != StageKind::lipschitz_parallel) continue;
        for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
            const auto& blk = stage.blocks[b];
            Hypercube Q = stage.domain;
            Q.dim = blk.dim;
            const double bound = lipschitz_upper_bound(blk.expr, blk.dim, Q, spec.norm_p);
            if (blk.lipschitz < bound - 1e-2 * std::max(1.0, blk.lipschitz)) {
                throw ValidationError(stage_tag(i) + " block " + std::to_string(b + 1) +
                                      ": declared Lipschitz constant " +
                                      format_double(blk.lipschitz) +
                                      " is below the interval derivative bound " +
                                      format_double(bound));
            }
        }
    }
}

void validate_containment(const FunctionSpec& spec) {
    for (std::size_t i = 0; i + 1 < spec.stages.size(); ++i) {
        const auto image = stage_image(spec.stages[i]);
        const Hypercube& next = spec.stages[i + 1].domain;
        const double tol =
            1e-9 * std::max({1.0, std::fabs(next.a), std::fabs(next.b)});
        for (std::size_t k = 0; k < image.size(); ++k) {
            if (image[k].lo < next.a - tol || image[k].hi > next.b + tol) {
                throw ValidationError(
                    stage_tag(i) + ": interval range [" + format_double(image[k].lo) + ", " +
                    format_double(image[k].hi) + "] of output " + std::to_string(k + 1) +
                    " is not contained in the stage " + std::to_string(i + 2) + " domain [" +
                    format_double(next.a) + ", " + format_double(next.b) + "]");
            }
        }
    }
}

double inv_or_zero(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

} // namespace

int StageSpec::output_dim() const {
    switch (kind) {
        case StageKind::lipschitz_parallel: return static_cast<int>(blocks.size());
        case StageKind::max_parallel:
        case StageKind::product_parallel: return static_cast<int>(partition.size());
        case StageKind::ext_max:
        case StageKind::ext_prod: return domain.dim;
    }
    return 0;
}

FunctionSpec parse_spec(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("spec: top-level document must be an object");
    FunctionSpec spec;
    const std::string mode = need_string(doc, "mode", "spec");
    if (mode == "theorem1") spec.mode = TheoremMode::theorem1;
    else if (mode == "theorem2") spec.mode = TheoremMode::theorem2;
    else throw ParseError("spec: mode must be \"theorem1\" or \"theorem2\", got \"" + mode + "\"");

    const std::string norm = need_string(doc, "norm", "spec");
    if (norm == "1") spec.norm_p = 1.0;
    else if (norm == "2") spec.norm_p = 2.0;
    else if (norm == "inf") spec.norm_p = kInf;
    else throw ParseError("spec: norm must be \"1\", \"2\" or \"inf\", got \"" + norm + "\"");

    const nlohmann::json& stages = need(doc, "stages", "spec");
    if (!stages.is_array() || stages.empty()) {
        throw ParseError("spec: \"stages\" must be a nonempty array");
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string where = stage_tag(i);
        if (!stages[i].is_object()) throw ParseError(where + ": stage must be an object");
        StageSpec stage;
        stage.kind = parse_kind(need_string(stages[i], "kind", where), where);
        stage.domain = parse_domain(stages[i], where);
        validate_structure(stage, stages[i], where);
        spec.stages.push_back(std::move(stage));
    }

    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        validate_evaluability(spec.stages[i], stage_tag(i));
    }
    validate_mode(spec);
    validate_chain(spec);
    validate_lipschitz_declarations(spec);
    validate_containment(spec);
    return spec;
}

FunctionSpec parse_spec_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("spec: invalid JSON: ") + e.what());
    }
    return parse_spec(doc);
}

double stage_lipschitz(const StageSpec& stage, TheoremMode mode, double p) {
    switch (stage.kind) {
        case StageKind::lipschitz_parallel: {
            double L = 0.0;
            for (const auto& blk : stage.blocks) L = std::max(L, blk.lipschitz);
            return L;
        }
        case StageKind::max_parallel:
            return 1.0;
        case StageKind::product_parallel: {
            if (mode == TheoremMode::theorem1) return 1.0;
            double L = 1.0;
            for (int part : stage.partition) {
                if (part > 1) L = std::max(L, product_net_lip_bound(part, p));
            }
            return L;
        }
        case StageKind::ext_max:
            return std::pow(static_cast<double>(stage.domain.dim), inv_or_zero(p));
        case StageKind::ext_prod:
            return std::sqrt(32.0) * std::pow(static_cast<double>(stage.domain.dim), 3.5);
    }
    return 1.0;
}

bool stage_exact(const StageSpec& stage) {
    switch (stage.kind) {
        case StageKind::lipschitz_parallel:
            return std::all_of(stage.blocks.begin(), stage.blocks.end(), [](const auto& blk) {
                return as_affine(blk.expr, blk.dim).has_value();
            });
        case StageKind::max_parallel:
        case StageKind::ext_max:
            return true;
        case StageKind::product_parallel:
            return std::all_of(stage.partition.begin(), stage.partition.end(),
                               [](int part) { return part == 1; });
        case StageKind::ext_prod:
            return stage.domain.dim == 1;
    }
    return false;
}

Eigen::VectorXd reference_eval(const FunctionSpec& spec, const Eigen::VectorXd& x) {
    const Hypercube& Q1 = spec.stages.front().domain;
    if (x.size() != Q1.dim) {
        throw DimensionError("reference_eval: point dimension does not match the first stage");
    }
    const double tol = 1e-9 * std::max({1.0, std::fabs(Q1.a), std::fabs(Q1.b)});
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < Q1.a - tol || x[i] > Q1.b + tol) {
            throw DomainError("reference_eval: coordinate " + std::to_string(i + 1) +
                              " lies outside the first stage domain");
        }
    }

    Eigen::VectorXd v = x;
    for (const auto& stage : spec.stages) {
        Eigen::VectorXd next(stage.output_dim());
        switch (stage.kind) {
            case StageKind::lipschitz_parallel: {
                int at = 0;
                for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
                    const auto& blk = stage.blocks[b];
                    next[static_cast<Eigen::Index>(b)] =
                        eval_expression(blk.expr, v.segment(at, blk.dim));
                    at += blk.dim;
                }
                break;
            }
            case StageKind::max_parallel: {
                int at = 0;
                for (std::size_t b = 0; b < stage.partition.size(); ++b) {
                    next[static_cast<Eigen::Index>(b)] =
                        v.segment(at, stage.partition[b]).maxCoeff();
                    at += stage.partition[b];
                }
                break;
            }
            case StageKind::product_parallel: {
                int at = 0;
                for (std::size_t b = 0; b < stage.partition.size(); ++b) {
                    next[static_cast<Eigen::Index>(b)] =
                        v.segment(at, stage.partition[b]).prod();
                    at += stage.partition[b];
                }
                break;
            }
            case StageKind::ext_max: {
                double run = -kInf;
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    run = std::max(run, v[i]);
                    next[i] = run;
                }
                break;
            }
            case StageKind::ext_prod: {
                double run = 1.0;
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    run *= v[i];
                    next[i] = run;
                }
                break;
            }
        }
        v = std::move(next);
    }
    return v;
}

SampleConfig pipeline_sample_defaults() {
    SampleConfig cfg;
    cfg.samples = 2048;
    cfg.pairs = 256;
    return cfg;
}

BuildResult build(const FunctionSpec& spec, double eps, const SampleConfig& cfg) {
    if (!(eps > 0.0) || eps > 1.0) {
        throw ValidationError("build: accuracy must lie in (0, 1]");
    }
    const std::size_t n = spec.stages.size();
    std::vector<StageBudget> budgets(n);
    std::size_t inexact = 0;
    for (std::size_t i = 0; i < n; ++i) {
        budgets[i].lipschitz = stage_lipschitz(spec.stages[i], spec.mode, spec.norm_p);
        budgets[i].exact = stage_exact(spec.stages[i]);
        if (!budgets[i].exact) ++inexact;
    }
    // suffix[i] = prod_{j>i} L_j
    std::vector<double> suffix(n, 1.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        suffix[i] = suffix[i + 1] * budgets[i + 1].lipschitz;
    }
    if (inexact == 0) {
        // Degenerate all-exact spec: park the whole budget on the last stage
        // (ignored by an exact build) so the telescoped sum still equals eps.
        budgets[n - 1].eps = eps;
    } else {
        const double share = eps / static_cast<double>(inexact);
        for (std::size_t i = 0; i < n; ++i) {
            if (!budgets[i].exact) budgets[i].eps = share / suffix[i];
        }
    }

    std::vector<Network> nets;
    nets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& stage = spec.stages[i];
        Network g = [&]() -> Network {
            switch (stage.kind) {
                case StageKind::lipschitz_parallel:
                    return parallel_block_net(ParallelKind::lipschitz, stage.blocks, {},
                                              stage.domain, budgets[i].eps, spec.norm_p);
                case StageKind::max_parallel:
                    return parallel_block_net(ParallelKind::max_partition, {}, stage.partition,
                                              stage.domain, 0.0, spec.norm_p);
                case StageKind::product_parallel:
                    return parallel_block_net(spec.mode == TheoremMode::theorem1
                                                  ? ParallelKind::product_lip1
                                                  : ParallelKind::product_general,
                                              {}, stage.partition, stage.domain, budgets[i].eps,
                                              spec.norm_p);
                case StageKind::ext_max:
                    return cummax_net(stage.domain.dim);
                case StageKind::ext_prod:
                    return cumprod_net(stage.domain.dim,
                                       budgets[i].eps *
                                           std::pow(static_cast<double>(stage.domain.dim),
                                                    -inv_or_zero(spec.norm_p)));
            }
            throw BuildError("build: unreachable stage kind");
        }();
        if (i + 1 < n) {
            g = clip_to(g, spec.stages[i + 1].domain);
        } else {
            const auto image = stage_image(stage);
            Hypercube range;
            range.dim = stage.output_dim();
            range.a = kInf;
            range.b = -kInf;
            for (const auto& iv : image) {
                range.a = std::min(range.a, iv.lo);
                range.b = std::max(range.b, iv.hi);
            }
            if (range.a < range.b) g = clip_to(g, range);
        }
        nets.push_back(std::move(g));
    }

    Network net = compose_chain(nets);
    const FunctionSpec* spec_ptr = &spec;
    CertReport report = certify(
        net, [spec_ptr](const Eigen::VectorXd& x) { return reference_eval(*spec_ptr, x); },
        spec.stages.front().domain, spec.norm_p, cfg);
    const bool ok = report.sup_error_estimate <= eps;
    return BuildResult{std::move(net), std::move(budgets), std::move(report), eps, ok};
}

nlohmann::json build_report_json(const BuildResult& result) {
    nlohmann::json budgets = nlohmann::json::array();
    for (const auto& b : result.budgets) {
        budgets.push_back({{"eps", b.eps}, {"lipschitz", b.lipschitz}, {"exact", b.exact}});
    }
    nlohmann::json j = report_to_json(result.report);
    j["eps_target"] = result.eps_target;
    j["certified"] = result.certified;
    j["stage_budgets"] = std::move(budgets);
    j["depth"] = result.net.depth();
    return j;
}

} // namespace relu_forge
