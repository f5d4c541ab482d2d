// Command-line surface over the staged-network pipeline: build certified
// networks from spec files or built-in families, evaluate and re-certify
// saved networks, and run scaling studies emitting CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 input/validation error, 2 certification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "relu_forge/certifier.hpp"
#include "relu_forge/errors.hpp"
#include "relu_forge/families.hpp"
#include "relu_forge/pipeline.hpp"
#include "relu_forge/serialization.hpp"

namespace rf = relu_forge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitCertification = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rf::ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rf::ValidationError("cannot write file: " + path);
    out << content;
}

std::string sibling_path(const std::string& base, const char* suffix) {
    std::filesystem::path p(base);
    p.replace_extension("");
    return p.string() + suffix;
}

Eigen::VectorXd parse_point(const std::string& text) {
    std::vector<double> vals;
    std::size_t at = 0;
    while (at <= text.size()) {
        const std::size_t comma = text.find(',', at);
        const std::string tok =
            text.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw rf::ParseError("invalid coordinate \"" + tok + "\"");
        }
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) throw rf::ParseError("invalid coordinate \"" + tok + "\"");
        vals.push_back(v);
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) x[static_cast<Eigen::Index>(i)] = vals[i];
    return x;
}

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> eps;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw rf::ParseError("invalid accuracy \"" + tok + "\"");
        }
        if (used != tok.size() || !(v > 0.0) || v > 1.0) {
            throw rf::ParseError("accuracy values must lie in (0, 1], got \"" + tok + "\"");
        }
        eps.push_back(v);
    }
    if (eps.empty()) throw rf::ParseError("empty accuracy list");
    return eps;
}

struct SpecSource {
    std::string spec_path;
    std::string family;
    int d = 0;

    rf::FunctionSpec load() const {
        if (!spec_path.empty()) return rf::parse_spec_text(read_file(spec_path));
        return rf::builtin_family(family, d);
    }
    void validate() const {
        if (spec_path.empty() == family.empty()) {
            throw rf::ValidationError("exactly one of --spec and --family is required");
        }
        if (!family.empty() && d < 2) {
            throw rf::ValidationError("--family requires --d >= 2");
        }
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit ReLU network construction and certification"};
    app.require_subcommand(1);

    rf::SampleConfig cfg = rf::pipeline_sample_defaults();
    app.add_option("--seed", cfg.seed, "sampling seed (default 42)");
    app.add_option("--samples", cfg.samples, "sup-error sample count");
    app.add_option("--pairs", cfg.pairs, "Lipschitz pair count");

    // build
    auto* build_cmd = app.add_subcommand("build", "compile a staged spec to a certified network");
    SpecSource build_src;
    double build_eps = 0.0;
    std::string build_out = "network.json", build_report;
    build_cmd->add_option("--spec", build_src.spec_path, "spec JSON path");
    build_cmd->add_option("--family", build_src.family, "built-in family name");
    build_cmd->add_option("--d", build_src.d, "family scale");
    build_cmd->add_option("--eps", build_eps, "target accuracy in (0,1]")->required();
    build_cmd->add_option("--out", build_out, "output network JSON path");
    build_cmd->add_option("--report", build_report, "output report JSON path");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved network at a point");
    std::string eval_net, eval_point;
    eval_cmd->add_option("--net", eval_net, "network JSON path")->required();
    eval_cmd->add_option("--point", eval_point, "comma-separated input coordinates")->required();

    // certify
    auto* cert_cmd = app.add_subcommand("certify", "re-certify a saved network against a spec");
    SpecSource cert_src;
    std::string cert_net, cert_out;
    double cert_eps = 0.0;
    cert_cmd->add_option("--net", cert_net, "network JSON path")->required();
    cert_cmd->add_option("--spec", cert_src.spec_path, "spec JSON path");
    cert_cmd->add_option("--family", cert_src.family, "built-in family name");
    cert_cmd->add_option("--d", cert_src.d, "family scale");
    cert_cmd->add_option("--eps", cert_eps, "accuracy to certify against")->required();
    cert_cmd->add_option("--out", cert_out, "report JSON path (stdout when omitted)");

    // scale
    auto* scale_cmd = app.add_subcommand("scale", "scaling study over d and eps");
    std::string scale_family, scale_dims, scale_eps_text, scale_out = "scaling.csv", scale_json;
    scale_cmd->add_option("--family", scale_family, "built-in family name")->required();
    scale_cmd->add_option("--dims", scale_dims, "scale range lo:hi")->required();
    scale_cmd->add_option("--eps", scale_eps_text, "comma-separated accuracy list")->required();
    scale_cmd->add_option("--out", scale_out, "output CSV path");
    scale_cmd->add_option("--json", scale_json, "output JSON path (default: CSV path with .json)");

    // catalog
    app.add_subcommand("catalog", "list built-in families");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_cmd->parsed()) {
            build_src.validate();
            if (!(build_eps > 0.0) || build_eps > 1.0) {
                throw rf::ValidationError("--eps must lie in (0, 1]");
            }
            const rf::FunctionSpec spec = build_src.load();
            const rf::BuildResult result = rf::build(spec, build_eps, cfg);
            if (build_report.empty()) build_report = sibling_path(build_out, ".report.json");
            rf::save_network(result.net, build_out);
            write_file(build_report, rf::build_report_json(result).dump(2) + "\n");
            std::cout << (result.certified ? "certified" : "NOT certified") << ": sup error "
                      << rf::format_double(result.report.sup_error_estimate) << " vs target "
                      << rf::format_double(result.eps_target) << ", "
                      << result.report.param_count << " parameters\n";
            return result.certified ? kExitOk : kExitCertification;
        }

        if (eval_cmd->parsed()) {
            const rf::Network net = rf::load_network(eval_net);
            const Eigen::VectorXd x = parse_point(eval_point);
            if (x.size() != net.input_dim()) {
                throw rf::DimensionError("point has dimension " + std::to_string(x.size()) +
                                         " but the network expects " +
                                         std::to_string(net.input_dim()));
            }
            const Eigen::VectorXd y = net.evaluate(x);
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                if (i) std::cout << ',';
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", y[i]);
                std::cout << buf;
            }
            std::cout << '\n';
            return kExitOk;
        }

        if (cert_cmd->parsed()) {
            cert_src.validate();
            if (!(cert_eps > 0.0) || cert_eps > 1.0) {
                throw rf::ValidationError("--eps must lie in (0, 1]");
            }
            const rf::FunctionSpec spec = cert_src.load();
            const rf::Network net = rf::load_network(cert_net);
            const rf::FunctionSpec* sp = &spec;
            const rf::CertReport report = rf::certify(
                net, [sp](const Eigen::VectorXd& x) { return rf::reference_eval(*sp, x); },
                spec.stages.front().domain, spec.norm_p, cfg);
            const bool ok = report.sup_error_estimate <= cert_eps;
            nlohmann::json j = rf::report_to_json(report);
            j["eps_target"] = cert_eps;
            j["certified"] = ok;
            const std::string text = j.dump(2) + "\n";
            if (cert_out.empty()) std::cout << text;
            else write_file(cert_out, text);
            return ok ? kExitOk : kExitCertification;
        }

        if (scale_cmd->parsed()) {
            const std::size_t colon = scale_dims.find(':');
            if (colon == std::string::npos) {
                throw rf::ParseError("--dims must have the form lo:hi");
            }
            int lo = 0, hi = 0;
            try {
                lo = std::stoi(scale_dims.substr(0, colon));
                hi = std::stoi(scale_dims.substr(colon + 1));
            } catch (const std::exception&) {
                throw rf::ParseError("--dims must have the form lo:hi");
            }
            const std::vector<double> eps_set = parse_eps_list(scale_eps_text);
            const rf::ScalingReport report =
                rf::run_scaling(scale_family, lo, hi, eps_set, cfg);
            {
                std::ostringstream csv;
                rf::write_scaling_csv(csv, report);
                write_file(scale_out, csv.str());
            }
            if (scale_json.empty()) scale_json = sibling_path(scale_out, ".json");
            write_file(scale_json, rf::scaling_report_to_json(report).dump(2) + "\n");
            std::cout << report.rows.size() << " cells, "
                      << (report.all_certified ? "all certified" : "FAILURES present") << "\n";
            return report.all_certified ? kExitOk : kExitCertification;
        }

        // catalog
        for (const auto& fam : rf::family_catalog()) {
            std::cout << fam.name << "\t" << fam.mode << "\tl" << fam.norm << "\t"
                      << fam.scale_note << "\n\t" << fam.formula << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
