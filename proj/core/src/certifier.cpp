#include "relu_forge/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "relu_forge/errors.hpp"

namespace relu_forge {

namespace {

constexpr Eigen::Index kBatch = 1024;

// Splits [0, n) into contiguous ranges, evaluates fn(begin, end) -> local max
// on each in its own thread, and max-reduces.  The partition never affects
// per-point results, so the outcome is bit-identical for any thread count.
template <typename Fn>
double parallel_max(Eigen::Index n, Fn&& fn) {
    const Eigen::Index threads =
        std::min<Eigen::Index>(certifier_thread_count(), std::max<Eigen::Index>(n, 1));
    if (threads <= 1) return fn(Eigen::Index{0}, n);
    std::vector<double> local(static_cast<std::size_t>(threads),
                              -std::numeric_limits<double>::infinity());
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const Eigen::Index chunk = (n + threads - 1) / threads;
    for (Eigen::Index t = 0; t < threads; ++t) {
        const Eigen::Index b = t * chunk;
        const Eigen::Index e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, t, b, e] { local[static_cast<std::size_t>(t)] = fn(b, e); });
    }
    for (auto& th : pool) th.join();
    return *std::max_element(local.begin(), local.end());
}

Eigen::MatrixXd uniform_points(const Hypercube& Q, Eigen::Index count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(Q.a, Q.b);
    Eigen::MatrixXd pts(Q.dim, count);
    for (Eigen::Index j = 0; j < count; ++j)
        for (int i = 0; i < Q.dim; ++i) pts(i, j) = u(rng);
    return pts;
}

double lp_norm(const Eigen::VectorXd& v, double p) {
    if (std::isinf(p)) return v.lpNorm<Eigen::Infinity>();
    if (p == 1.0) return v.lpNorm<1>();
    if (p == 2.0) return v.norm();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::fabs(v[i]), p);
    return std::pow(s, 1.0 / p);
}

} // namespace

int certifier_thread_count() {
    if (const char* env = std::getenv("RELU_FORGE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 256);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 4;
}

double sup_error(const Network& net, const VectorFn& ref, const Hypercube& Q,
                 double p, const SampleConfig& cfg) {
    if (net.input_dim() != Q.dim) {
        throw DimensionError("sup_error: network input dimension does not match the domain");
    }
    std::mt19937_64 rng(cfg.seed);
    Eigen::MatrixXd pts = uniform_points(Q, cfg.samples, rng);

    Eigen::Index extra = 1; // center
    const bool corners = Q.dim <= cfg.corner_dim_cap;
    if (corners) extra += Eigen::Index{1} << Q.dim;
    Eigen::MatrixXd special(Q.dim, extra);
    special.col(0) = Q.center();
    if (corners) {
        for (Eigen::Index c = 0; c < (Eigen::Index{1} << Q.dim); ++c)
            for (int i = 0; i < Q.dim; ++i)
                special(i, c + 1) = ((c >> i) & 1) ? Q.b : Q.a;
    }
    Eigen::MatrixXd all(Q.dim, pts.cols() + special.cols());
    all << pts, special;

    return parallel_max(all.cols(), [&](Eigen::Index b, Eigen::Index e) {
        double worst = 0.0;
        for (Eigen::Index at = b; at < e; at += kBatch) {
            const Eigen::Index n = std::min(kBatch, e - at);
            const Eigen::MatrixXd out = net.evaluate_batch(all.middleCols(at, n));
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::VectorXd want = ref(all.col(at + j));
                if (want.size() != out.rows()) {
                    throw DimensionError("sup_error: reference output dimension mismatch");
                }
                worst = std::max(worst, lp_norm(out.col(j) - want, p));
            }
        }
        return worst;
    });
}

namespace {

// Shared core: one evaluation sweep over the sampled pairs, max ratio per
// requested norm.  Splitting the pair range across threads cannot change the
// result because each per-pair ratio is computed independently.
std::vector<double> lipschitz_sweep(const Network& net, const Hypercube& Q,
                                    const std::vector<double>& ps, const SampleConfig& cfg) {
    if (net.input_dim() != Q.dim) {
        throw DimensionError("lipschitz_est: network input dimension does not match the domain");
    }
    std::mt19937_64 rng(cfg.seed);
    const Eigen::Index global = cfg.pairs / 2;
    const Eigen::Index local = cfg.pairs - global;

    Eigen::MatrixXd xs(Q.dim, cfg.pairs), ys(Q.dim, cfg.pairs);
    xs.leftCols(global) = uniform_points(Q, global, rng);
    ys.leftCols(global) = uniform_points(Q, global, rng);
    xs.rightCols(local) = uniform_points(Q, local, rng);
    {
        const double radius = cfg.local_scale * Q.side();
        std::uniform_real_distribution<double> d(-radius, radius);
        for (Eigen::Index j = 0; j < local; ++j)
            for (int i = 0; i < Q.dim; ++i) {
                const double y = xs(i, global + j) + d(rng);
                ys(i, global + j) = std::clamp(y, Q.a, Q.b);
            }
    }

    auto sweep = [&](Eigen::Index b, Eigen::Index e, std::vector<double>& worst) {
        for (Eigen::Index at = b; at < e; at += kBatch) {
            const Eigen::Index n = std::min(kBatch, e - at);
            const Eigen::MatrixXd fx = net.evaluate_batch(xs.middleCols(at, n));
            const Eigen::MatrixXd fy = net.evaluate_batch(ys.middleCols(at, n));
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::VectorXd din = xs.col(at + j) - ys.col(at + j);
                const Eigen::VectorXd dout = fx.col(j) - fy.col(j);
                for (std::size_t k = 0; k < ps.size(); ++k) {
                    const double dx = lp_norm(din, ps[k]);
                    if (dx <= 0.0) continue;
                    worst[k] = std::max(worst[k], lp_norm(dout, ps[k]) / dx);
                }
            }
        }
    };

    const Eigen::Index threads = std::min<Eigen::Index>(
        certifier_thread_count(), std::max<Eigen::Index>(cfg.pairs, 1));
    std::vector<std::vector<double>> local_worst(
        static_cast<std::size_t>(std::max<Eigen::Index>(threads, 1)),
        std::vector<double>(ps.size(), 0.0));
    if (threads <= 1) {
        sweep(0, cfg.pairs, local_worst[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        const Eigen::Index chunk = (cfg.pairs + threads - 1) / threads;
        for (Eigen::Index t = 0; t < threads; ++t) {
            const Eigen::Index b = t * chunk;
            const Eigen::Index e = std::min<Eigen::Index>(cfg.pairs, b + chunk);
            if (b >= e) break;
            pool.emplace_back(
                [&, t, b, e] { sweep(b, e, local_worst[static_cast<std::size_t>(t)]); });
        }
        for (auto& th : pool) th.join();
    }
    std::vector<double> out(ps.size(), 0.0);
    for (const auto& w : local_worst)
        for (std::size_t k = 0; k < ps.size(); ++k) out[k] = std::max(out[k], w[k]);
    return out;
}

} // namespace

double lipschitz_est(const Network& net, const Hypercube& Q, double p,
                     const SampleConfig& cfg) {
    return lipschitz_sweep(net, Q, {p}, cfg)[0];
}

std::pair<double, double> norm_factors(int m, int n, double p, double q) {
    if (m < 1 || n < 1) throw ValidationError("norm_factors: dimensions must be positive");
    auto inv = [](double r) { return std::isinf(r) ? 0.0 : 1.0 / r; };
    const double e = inv(p) - inv(q);
    const double first =
        std::max(std::pow(static_cast<double>(m), e), std::pow(static_cast<double>(n), -e));
    const double second = std::max(std::pow(static_cast<double>(n), -e), 1.0);
    return {first, second};
}

PowerFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) {
        throw ValidationError("scaling_fit: need at least three points");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> logs;
    logs.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) {
            throw ValidationError("scaling_fit: coordinates must be positive");
        }
        const double lx = std::log(x), ly = std::log(y);
        logs.emplace_back(lx, ly);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::fabs(denom) < 1e-12) {
        throw ValidationError("scaling_fit: degenerate abscissae");
    }
    PowerFit fit;
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.log_prefactor = (sy - fit.exponent * sx) / n;
    for (const auto& [lx, ly] : logs) {
        fit.max_residual =
            std::max(fit.max_residual, std::fabs(ly - fit.exponent * lx - fit.log_prefactor));
    }
    return fit;
}

CertReport certify(const Network& net, const VectorFn& ref, const Hypercube& Q,
                   double p, const SampleConfig& cfg) {
    CertReport rep;
    rep.sup_error_estimate = sup_error(net, ref, Q, p, cfg);
    const std::vector<double> lips = lipschitz_sweep(
        net, Q, {1.0, 2.0, std::numeric_limits<double>::infinity()}, cfg);
    rep.lipschitz_l1 = lips[0];
    rep.lipschitz_l2 = lips[1];
    rep.lipschitz_linf = lips[2];
    rep.param_count = net.param_count();
    rep.sample_count = cfg.samples + 1 +
                       (Q.dim <= cfg.corner_dim_cap ? (std::int64_t{1} << Q.dim) : 0);
    rep.domain = Q;
    rep.norm_p = p;
    rep.seed = cfg.seed;
    return rep;
}

namespace {

std::string norm_name(double p) {
    if (std::isinf(p)) return "inf";
    if (p == 1.0) return "1";
    if (p == 2.0) return "2";
    return format_double(p);
}

} // namespace

std::string format_double(double v) {
    return nlohmann::json(v).dump();
}

nlohmann::json report_to_json(const CertReport& r) {
    return nlohmann::json{
        {"sup_error_estimate", r.sup_error_estimate},
        {"lipschitz_estimates",
         {{"1", r.lipschitz_l1}, {"2", r.lipschitz_l2}, {"inf", r.lipschitz_linf}}},
        {"param_count", r.param_count},
        {"sample_count", r.sample_count},
        {"domain", {{"a", r.domain.a}, {"b", r.domain.b}, {"dim", r.domain.dim}}},
        {"norm", norm_name(r.norm_p)},
        {"seed", r.seed},
    };
}

nlohmann::json scaling_report_to_json(const ScalingReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json j{{"d", row.d},
                         {"eps", row.eps},
                         {"params", row.params},
                         {"sup_error", row.sup_error},
                         {"certified", row.certified}};
        if (!row.note.empty()) j["note"] = row.note;
        rows.push_back(std::move(j));
    }
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& [label, fit] : report.fits) {
        fits.push_back({{"label", label},
                        {"exponent", fit.exponent},
                        {"log_prefactor", fit.log_prefactor},
                        {"max_residual", fit.max_residual}});
    }
    return nlohmann::json{{"family", report.family},
                          {"rows", std::move(rows)},
                          {"fits", std::move(fits)},
                          {"all_certified", report.all_certified}};
}

void write_scaling_csv(std::ostream& out, const ScalingReport& report) {
    out << "d,eps,params,sup_error\n";
    for (const auto& row : report.rows) {
        out << row.d << ',' << format_double(row.eps) << ',' << row.params << ','
            << format_double(row.sup_error) << '\n';
    }
}

} // namespace relu_forge
