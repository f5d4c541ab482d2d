#include "relu_forge/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace relu_forge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int ceil_log2(int d) {
    int e = 0;
    while ((1 << e) < d) ++e;
    return e;
}

// Networks are grown layer by layer while the logical "values" of the
// computation stay expressed as an affine map of the latest layer's units;
// raw layer weights are written against values and translated on the fly.
class LayeredBuilder {
public:
    explicit LayeredBuilder(int input_dim)
        : C_(Eigen::MatrixXd::Identity(input_dim, input_dim)),
          c0_(Eigen::VectorXd::Zero(input_dim)) {}

    int value_count() const { return static_cast<int>(C_.rows()); }

    // Appends a ReLU layer computing units = r(rawW * values + rawb), then
    // redefines values = combW * units + combc.
    void step(const Eigen::MatrixXd& rawW, const Eigen::VectorXd& rawb,
              const Eigen::MatrixXd& combW, const Eigen::VectorXd& combc) {
        Layer l;
        l.W = rawW * C_;
        l.b = rawW * c0_ + rawb;
        layers_.push_back(std::move(l));
        C_ = combW;
        c0_ = combc;
    }

    // Final affine layer producing outW * values + outc.
    Network finish(const Eigen::MatrixXd& outW, const Eigen::VectorXd& outc) {
        Layer l;
        l.W = outW * C_;
        l.b = outW * c0_ + outc;
        layers_.push_back(std::move(l));
        return Network(std::move(layers_));
    }

private:
    Eigen::MatrixXd C_;
    Eigen::VectorXd c0_;
    std::vector<Layer> layers_;
};

Network scalar_affine_identity() {
    Layer l;
    l.W = Eigen::MatrixXd::Identity(1, 1);
    l.b = Eigen::VectorXd::Zero(1);
    return Network({std::move(l)});
}

Network constant_net(int input_dim, double value) {
    Layer l;
    l.W = Eigen::MatrixXd::Zero(1, input_dim);
    l.b = Eigen::VectorXd::Constant(1, value);
    return Network({std::move(l)});
}

} // namespace

// ---- exact maxima -----------------------------------------------------------

Network max_net(int d) {
    if (d < 1) throw BuildError("max_net: dimension must be positive");
    if (d == 1) return scalar_affine_identity();
    LayeredBuilder b(d);
    int m = d;
    while (m > 1) {
        const int pairs = m / 2;
        const int carry = m % 2;
        const int units = 3 * pairs + 2 * carry;
        Eigen::MatrixXd rawW = Eigen::MatrixXd::Zero(units, m);
        Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(pairs + carry, units);
        for (int j = 0; j < pairs; ++j) {
            // max(a,b) = r(a-b) + r(b) - r(-b)
            rawW(3 * j, 2 * j) = 1.0;
            rawW(3 * j, 2 * j + 1) = -1.0;
            rawW(3 * j + 1, 2 * j + 1) = 1.0;
            rawW(3 * j + 2, 2 * j + 1) = -1.0;
            comb(j, 3 * j) = 1.0;
            comb(j, 3 * j + 1) = 1.0;
            comb(j, 3 * j + 2) = -1.0;
        }
        if (carry) {
            rawW(3 * pairs, m - 1) = 1.0;
            rawW(3 * pairs + 1, m - 1) = -1.0;
            comb(pairs, 3 * pairs) = 1.0;
            comb(pairs, 3 * pairs + 1) = -1.0;
        }
        b.step(rawW, Eigen::VectorXd::Zero(units), comb, Eigen::VectorXd::Zero(pairs + carry));
        m = pairs + carry;
    }
    return b.finish(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
}

Network cummax_net(int d) {
    if (d < 1) throw BuildError("cummax_net: dimension must be positive");
    if (d == 1) return scalar_affine_identity();
    LayeredBuilder b(d);
    for (int offset = 1; offset < d; offset *= 2) {
        const int merged = d - offset;
        const int units = 2 * offset + 3 * merged;
        Eigen::MatrixXd rawW = Eigen::MatrixXd::Zero(units, d);
        Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(d, units);
        int u = 0;
        for (int i = 0; i < d; ++i) {
            if (i < offset) {
                rawW(u, i) = 1.0;
                rawW(u + 1, i) = -1.0;
                comb(i, u) = 1.0;
                comb(i, u + 1) = -1.0;
                u += 2;
            } else {
                // v_i <- max(v_{i-offset}, v_i)
                rawW(u, i - offset) = 1.0;
                rawW(u, i) = -1.0;
                rawW(u + 1, i) = 1.0;
                rawW(u + 2, i) = -1.0;
                comb(i, u) = 1.0;
                comb(i, u + 1) = 1.0;
                comb(i, u + 2) = -1.0;
                u += 3;
            }
        }
        b.step(rawW, Eigen::VectorXd::Zero(units), comb, Eigen::VectorXd::Zero(d));
    }
    return b.finish(Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d));
}

// ---- products ---------------------------------------------------------------

int mult2_levels(double a, double eps) {
    // Per polarization term the sawtooth interpolant at level s misses z^2 by
    // at most 4^{-s}/8 on [0,1]; scaled by 4a^2 and summed over the three
    // terms the product error is 3 a^2 4^{-(s+1)}.  The floor of 5 keeps each
    // node's slope within a 2^{-5} relative margin of the exact product's,
    // which the staged Lipschitz envelopes rely on.
    int s = 1;
    while (3.0 * a * a * std::pow(4.0, -(s + 1)) > eps && s < 60) ++s;
    return std::max(s, 5);
}

namespace {

Network mult2_with_levels(double a, int s) {
    LayeredBuilder b(2);

    // Absolute values of the three polarization arguments, normalized to [0,1].
    Eigen::MatrixXd absW(6, 2);
    absW << 1, 1, -1, -1, 1, 0, -1, 0, 0, 1, 0, -1;
    Eigen::MatrixXd absC = Eigen::MatrixXd::Zero(6, 6);
    const double inv = 1.0 / (2.0 * a);
    // values: (A_i, g_i) per pipeline, both initialized to z_i
    for (int i = 0; i < 3; ++i) {
        absC(2 * i, 2 * i) = inv;
        absC(2 * i, 2 * i + 1) = inv;
        absC(2 * i + 1, 2 * i) = inv;
        absC(2 * i + 1, 2 * i + 1) = inv;
    }
    b.step(absW, Eigen::VectorXd::Zero(6), absC, Eigen::VectorXd::Zero(6));

    for (int k = 1; k <= s; ++k) {
        Eigen::MatrixXd rawW = Eigen::MatrixXd::Zero(12, 6);
        Eigen::VectorXd rawb = Eigen::VectorXd::Zero(12);
        Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(6, 12);
        const double scale = std::pow(4.0, -k);
        for (int i = 0; i < 3; ++i) {
            rawW(4 * i, 2 * i) = 1.0;          // r(A)
            rawW(4 * i + 1, 2 * i + 1) = 1.0;  // r(g)
            rawW(4 * i + 2, 2 * i + 1) = 1.0;  // r(g - 1/2)
            rawb(4 * i + 2) = -0.5;
            rawW(4 * i + 3, 2 * i + 1) = 1.0;  // r(g - 1)
            rawb(4 * i + 3) = -1.0;
            // g' = 2 r(g) - 4 r(g-1/2) + 2 r(g-1); A' = A - g'/4^k
            comb(2 * i, 4 * i) = 1.0;
            comb(2 * i, 4 * i + 1) = -2.0 * scale;
            comb(2 * i, 4 * i + 2) = 4.0 * scale;
            comb(2 * i, 4 * i + 3) = -2.0 * scale;
            comb(2 * i + 1, 4 * i + 1) = 2.0;
            comb(2 * i + 1, 4 * i + 2) = -4.0;
            comb(2 * i + 1, 4 * i + 3) = 2.0;
        }
        b.step(rawW, rawb, comb, Eigen::VectorXd::Zero(6));
    }

    // xy = 2a^2 (A_1 - A_2 - A_3) with A_i the squared normalized arguments.
    Eigen::MatrixXd outW = Eigen::MatrixXd::Zero(1, 6);
    outW(0, 0) = 2.0 * a * a;
    outW(0, 2) = -2.0 * a * a;
    outW(0, 4) = -2.0 * a * a;
    return b.finish(outW, Eigen::VectorXd::Zero(1));
}

double mult2_error(double a, int s) { return 3.0 * a * a * std::pow(4.0, -(s + 1)); }

// Balanced product tree over `count` inputs with per-input magnitude bound
// a0, aiming at total propagated error <= eps_total.
Network product_tree(int count, double a0, double eps_total) {
    const int levels = ceil_log2(count);
    const int nodes = count - 1;
    // Magnification of one node's error at the root: the product of sibling
    // magnitudes along the path, at most max(1,a0)^(count-2), stretched by
    // (1+eps) because approximate magnitudes exceed the true ones.
    const double mag = std::pow(std::max(1.0, a0), std::max(0, count - 2)) *
                       std::pow(1.0 + eps_total, levels);
    const double enode = eps_total / (nodes * mag);

    std::vector<double> A(static_cast<std::size_t>(count), a0);
    std::vector<Network> stages;
    int m = count;
    while (m > 1) {
        const int pairs = m / 2;
        const int carry = m % 2;
        std::vector<Network> blocks;
        std::vector<double> nextA;
        for (int j = 0; j < pairs; ++j) {
            const double scale =
                std::max(A[static_cast<std::size_t>(2 * j)], A[static_cast<std::size_t>(2 * j + 1)]);
            const int s = mult2_levels(scale, enode);
            blocks.push_back(mult2_with_levels(scale, s));
            nextA.push_back(A[static_cast<std::size_t>(2 * j)] *
                                A[static_cast<std::size_t>(2 * j + 1)] +
                            mult2_error(scale, s));
        }
        if (carry) {
            blocks.push_back(scalar_affine_identity());
            nextA.push_back(A.back());
        }
        stages.push_back(parallelize(blocks));
        A = std::move(nextA);
        m = pairs + carry;
    }
    return compose_chain(stages);
}

} // namespace

Network mult2_net(double a, double eps) {
    if (a <= 0.0) throw BuildError("mult2_net: scale must be positive");
    if (eps <= 0.0) throw BuildError("mult2_net: accuracy must be positive");
    return mult2_with_levels(a, mult2_levels(a, eps));
}

Network product_net(int d, double a, double eps) {
    if (d < 1) throw BuildError("product_net: dimension must be positive");
    if (a < 1.0) throw BuildError("product_net: scale must be >= 1");
    if (eps <= 0.0) throw BuildError("product_net: accuracy must be positive");
    if (d == 1) return scalar_affine_identity();
    return product_tree(d, a, eps);
}

Network lip1_product_net(int d, double eps) {
    if (d < 1) throw BuildError("lip1_product_net: dimension must be positive");
    if (eps <= 0.0 || eps > 1.0) throw BuildError("lip1_product_net: accuracy must be in (0,1]");
    if (d == 1) return scalar_affine_identity();

    const int e = ceil_log2(d);
    const int padded = 1 << e;
    const double eps_int = std::pow(8.0, -(1 << (e - 1))) * eps;
    Network tree = product_tree(padded, 0.125, eps_int);

    AffineMap pre;
    pre.A = Eigen::MatrixXd::Zero(padded, d);
    pre.c = Eigen::VectorXd::Zero(padded);
    for (int i = 0; i < padded; ++i) {
        if (i < d) pre.A(i, i) = 1.0;
        else pre.c[i] = 0.125;
    }
    AffineMap post;
    post.A = Eigen::MatrixXd::Constant(1, 1, std::pow(8.0, padded - d));
    post.c = Eigen::VectorXd::Zero(1);
    return affine_wrap(tree, pre, post);
}

Network cumprod_net(int d, double eps_component) {
    if (d < 1) throw BuildError("cumprod_net: dimension must be positive");
    if (eps_component <= 0.0) throw BuildError("cumprod_net: accuracy must be positive");
    if (d == 1) return scalar_affine_identity();

    // One uniform sawtooth level count for all nodes: smallest s whose
    // simulated worst-slot propagated error stays within the budget.
    int s = 5;
    for (; s < 60; ++s) {
        std::vector<double> A(static_cast<std::size_t>(d), 1.0);
        std::vector<double> E(static_cast<std::size_t>(d), 0.0);
        for (int offset = 1; offset < d; offset *= 2) {
            for (int i = d - 1; i >= offset; --i) {
                const double scale = std::max(A[static_cast<std::size_t>(i)],
                                              A[static_cast<std::size_t>(i - offset)]);
                const double err = mult2_error(scale, s);
                E[static_cast<std::size_t>(i)] =
                    A[static_cast<std::size_t>(i - offset)] * E[static_cast<std::size_t>(i)] +
                    A[static_cast<std::size_t>(i)] * E[static_cast<std::size_t>(i - offset)] + err;
                A[static_cast<std::size_t>(i)] =
                    A[static_cast<std::size_t>(i)] * A[static_cast<std::size_t>(i - offset)] + err;
            }
        }
        if (*std::max_element(E.begin(), E.end()) <= eps_component) break;
    }

    std::vector<double> A(static_cast<std::size_t>(d), 1.0);
    std::vector<Network> stages;
    for (int offset = 1; offset < d; offset *= 2) {
        const int merged = d - offset;
        AffineMap dup;
        dup.A = Eigen::MatrixXd::Zero(offset + 2 * merged, d);
        dup.c = Eigen::VectorXd::Zero(offset + 2 * merged);
        std::vector<Network> blocks;
        int row = 0;
        std::vector<double> nextA = A;
        for (int i = 0; i < d; ++i) {
            if (i < offset) {
                dup.A(row++, i) = 1.0;
                blocks.push_back(scalar_affine_identity());
            } else {
                dup.A(row, i - offset) = 1.0;
                dup.A(row + 1, i) = 1.0;
                row += 2;
                const double scale = std::max(A[static_cast<std::size_t>(i)],
                                              A[static_cast<std::size_t>(i - offset)]);
                blocks.push_back(mult2_with_levels(scale, s));
                nextA[static_cast<std::size_t>(i)] =
                    A[static_cast<std::size_t>(i)] * A[static_cast<std::size_t>(i - offset)] +
                    mult2_error(scale, s);
            }
        }
        stages.push_back(affine_wrap(parallelize(blocks), dup, std::nullopt));
        A = std::move(nextA);
    }
    return compose_chain(stages);
}

double product_net_lip_bound(int d, double p) {
    // Each mult2 node with inputs bounded by A has l1 slope at most
    // (3 + 2^{-4}) A; across the ceil(log2 d) tree levels with magnitudes at
    // most 1 + eps (eps <= 0.1) this multiplies to the bound below, and the
    // l1 -> lp conversion costs at most d^{1-1/p}.
    const double dual = std::isinf(p) ? 1.0 : (p == 1.0 ? 0.0 : 1.0 - 1.0 / p);
    return 1.2 * std::pow(static_cast<double>(d), dual) *
           std::pow(3.0625, ceil_log2(d));
}

double cumprod_net_lip_bound(int d, double p) {
    // As above but each doubling round has fan-out two, hence factor 6.125.
    const double dual = std::isinf(p) ? 1.0 : (p == 1.0 ? 0.0 : 1.0 - 1.0 / p);
    return 1.2 * std::pow(static_cast<double>(d), dual) *
           std::pow(6.125, ceil_log2(d));
}

// ---- maximum convolution ----------------------------------------------------

namespace {

// Exact one-hidden-layer synthesis of the grid maximum convolution
// E(x) = max_t (A_t - L |x - g_t|) on [a, a+(n-1)h], where A_t is the
// convolution's own value at grid point t.
Network envelope_net(const std::vector<double>& f, double a, double h, double L) {
    const int n = static_cast<int>(f.size());
    if (n == 1 || L == 0.0) return constant_net(1, f.empty() ? 0.0 : f[0]);

    std::vector<double> A(f);
    for (int t = 1; t < n; ++t)
        A[static_cast<std::size_t>(t)] = std::max(A[static_cast<std::size_t>(t)],
                                                  A[static_cast<std::size_t>(t - 1)] - L * h);
    for (int t = n - 2; t >= 0; --t)
        A[static_cast<std::size_t>(t)] = std::max(A[static_cast<std::size_t>(t)],
                                                  A[static_cast<std::size_t>(t + 1)] - L * h);

    // Within cell t the envelope is max of a -L line through (g_t, A_t) and a
    // +L line through (g_{t+1}, A_{t+1}); they cross at x*.
    std::vector<double> knots;
    std::vector<double> jumps;
    double slope = 0.0;
    const double tol = 1e-12 * h;
    auto push = [&](double x, double new_slope) {
        if (new_slope == slope) return;
        knots.push_back(x);
        jumps.push_back(new_slope - slope);
        slope = new_slope;
    };
    for (int t = 0; t + 1 < n; ++t) {
        const double g = a + t * h;
        const double cross = g + 0.5 * h +
                             (A[static_cast<std::size_t>(t)] - A[static_cast<std::size_t>(t + 1)]) /
                                 (2.0 * L);
        if (cross <= g + tol) {
            push(g, L);
        } else if (cross >= g + h - tol) {
            push(g, -L);
        } else {
            push(g, -L);
            push(cross, L);
        }
    }

    const int k = static_cast<int>(knots.size());
    Layer l1;
    l1.W = Eigen::MatrixXd::Ones(k, 1);
    l1.b.resize(k);
    for (int j = 0; j < k; ++j) l1.b[j] = -knots[static_cast<std::size_t>(j)];
    Layer l2;
    l2.W.resize(1, k);
    for (int j = 0; j < k; ++j) l2.W(0, j) = jumps[static_cast<std::size_t>(j)];
    l2.b = Eigen::VectorXd::Constant(1, A[0]);
    return Network({std::move(l1), std::move(l2)});
}

// Sequential running-max scan realizing the same maximum convolution for
// d-dimensional grids: two thin layers per grid point, carrying the shifted
// inputs and the running maximum through exact nonnegative ReLU channels.
Network scan_net(const std::vector<double>& f, int d, int n_axis, double a, double h, double L) {
    const auto m = static_cast<std::int64_t>(f.size());
    const double span = (n_axis - 1) * h;
    const double mlo =
        *std::min_element(f.begin(), f.end()) - L * d * span - 1.0;

    LayeredBuilder b(d);
    {
        // q_j = r(x_j - a), exact on the domain; running max starts at mlo.
        Eigen::MatrixXd comb(d + 1, d);
        comb << Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Zero(1, d);
        b.step(Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Constant(d, -a), comb,
               Eigen::VectorXd::Zero(d + 1));
    }

    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (std::int64_t k = 0; k < m; ++k) {
        // Layer A: split |q_j - delta_j| into signed halves, carry state.
        const int ua = 2 * d + d + 1;
        Eigen::MatrixXd rawA = Eigen::MatrixXd::Zero(ua, d + 1);
        Eigen::VectorXd rbA = Eigen::VectorXd::Zero(ua);
        for (int j = 0; j < d; ++j) {
            const double delta = idx[static_cast<std::size_t>(j)] * h;
            rawA(2 * j, j) = 1.0;
            rbA(2 * j) = -delta;
            rawA(2 * j + 1, j) = -1.0;
            rbA(2 * j + 1) = delta;
            rawA(2 * d + j, j) = 1.0; // carry q_j
        }
        rawA(3 * d, d) = 1.0; // carry running max
        Eigen::MatrixXd combA = Eigen::MatrixXd::Zero(d + 1 + d, ua);
        for (int j = 0; j < d; ++j) {
            combA(j, 2 * d + j) = 1.0;
            combA(d + 1 + j, 2 * j) = 1.0; // |q_j - delta_j|
            combA(d + 1 + j, 2 * j + 1) = 1.0;
        }
        combA(d, 3 * d) = 1.0;
        b.step(rawA, rbA, combA, Eigen::VectorXd::Zero(d + 1 + d));

        // Layer B: running max update via r(t_k - max).
        const int ub = d + 2;
        Eigen::MatrixXd rawB = Eigen::MatrixXd::Zero(ub, d + 1 + d);
        Eigen::VectorXd rbB = Eigen::VectorXd::Zero(ub);
        for (int j = 0; j < d; ++j) rawB(j, j) = 1.0;
        rawB(d, d) = 1.0;
        rawB(d + 1, d) = -1.0; // - (max - mlo)
        for (int j = 0; j < d; ++j) rawB(d + 1, d + 1 + j) = -L;
        rbB(d + 1) = f[static_cast<std::size_t>(k)] - mlo;
        Eigen::MatrixXd combB = Eigen::MatrixXd::Zero(d + 1, ub);
        for (int j = 0; j < d; ++j) combB(j, j) = 1.0;
        combB(d, d) = 1.0;
        combB(d, d + 1) = 1.0;
        b.step(rawB, rbB, combB, Eigen::VectorXd::Zero(d + 1));

        int j = d - 1; // row-major order, last axis fastest
        while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == n_axis) {
            idx[static_cast<std::size_t>(j)] = 0;
            --j;
        }
    }

    Eigen::MatrixXd outW = Eigen::MatrixXd::Zero(1, d + 1);
    outW(0, d) = 1.0;
    return b.finish(outW, Eigen::VectorXd::Constant(1, mlo));
}

} // namespace

int maxconv_grid_per_axis(const LipschitzBlockSpec& block, const Hypercube& Q, double eps) {
    const double span = Q.b - Q.a;
    return static_cast<int>(std::ceil(span * block.lipschitz * block.dim / eps)) + 1;
}

Network maxconv_net(const LipschitzBlockSpec& block, const Hypercube& Q, double eps) {
    if (block.dim != Q.dim) {
        throw DimensionError("maxconv_net: block dimension " + std::to_string(block.dim) +
                             " does not match domain dimension " + std::to_string(Q.dim));
    }
    if (eps <= 0.0) throw BuildError("maxconv_net: accuracy must be positive");
    const int d = block.dim;

    if (auto aff = as_affine(block.expr, d); aff && aff->coef.isZero(0.0)) {
        return constant_net(d, aff->offset);
    }
    if (block.lipschitz <= 0.0) {
        throw BuildError("maxconv_net: non-constant expression with Lipschitz bound <= 0");
    }
    if (d > 3) {
        throw BuildError("maxconv_net: grids above dimension 3 are not supported (the "
                         "eps^{-2d} cost is prohibitive)");
    }

    const int n_axis = maxconv_grid_per_axis(block, Q, eps);
    const double h = (Q.b - Q.a) / (n_axis - 1);
    std::int64_t m = 1;
    for (int j = 0; j < d; ++j) m *= n_axis;

    std::vector<double> f(static_cast<std::size_t>(m));
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd x(d);
    for (std::int64_t k = 0; k < m; ++k) {
        for (int j = 0; j < d; ++j) x[j] = Q.a + idx[static_cast<std::size_t>(j)] * h;
        const double v = eval_expression(block.expr, x);
        if (!std::isfinite(v)) {
            throw BuildError("maxconv_net: expression is not finite at grid point " +
                             std::to_string(k));
        }
        f[static_cast<std::size_t>(k)] = v;
        int j = d - 1;
        while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == n_axis) {
            idx[static_cast<std::size_t>(j)] = 0;
            --j;
        }
    }

    if (d == 1) return envelope_net(f, Q.a, h, block.lipschitz);
    return scan_net(f, d, n_axis, Q.a, h, block.lipschitz);
}

// ---- block lowering ---------------------------------------------------------

namespace {

double dual_norm(const Eigen::VectorXd& v, double p) {
    if (p == 1.0) return v.lpNorm<Eigen::Infinity>();
    if (std::isinf(p)) return v.lpNorm<1>();
    const double q = p / (p - 1.0);
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::fabs(v[i]), q);
    return std::pow(s, 1.0 / q);
}

Network affine_block_net(const AffineForm& a, int dim) {
    Layer l;
    l.W = a.coef.transpose();
    l.b = Eigen::VectorXd::Constant(1, a.offset);
    if (l.W.cols() != dim) l.W.conservativeResize(1, dim);
    return Network({std::move(l)});
}

// 1-D maximum convolution of `expr` (in x1) over [lo,hi] with grid constant
// at most cap, within eps.
Network univariate_envelope(const ExprPtr& expr, double lo, double hi, double cap, double eps) {
    Hypercube dom{lo, hi, 1};
    double L = lipschitz_upper_bound(expr, 1, dom, 1.0);
    if (std::isfinite(cap) && cap > 0.0) L = std::min(L, cap);
    const double span = hi - lo;
    if (L <= 0.0 || span <= 0.0) {
        Eigen::VectorXd pt = Eigen::VectorXd::Constant(1, lo);
        return constant_net(1, eval_expression(expr, pt));
    }
    const int n = static_cast<int>(std::ceil(span * L / eps)) + 1;
    const double h = span / (n - 1);
    std::vector<double> f(static_cast<std::size_t>(n));
    Eigen::VectorXd x(1);
    for (int t = 0; t < n; ++t) {
        x[0] = lo + t * h;
        f[static_cast<std::size_t>(t)] = eval_expression(expr, x);
        if (!std::isfinite(f[static_cast<std::size_t>(t)])) {
            throw BuildError("block lowering: expression not finite at grid point " +
                             std::to_string(x[0]));
        }
    }
    return envelope_net(f, lo, h, L);
}

} // namespace

Network lower_block(const LipschitzBlockSpec& block, const Hypercube& Q, double eps, double p) {
    const int dim = block.dim;
    if (auto aff = as_affine(block.expr, dim)) {
        return affine_block_net(*aff, dim);
    }
    if (dim == 1) {
        return univariate_envelope(block.expr, Q.a, Q.b, block.lipschitz, eps);
    }
    if (auto ridge = as_ridge(block.expr, dim)) {
        const Eigen::VectorXd& beta = ridge->inner.coef;
        double ulo = ridge->inner.offset, uhi = ridge->inner.offset;
        for (int i = 0; i < dim; ++i) {
            ulo += std::min(beta[i] * Q.a, beta[i] * Q.b);
            uhi += std::max(beta[i] * Q.a, beta[i] * Q.b);
        }
        const Interval urange = widen(ulo, uhi, 4);
        const double bn = dual_norm(beta, p);
        const double cap = bn > 0.0 ? block.lipschitz / bn : kInf;
        Network env = univariate_envelope(ridge->outer, urange.lo, urange.hi, cap, eps);
        AffineMap pre;
        pre.A = beta.transpose();
        pre.c = Eigen::VectorXd::Constant(1, ridge->inner.offset);
        return affine_wrap(env, pre, std::nullopt);
    }
    if (auto sep = as_separable(block.expr, dim)) {
        const int terms = static_cast<int>(sep->terms.size());
        const bool linear_part = !sep->lin.isZero(0.0);
        const double eps_term = eps / terms;
        std::vector<Network> nets;
        const int rows = terms + (linear_part ? 1 : 0);
        AffineMap pre;
        pre.A = Eigen::MatrixXd::Zero(rows, dim);
        pre.c = Eigen::VectorXd::Zero(rows);
        AffineMap post;
        post.A = Eigen::MatrixXd::Ones(1, rows);
        post.c = Eigen::VectorXd::Constant(1, sep->offset);
        for (int t = 0; t < terms; ++t) {
            const auto& [var, e1] = sep->terms[static_cast<std::size_t>(t)];
            pre.A(t, var - 1) = 1.0;
            nets.push_back(univariate_envelope(e1, Q.a, Q.b, kInf, eps_term));
        }
        if (linear_part) {
            // One scalar channel carries lin . x through an identity network.
            pre.A.row(terms) = sep->lin.transpose();
            nets.push_back(identity_network(1));
        }
        return affine_wrap(parallelize(nets), pre, post);
    }
    if (dim > 3) {
        throw BuildError("block lowering: expression " + to_string(block.expr) +
                         " has no affine/ridge/separable structure and dimension " +
                         std::to_string(dim) + " > 3");
    }
    // Fall back to the full grid scan; its l1 grid constant is bounded by the
    // declared constant for any p (the dual norm dominates the max norm).
    LipschitzBlockSpec scan = block;
    scan.lipschitz = std::min(block.lipschitz, lipschitz_upper_bound(block.expr, dim, Q, 1.0));
    Hypercube dom = Q;
    dom.dim = dim;
    return maxconv_net(scan, dom, eps);
}

// ---- parallel stages --------------------------------------------------------

namespace {

// Wraps `net` with exact single-channel pass-throughs: pre_lo.size() leading
// and post_lo.size() trailing coordinates are forwarded unchanged, each
// carried as r(v - lo) with lo a lower bound of that coordinate's range.
Network with_passthrough(const Network& net, const std::vector<double>& pre_lo,
                         const std::vector<double>& post_lo) {
    const int p1 = static_cast<int>(pre_lo.size());
    const int p2 = static_cast<int>(post_lo.size());
    if (p1 == 0 && p2 == 0) return net;
    const int depth = net.depth();
    std::vector<Layer> layers;
    layers.reserve(static_cast<std::size_t>(depth));
    for (int k = 0; k < depth; ++k) {
        const Layer& inner = net.layer(k);
        const bool first = k == 0;
        const bool last = k == depth - 1;
        const Eigen::Index rows = p1 + inner.W.rows() + p2;
        const Eigen::Index cols = p1 + inner.W.cols() + p2;
        Layer l;
        l.W = Eigen::MatrixXd::Zero(rows, cols);
        l.b = Eigen::VectorXd::Zero(rows);
        for (int j = 0; j < p1; ++j) {
            l.W(j, j) = 1.0;
            if (first) l.b[j] = -pre_lo[static_cast<std::size_t>(j)];
            if (last) l.b[j] = (depth == 1) ? 0.0 : pre_lo[static_cast<std::size_t>(j)];
        }
        l.W.block(p1, p1, inner.W.rows(), inner.W.cols()) = inner.W;
        l.b.segment(p1, inner.b.size()) = inner.b;
        for (int j = 0; j < p2; ++j) {
            const Eigen::Index r = p1 + inner.W.rows() + j;
            const Eigen::Index c = p1 + inner.W.cols() + j;
            l.W(r, c) = 1.0;
            if (first) l.b[r] = -post_lo[static_cast<std::size_t>(j)];
            if (last) l.b[r] = (depth == 1) ? 0.0 : post_lo[static_cast<std::size_t>(j)];
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

double block_budget_share(int inexact, double p) {
    if (inexact <= 1) return 1.0;
    if (p == 1.0) return 1.0 / inexact;
    if (std::isinf(p)) return 1.0;
    return std::pow(static_cast<double>(inexact), -1.0 / p);
}

void check_partition(const std::vector<int>& partition, const Hypercube& Q,
                     const char* what) {
    if (partition.empty()) throw ValidationError(std::string(what) + ": empty partition");
    int total = 0;
    for (int part : partition) {
        if (part < 1) throw ValidationError(std::string(what) + ": non-positive partition part");
        total += part;
    }
    if (total != Q.dim) {
        throw ValidationError(std::string(what) + ": partition covers " + std::to_string(total) +
                              " coordinates but the domain has " + std::to_string(Q.dim));
    }
}

constexpr int kParallelDepthLimit = 64;

} // namespace

Network parallel_block_net(ParallelKind kind,
                           const std::vector<LipschitzBlockSpec>& blocks,
                           const std::vector<int>& partition,
                           const Hypercube& Q, double eps, double p) {
    switch (kind) {
        case ParallelKind::max_partition: {
            check_partition(partition, Q, "max stage");
            std::vector<Network> nets;
            nets.reserve(partition.size());
            for (int part : partition) nets.push_back(max_net(part));
            return parallelize(nets);
        }
        case ParallelKind::product_lip1:
        case ParallelKind::product_general: {
            const bool lip1 = kind == ParallelKind::product_lip1;
            check_partition(partition, Q, "product stage");
            const double lim = lip1 ? 0.125 : 1.0;
            if (Q.a < -lim - 1e-12 || Q.b > lim + 1e-12) {
                throw ValidationError(std::string("product stage: domain [") +
                                      std::to_string(Q.a) + ", " + std::to_string(Q.b) +
                                      "] exceeds [-" + (lip1 ? "1/8" : "1") + ", " +
                                      (lip1 ? "1/8" : "1") + "]");
            }
            int inexact = 0;
            for (int part : partition)
                if (part > 1) ++inexact;
            const double eps_b = eps * block_budget_share(inexact, p);
            std::vector<Network> nets;
            nets.reserve(partition.size());
            for (int part : partition) {
                if (part == 1) nets.push_back(scalar_affine_identity());
                else if (lip1) nets.push_back(lip1_product_net(part, eps_b));
                else nets.push_back(product_net(part, 1.0, eps_b));
            }
            return parallelize(nets);
        }
        case ParallelKind::lipschitz: break;
    }

    if (blocks.empty()) throw ValidationError("parallel stage: no blocks");
    int total = 0, inexact = 0;
    for (const auto& blk : blocks) {
        if (blk.dim < 1) throw ValidationError("parallel stage: non-positive block dimension");
        if (!blk.expr) throw ValidationError("parallel stage: block without expression");
        total += blk.dim;
        if (!as_affine(blk.expr, blk.dim)) ++inexact;
    }
    if (total != Q.dim) {
        throw ValidationError("parallel stage: blocks cover " + std::to_string(total) +
                              " coordinates but the domain has " + std::to_string(Q.dim));
    }
    const double eps_b = eps * block_budget_share(inexact, p);

    Hypercube blockQ = Q;
    std::vector<Network> nets;
    nets.reserve(blocks.size());
    int max_depth = 0;
    for (const auto& blk : blocks) {
        blockQ.dim = blk.dim;
        nets.push_back(lower_block(blk, blockQ, eps_b, p));
        max_depth = std::max(max_depth, nets.back().depth());
    }
    if (max_depth <= kParallelDepthLimit) return parallelize(nets);

    // At least one deep grid scan: chain one block at a time, forwarding
    // already-computed outputs and not-yet-consumed inputs through exact
    // pass-through channels instead of padding everything to a common depth.
    std::vector<double> out_lo;
    std::vector<Network> substages;
    int consumed = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        consumed += blocks[i].dim;
        std::vector<double> post_lo(static_cast<std::size_t>(Q.dim - consumed), Q.a);
        substages.push_back(with_passthrough(nets[i], out_lo, post_lo));
        std::vector<Interval> box(static_cast<std::size_t>(blocks[i].dim), Interval{Q.a, Q.b});
        const Interval range = eval_interval(blocks[i].expr, box);
        out_lo.push_back(range.lo - eps_b - 1.0);
    }
    return compose_chain(substages);
}

} // namespace relu_forge
