#include "relu_forge/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relu_forge {

namespace {

Eigen::MatrixXd vstack_pm(const Eigen::MatrixXd& W) {
    Eigen::MatrixXd S(2 * W.rows(), W.cols());
    S.topRows(W.rows()) = W;
    S.bottomRows(W.rows()) = -W;
    return S;
}

Eigen::VectorXd vstack_pm(const Eigen::VectorXd& b) {
    Eigen::VectorXd s(2 * b.size());
    s.head(b.size()) = b;
    s.tail(b.size()) = -b;
    return s;
}

// [I, -I] of size d x 2d: recombines the (relu(z), relu(-z)) split.
Layer merge_layer(int d) {
    Layer l;
    l.W.setZero(d, 2 * d);
    l.W.leftCols(d) = Eigen::MatrixXd::Identity(d, d);
    l.W.rightCols(d) = -Eigen::MatrixXd::Identity(d, d);
    l.b.setZero(d);
    return l;
}

// Brings a net to the requested depth by splitting its output into signed
// halves, carrying them through identity hidden layers (nonnegative, so the
// ReLU is exact on them) and recombining at the end.
std::vector<Layer> pad_to_depth(const Network& net, int target_depth) {
    std::vector<Layer> out(net.layers().begin(), net.layers().end());
    const int L = net.depth();
    if (L == target_depth) return out;

    const int n = net.output_dim();
    Layer& last = out.back();
    last.W = vstack_pm(Eigen::MatrixXd(last.W));
    last.b = vstack_pm(Eigen::VectorXd(last.b));
    for (int k = 0; k < target_depth - L - 1; ++k) {
        Layer id;
        id.W = Eigen::MatrixXd::Identity(2 * n, 2 * n);
        id.b.setZero(2 * n);
        out.push_back(std::move(id));
    }
    out.push_back(merge_layer(n));
    return out;
}

} // namespace

Network identity_network(int d) {
    if (d < 1) throw BuildError("identity_network: dimension must be positive");
    Layer split;
    split.W = vstack_pm(Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d)));
    split.b.setZero(2 * d);
    return Network({std::move(split), merge_layer(d)});
}

Network compose(const Network& outer, const Network& inner) {
    if (inner.output_dim() != outer.input_dim()) {
        throw DimensionError("compose: inner outputs " + std::to_string(inner.output_dim()) +
                             " values but outer expects " + std::to_string(outer.input_dim()));
    }
    std::vector<Layer> layers(inner.layers().begin(), inner.layers().end() - 1);

    Layer split;
    split.W = vstack_pm(inner.layers().back().W);
    split.b = vstack_pm(inner.layers().back().b);
    layers.push_back(std::move(split));

    const Layer& first = outer.layers().front();
    Layer join;
    join.W.resize(first.W.rows(), 2 * first.W.cols());
    join.W.leftCols(first.W.cols()) = first.W;
    join.W.rightCols(first.W.cols()) = -first.W;
    join.b = first.b;
    layers.push_back(std::move(join));

    layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
    return Network(std::move(layers));
}

Network compose_chain(const std::vector<Network>& stages) {
    if (stages.empty()) throw BuildError("compose_chain: empty stage list");
    Network result = stages.front();
    for (std::size_t i = 1; i < stages.size(); ++i) {
        result = compose(stages[i], result);
    }
    return result;
}

Network parallelize(const std::vector<Network>& nets) {
    if (nets.empty()) throw BuildError("parallelize: empty network list");
    if (nets.size() == 1) return nets.front();

    int depth = 0;
    for (const Network& n : nets) depth = std::max(depth, n.depth());

    std::vector<std::vector<Layer>> padded;
    padded.reserve(nets.size());
    for (const Network& n : nets) padded.push_back(pad_to_depth(n, depth));

    std::vector<Layer> layers;
    layers.reserve(static_cast<std::size_t>(depth));
    for (int k = 0; k < depth; ++k) {
        Eigen::Index rows = 0, cols = 0;
        for (const auto& p : padded) {
            rows += p[static_cast<std::size_t>(k)].W.rows();
            cols += p[static_cast<std::size_t>(k)].W.cols();
        }
        Layer l;
        l.W.setZero(rows, cols);
        l.b.resize(rows);
        Eigen::Index r0 = 0, c0 = 0;
        for (const auto& p : padded) {
            const Layer& blk = p[static_cast<std::size_t>(k)];
            l.W.block(r0, c0, blk.W.rows(), blk.W.cols()) = blk.W;
            l.b.segment(r0, blk.b.size()) = blk.b;
            r0 += blk.W.rows();
            c0 += blk.W.cols();
        }
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

Network clip_to(const Network& net, const Hypercube& Q) {
    const int n = net.output_dim();
    if (Q.dim != n) {
        throw DimensionError("clip_to: cube dimension " + std::to_string(Q.dim) +
                             " does not match network output " + std::to_string(n));
    }
    if (!(Q.b >= Q.a)) throw ValidationError("clip_to: cube has b < a");

    // Nudge the side length until a + side <= b holds in floating point, so
    // the final addition cannot escape the cube.
    double side = Q.b - Q.a;
    while (Q.a + side > Q.b) side = std::nextafter(side, 0.0);

    std::vector<Layer> layers(net.layers().begin(), net.layers().end());
    Layer& last = layers.back();
    last.W = -last.W;
    last.b = Eigen::VectorXd::Constant(n, Q.b) - last.b;

    Layer mid;
    mid.W = -Eigen::MatrixXd::Identity(n, n);
    mid.b = Eigen::VectorXd::Constant(n, side);
    layers.push_back(std::move(mid));

    Layer out;
    out.W = Eigen::MatrixXd::Identity(n, n);
    out.b = Eigen::VectorXd::Constant(n, Q.a);
    layers.push_back(std::move(out));
    return Network(std::move(layers));
}

Network affine_wrap(const Network& net,
                    const std::optional<AffineMap>& pre,
                    const std::optional<AffineMap>& post) {
    std::vector<Layer> layers(net.layers().begin(), net.layers().end());
    if (pre) {
        if (pre->A.rows() != net.input_dim() || pre->c.size() != net.input_dim()) {
            throw DimensionError("affine_wrap: pre-map produces " + std::to_string(pre->A.rows()) +
                                 " values but network expects " + std::to_string(net.input_dim()));
        }
        Layer& first = layers.front();
        first.b = first.W * pre->c + first.b;
        first.W = first.W * pre->A;
    }
    if (post) {
        if (post->A.cols() != net.output_dim() || post->c.size() != post->A.rows()) {
            throw DimensionError("affine_wrap: post-map expects " + std::to_string(post->A.cols()) +
                                 " values but network outputs " + std::to_string(net.output_dim()));
        }
        Layer& lastl = layers.back();
        lastl.b = post->A * lastl.b + post->c;
        lastl.W = post->A * lastl.W;
    }
    return Network(std::move(layers));
}

std::int64_t compose_param_bound(std::int64_t p_outer, std::int64_t p_inner) {
    return 3 * (p_outer + p_inner);
}

std::int64_t chain_param_bound(const std::vector<Network>& stages) {
    std::int64_t interface = 0, total = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        total += stages[i].param_count();
        if (i > 0) {
            const std::int64_t d = stages[i].input_dim();
            interface += d * (d + 1);
        }
    }
    return 6 * interface + 3 * total;
}

std::int64_t parallel_param_bound_times4(const std::vector<Network>& nets) {
    std::int64_t m = 0, total = 0;
    for (const Network& net : nets) {
        m = std::max<std::int64_t>(m, std::max(net.input_dim(), net.output_dim()));
        total += net.param_count();
    }
    const std::int64_t n = static_cast<std::int64_t>(nets.size());
    return 11 * n * n * m * m * total;
}

} // namespace relu_forge
