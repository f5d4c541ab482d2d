#include "relu_forge/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relu_forge {

bool Hypercube::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != dim) return false;
    for (int i = 0; i < dim; ++i) {
        if (x[i] < a - tol || x[i] > b + tol) return false;
    }
    return true;
}

Eigen::VectorXd Hypercube::center() const {
    return Eigen::VectorXd::Constant(dim, a + 0.5 * (b - a));
}

void validate_network(const std::vector<Layer>& layers) {
    if (layers.empty()) {
        throw ValidationError("network must have at least one layer");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        const std::string where = "layer " + std::to_string(i);
        if (l.W.rows() == 0 || l.W.cols() == 0) {
            throw DimensionError(where + ": empty weight matrix");
        }
        if (l.b.size() != l.W.rows()) {
            throw DimensionError(where + ": bias length " + std::to_string(l.b.size()) +
                                 " does not match weight rows " + std::to_string(l.W.rows()));
        }
        if (i > 0 && l.W.cols() != layers[i - 1].W.rows()) {
            throw DimensionError(where + ": expects input of size " + std::to_string(l.W.cols()) +
                                 " but previous layer outputs " +
                                 std::to_string(layers[i - 1].W.rows()));
        }
        if (!l.W.allFinite() || !l.b.allFinite()) {
            throw ValidationError(where + ": non-finite weight or bias entry");
        }
    }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    validate_network(layers_);
}

int Network::input_dim() const {
    return static_cast<int>(layers_.front().W.cols());
}

int Network::output_dim() const {
    return static_cast<int>(layers_.back().W.rows());
}

std::vector<int> Network::architecture() const {
    std::vector<int> arch;
    arch.reserve(layers_.size() + 1);
    arch.push_back(input_dim());
    for (const Layer& l : layers_) arch.push_back(static_cast<int>(l.W.rows()));
    return arch;
}

std::int64_t Network::param_count() const {
    std::int64_t n = 0;
    for (const Layer& l : layers_) {
        n += static_cast<std::int64_t>(l.W.rows()) * static_cast<std::int64_t>(l.W.cols());
        n += static_cast<std::int64_t>(l.b.size());
    }
    return n;
}

Eigen::VectorXd Network::evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim()) {
        throw DimensionError("evaluate: input has size " + std::to_string(x.size()) +
                             ", network expects " + std::to_string(input_dim()));
    }
    Eigen::VectorXd z = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        z = (layers_[i].W * z + layers_[i].b).eval();
        if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    }
    return z;
}

Eigen::MatrixXd Network::evaluate_batch(const Eigen::MatrixXd& X) const {
    if (X.rows() != input_dim()) {
        throw DimensionError("evaluate_batch: input has " + std::to_string(X.rows()) +
                             " rows, network expects " + std::to_string(input_dim()));
    }
    // Slice the batch so the widest intermediate stays a few MB even for nets
    // with very wide hidden layers (grid envelopes can reach 10^5+ units).
    Eigen::Index maxw = input_dim();
    for (const Layer& l : layers_) maxw = std::max(maxw, l.W.rows());
    constexpr Eigen::Index kScratchDoubles = Eigen::Index{1} << 22;
    const Eigen::Index slice =
        std::clamp(kScratchDoubles / std::max<Eigen::Index>(maxw, 1),
                   Eigen::Index{1}, std::max<Eigen::Index>(X.cols(), 1));

    Eigen::MatrixXd out(output_dim(), X.cols());
    for (Eigen::Index at = 0; at < X.cols(); at += slice) {
        const Eigen::Index n = std::min(slice, X.cols() - at);
        Eigen::MatrixXd Z = X.middleCols(at, n);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Eigen::MatrixXd next = layers_[i].W * Z;
            next.colwise() += layers_[i].b;
            if (i + 1 < layers_.size()) next = next.cwiseMax(0.0);
            Z = std::move(next);
        }
        out.middleCols(at, n) = Z;
    }
    return out;
}

std::int64_t param_count_of(const std::vector<int>& arch) {
    std::int64_t n = 0;
    for (std::size_t i = 1; i < arch.size(); ++i) {
        n += static_cast<std::int64_t>(arch[i]) * (static_cast<std::int64_t>(arch[i - 1]) + 1);
    }
    return n;
}

} // namespace relu_forge
