#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "relu_forge/errors.hpp"

namespace relu_forge {

// Axis-aligned cube [a,b]^dim used as the domain of every construction.
struct Hypercube {
    double a = 0.0;
    double b = 1.0;
    int dim = 1;

    double side() const { return b - a; }
    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
    Eigen::VectorXd center() const;
};

// One affine layer y = W x + b.
struct Layer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

// A feedforward ReLU network: a list of affine layers with the ReLU applied
// between consecutive layers and *not* after the last one.  A single-layer
// network is therefore a plain affine map.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    int depth() const { return static_cast<int>(layers_.size()); }
    int input_dim() const;
    int output_dim() const;

    // [input_dim, width_1, ..., width_L]; width_L == output_dim.
    std::vector<int> architecture() const;

    // Dense parameter count: every weight and bias entry counts, zeros included.
    std::int64_t param_count() const;

    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(int i) const { return layers_.at(static_cast<std::size_t>(i)); }

    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

    // Column-batched evaluation: X is input_dim x N, result is output_dim x N.
    Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& X) const;

private:
    std::vector<Layer> layers_;
};

// Throws DimensionError / ValidationError naming the first offending layer.
void validate_network(const std::vector<Layer>& layers);

// Parameter count of an architecture [l_0, ..., l_L] without building the net.
std::int64_t param_count_of(const std::vector<int>& arch);

} // namespace relu_forge
