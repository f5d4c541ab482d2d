#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "relu_forge/network.hpp"

namespace relu_forge {

// y = A x + c.
struct AffineMap {
    Eigen::MatrixXd A;
    Eigen::VectorXd c;
};

// Two-layer net computing x on all of R^d via x = relu(x) - relu(-x).
// Architecture (d, 2d, d).
Network identity_network(int d);

// outer(inner(x)).  The output layer of `inner` and the input layer of
// `outer` are joined through the split z -> (relu(z), relu(-z)), so the
// result is again a plain ReLU net.  P <= 3 (P_outer + P_inner).
Network compose(const Network& outer, const Network& inner);

// stages[0] is applied first.  Equivalent to folding compose right-to-left
// over the reversed list; single-element chains are returned unchanged.
Network compose_chain(const std::vector<Network>& stages);

// Block-diagonal parallelization x = (x_1,...,x_n) -> (f_1(x_1),...,f_n(x_n)).
// Shallower nets are first brought to the common depth with identity channels
// (exact in floating point: only sign flips and copies are introduced).
Network parallelize(const std::vector<Network>& nets);

// Composes with the map t -> min(max(t, a), b) applied to every output
// coordinate.  Adds exactly two layers and 2 n (n+1) parameters for n outputs.
// Outputs are guaranteed to land inside [a,b] in floating point.
Network clip_to(const Network& net, const Hypercube& Q);

// post(net(pre(x))).  The affine maps are fused into the first/last layers,
// so depth and hidden widths are unchanged.  Either map may be omitted.
Network affine_wrap(const Network& net,
                    const std::optional<AffineMap>& pre,
                    const std::optional<AffineMap>& post);

// Size bounds tracked by the operations above.
std::int64_t compose_param_bound(std::int64_t p_outer, std::int64_t p_inner);
std::int64_t chain_param_bound(const std::vector<Network>& stages);
// Bound for parallelize, scaled by 4 to stay in integers:
// 4 P(parallelize(nets)) <= 11 n^2 M^2 sum_i P_i with M the largest input or
// output dimension among the nets.
std::int64_t parallel_param_bound_times4(const std::vector<Network>& nets);

} // namespace relu_forge
