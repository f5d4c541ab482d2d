#pragma once

#include <vector>

#include "relu_forge/calculus.hpp"
#include "relu_forge/expression.hpp"
#include "relu_forge/network.hpp"

namespace relu_forge {

// One factor f_i of a parallelized Lipschitz stage: a scalar expression over
// x1..xdim with a declared Lipschitz bound w.r.t. the stage norm.
struct LipschitzBlockSpec {
    int dim = 1;
    ExprPtr expr;
    double lipschitz = 0.0;
};

// Exact componentwise maximum max{x_1,...,x_d} on all of R^d, built as a
// binary tree of pairwise max(a,b) = r(a-b) + r(b) - r(-b) with two-channel
// identity carries for odd values.  P stays within a small constant times d^2.
Network max_net(int d);

// Exact running maximum (max{x_1}, max{x_1,x_2}, ..., max{x_1..x_d}) via
// log2(d) doubling rounds; width <= 3d per round.
Network cummax_net(int d);

// Product xy on [-a,a]^2 within eps, via the polarization
// xy = ((x+y)^2 - x^2 - y^2)/2 with three shared-depth sawtooth squaring
// pipelines.  Architecture (2, 6, 12, ..., 12, 1).
Network mult2_net(double a, double eps);

// Levels of the squaring approximant mult2_net will use for accuracy eps at
// scale a (exposed for size accounting in tests).
int mult2_levels(double a, double eps);

// Product x_1...x_d on [-a,a]^d within eps (a >= 1), as a balanced binary
// tree of mult2_net nodes with per-node accuracy budgets derived from
// interval magnitude bounds.
Network product_net(int d, double a, double eps);

// Product on [-1/8,1/8]^d within eps with Lipschitz constant <= 1 in every
// l_p: inputs are padded to 2^e coordinates with constants 1/8, the padded
// product is built to internal accuracy 8^{-2^{e-1}} eps, and the output is
// rescaled by 8^{2^e-d}.
Network lip1_product_net(int d, double eps);

// All d running products on [-1,1]^d, each within eps_component; doubling
// rounds of mult2 nodes with affine input duplication before each round.
Network cumprod_net(int d, double eps_component);

// Upper bound on the l_p Lipschitz constant of product_net(d, 1, eps) for
// eps <= 0.1, used when such a net appears inside a staged composition.
double product_net_lip_bound(int d, double p);

// Upper bound on the l_p Lipschitz constant of cumprod_net for eps <= 0.1.
double cumprod_net_lip_bound(int d, double p);

// The maximum convolution x -> max_k (f(x_k) - L ||x - x_k||_1) of the block
// expression over a uniform grid on Q with per-axis spacing <= eps/(L dim),
// which makes the approximant eps-close to any function the declared L is
// valid for.  Realized exactly: as a breakpoint synthesis for dim = 1 and as
// a running-max scan over the grid for dim in {2,3}.
Network maxconv_net(const LipschitzBlockSpec& block, const Hypercube& Q, double eps);

// Grid size maxconv_net will use per axis (exposed for size accounting).
int maxconv_grid_per_axis(const LipschitzBlockSpec& block, const Hypercube& Q, double eps);

enum class ParallelKind {
    lipschitz,       // list of expression blocks
    max_partition,   // componentwise maxima over partition parts
    product_lip1,    // products over parts, domain within [-1/8,1/8]
    product_general, // products over parts, domain within [-1,1]
};

// One parallelized stage: splits the accuracy budget eps as eps * n^{-1/p}
// over the n inexact blocks, builds each block with the matching
// constructor, and combines them.  Expression blocks are lowered through the
// cheapest sound route: exact affine nets, a 1-D maximum convolution behind
// an affine change of variables when the expression is a ridge or a sum of
// univariate terms, and the grid scan otherwise (dim <= 3).
Network parallel_block_net(ParallelKind kind,
                           const std::vector<LipschitzBlockSpec>& blocks,
                           const std::vector<int>& partition,
                           const Hypercube& Q, double eps, double p);

// Lowers a single expression block over Q to a network with sup error <= eps
// (zero for affine expressions); p fixes the dual norm used to convert the
// declared Lipschitz bound into a grid constant.
Network lower_block(const LipschitzBlockSpec& block, const Hypercube& Q, double eps, double p);

} // namespace relu_forge
