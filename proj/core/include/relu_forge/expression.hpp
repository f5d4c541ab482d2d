#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relu_forge/interval.hpp"
#include "relu_forge/network.hpp"

namespace relu_forge {

enum class ExprKind {
    literal,
    variable,
    add,
    sub,
    mul,
    divide,
    power,
    negate,
    exp_fn,
    ln_fn,
    cos_fn,
    abs_fn,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprKind kind;
    double value = 0.0; // literal payload
    int var = 0;        // 1-based variable index
    ExprPtr lhs, rhs;
};

ExprPtr make_literal(double v);
ExprPtr make_variable(int index);
ExprPtr make_unary(ExprKind kind, ExprPtr arg);
ExprPtr make_binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs);

// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := number | var | func '(' expr (',' expr)* ')' | '(' expr ')' | '-' factor
//   func   := pow | exp | ln | cos | abs          (pow binary, the rest unary)
//   var    := 'x' digit+                          (1-based)
// Variable indices above max_var are rejected.
ExprPtr parse_expression(const std::string& text, int max_var);

std::string to_string(const ExprPtr& e);

// Pointwise evaluation; throws DomainError on ln(<=0), division by zero, or a
// fractional power of a negative base.  Integer powers of negative bases are
// fine.
double eval_expression(const ExprPtr& e, const Eigen::VectorXd& x);

// Encloses the range of e over the box (one interval per variable).
Interval eval_interval(const ExprPtr& e, const std::vector<Interval>& box);

ExprPtr differentiate(const ExprPtr& e, int var);

std::set<int> variables_of(const ExprPtr& e);

// Replaces x<from> by x<to>.
ExprPtr remap_variable(const ExprPtr& e, int from, int to);

// Upper bound on the Lipschitz constant of e w.r.t. ||.||_p over Q, i.e. on
// sup of the dual q-norm of the gradient, via interval evaluation of the
// partial derivatives over a uniform subdivision of Q.
double lipschitz_upper_bound(const ExprPtr& e, int dim, const Hypercube& Q, double p,
                             int cells_per_axis = 0);

// ---- structure analysis used by the lowering --------------------------------

// e(x) = coef . x + offset.
struct AffineForm {
    Eigen::VectorXd coef;
    double offset = 0.0;
};

// e(x) = outer(coef . x + offset) with outer univariate in x1.
struct RidgeForm {
    AffineForm inner;
    ExprPtr outer;
};

// e(x) = offset + lin . x + sum_j terms[j].second(x_{terms[j].first}) with the
// univariate parts rewritten in x1 and pairwise-distinct variables.
struct SeparableForm {
    double offset = 0.0;
    Eigen::VectorXd lin;
    std::vector<std::pair<int, ExprPtr>> terms;
};

std::optional<AffineForm> as_affine(const ExprPtr& e, int dim);
std::optional<RidgeForm> as_ridge(const ExprPtr& e, int dim);
std::optional<SeparableForm> as_separable(const ExprPtr& e, int dim);

} // namespace relu_forge
