#include "relu_forge/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>

namespace relu_forge {

namespace {

// Internal node kind for d|u|/dx; not part of the surface grammar.
constexpr ExprKind sign_fn = static_cast<ExprKind>(100);

} // namespace

ExprPtr make_literal(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::literal;
    n->value = v;
    return n;
}

ExprPtr make_variable(int index) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::variable;
    n->var = index;
    return n;
}

ExprPtr make_unary(ExprKind kind, ExprPtr arg) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(arg);
    return n;
}

ExprPtr make_binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

// ---- parser -----------------------------------------------------------------

namespace {

class Parser {
public:
    Parser(const std::string& text, int max_var) : text_(text), max_var_(max_var) {}

    ExprPtr run() {
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        }
        return e;
    }

private:
    const std::string& text_;
    int max_var_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression: " + msg + " at position " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (eat('+')) e = make_binary(ExprKind::add, e, parse_term());
            else if (eat('-')) e = make_binary(ExprKind::sub, e, parse_term());
            else return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (eat('*')) e = make_binary(ExprKind::mul, e, parse_factor());
            else if (eat('/')) e = make_binary(ExprKind::divide, e, parse_factor());
            else return e;
        }
    }

    ExprPtr parse_factor() {
        const char c = peek();
        if (c == '-') {
            ++pos_;
            return make_unary(ExprKind::negate, parse_factor());
        }
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* start = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(start, &end);
            if (end == start) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - start);
            return make_literal(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail(pos_ >= text_.size() ? std::string("unexpected end of input")
                                  : "unexpected character '" + std::string(1, c) + "'");
    }

    ExprPtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name = text_.substr(start, pos_ - start);
        if (name.size() >= 2 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            const long idx = std::strtol(name.c_str() + 1, nullptr, 10);
            if (idx < 1 || idx > max_var_) {
                pos_ = start;
                fail("unknown identifier \"" + name + "\" (variables are x1..x" +
                     std::to_string(max_var_) + ")");
            }
            return make_variable(static_cast<int>(idx));
        }
        ExprKind kind;
        int arity = 1;
        if (name == "pow") { kind = ExprKind::power; arity = 2; }
        else if (name == "exp") kind = ExprKind::exp_fn;
        else if (name == "ln") kind = ExprKind::ln_fn;
        else if (name == "cos") kind = ExprKind::cos_fn;
        else if (name == "abs") kind = ExprKind::abs_fn;
        else {
            pos_ = start;
            fail("unknown identifier \"" + name + "\"");
        }
        if (!eat('(')) fail("expected '(' after \"" + name + "\"");
        ExprPtr first = parse_expr();
        if (arity == 2) {
            if (!eat(',')) fail("\"pow\" takes two arguments");
            ExprPtr second = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return make_binary(kind, first, second);
        }
        if (!eat(')')) fail("expected ')'");
        return make_unary(kind, first);
    }
};

} // namespace

ExprPtr parse_expression(const std::string& text, int max_var) {
    return Parser(text, max_var).run();
}

// ---- printing ---------------------------------------------------------------

std::string to_string(const ExprPtr& e) {
    switch (e->kind) {
        case ExprKind::literal: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", e->value);
            return buf;
        }
        case ExprKind::variable: return "x" + std::to_string(e->var);
        case ExprKind::add: return "(" + to_string(e->lhs) + " + " + to_string(e->rhs) + ")";
        case ExprKind::sub: return "(" + to_string(e->lhs) + " - " + to_string(e->rhs) + ")";
        case ExprKind::mul: return "(" + to_string(e->lhs) + " * " + to_string(e->rhs) + ")";
        case ExprKind::divide: return "(" + to_string(e->lhs) + " / " + to_string(e->rhs) + ")";
        case ExprKind::power:
            return "pow(" + to_string(e->lhs) + ", " + to_string(e->rhs) + ")";
        case ExprKind::negate: return "(-" + to_string(e->lhs) + ")";
        case ExprKind::exp_fn: return "exp(" + to_string(e->lhs) + ")";
        case ExprKind::ln_fn: return "ln(" + to_string(e->lhs) + ")";
        case ExprKind::cos_fn: return "cos(" + to_string(e->lhs) + ")";
        case ExprKind::abs_fn: return "abs(" + to_string(e->lhs) + ")";
        default: return "sign(" + to_string(e->lhs) + ")";
    }
}

// ---- evaluation -------------------------------------------------------------

double eval_expression(const ExprPtr& e, const Eigen::VectorXd& x) {
    switch (e->kind) {
        case ExprKind::literal: return e->value;
        case ExprKind::variable:
            if (e->var > x.size()) {
                throw DimensionError("expression refers to x" + std::to_string(e->var) +
                                     " but the point has " + std::to_string(x.size()) +
                                     " coordinates");
            }
            return x[e->var - 1];
        case ExprKind::add: return eval_expression(e->lhs, x) + eval_expression(e->rhs, x);
        case ExprKind::sub: return eval_expression(e->lhs, x) - eval_expression(e->rhs, x);
        case ExprKind::mul: return eval_expression(e->lhs, x) * eval_expression(e->rhs, x);
        case ExprKind::divide: {
            const double denom = eval_expression(e->rhs, x);
            if (denom == 0.0) throw DomainError("division by zero");
            return eval_expression(e->lhs, x) / denom;
        }
        case ExprKind::power: {
            const double base = eval_expression(e->lhs, x);
            const double expnt = eval_expression(e->rhs, x);
            if (base <= 0.0 && std::rint(expnt) != expnt) {
                if (base == 0.0 && expnt > 0.0) return 0.0;
                throw DomainError("fractional power of a non-positive base");
            }
            return std::pow(base, expnt);
        }
        case ExprKind::negate: return -eval_expression(e->lhs, x);
        case ExprKind::exp_fn: return std::exp(eval_expression(e->lhs, x));
        case ExprKind::ln_fn: {
            const double v = eval_expression(e->lhs, x);
            if (v <= 0.0) throw DomainError("ln of a non-positive value");
            return std::log(v);
        }
        case ExprKind::cos_fn: return std::cos(eval_expression(e->lhs, x));
        case ExprKind::abs_fn: return std::fabs(eval_expression(e->lhs, x));
        default: {
            const double v = eval_expression(e->lhs, x);
            return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
    }
}

Interval eval_interval(const ExprPtr& e, const std::vector<Interval>& box) {
    switch (e->kind) {
        case ExprKind::literal: return Interval::point(e->value);
        case ExprKind::variable:
            if (e->var > static_cast<int>(box.size())) {
                throw DimensionError("expression refers to x" + std::to_string(e->var) +
                                     " but the box has " + std::to_string(box.size()) +
                                     " coordinates");
            }
            return box[static_cast<std::size_t>(e->var - 1)];
        case ExprKind::add: return eval_interval(e->lhs, box) + eval_interval(e->rhs, box);
        case ExprKind::sub: return eval_interval(e->lhs, box) - eval_interval(e->rhs, box);
        case ExprKind::mul: return eval_interval(e->lhs, box) * eval_interval(e->rhs, box);
        case ExprKind::divide: return eval_interval(e->lhs, box) / eval_interval(e->rhs, box);
        case ExprKind::power: {
            if (e->rhs->kind == ExprKind::literal) {
                return ipow(eval_interval(e->lhs, box), e->rhs->value);
            }
            return iexp(eval_interval(e->rhs, box) * iln(eval_interval(e->lhs, box)));
        }
        case ExprKind::negate: return -eval_interval(e->lhs, box);
        case ExprKind::exp_fn: return iexp(eval_interval(e->lhs, box));
        case ExprKind::ln_fn: return iln(eval_interval(e->lhs, box));
        case ExprKind::cos_fn: return icos(eval_interval(e->lhs, box));
        case ExprKind::abs_fn: return iabs(eval_interval(e->lhs, box));
        default: {
            const Interval v = eval_interval(e->lhs, box);
            if (v.lo > 0.0) return Interval::point(1.0);
            if (v.hi < 0.0) return Interval::point(-1.0);
            return {-1.0, 1.0};
        }
    }
}

// ---- differentiation --------------------------------------------------------

ExprPtr differentiate(const ExprPtr& e, int var) {
    switch (e->kind) {
        case ExprKind::literal: return make_literal(0.0);
        case ExprKind::variable: return make_literal(e->var == var ? 1.0 : 0.0);
        case ExprKind::add:
            return make_binary(ExprKind::add, differentiate(e->lhs, var),
                               differentiate(e->rhs, var));
        case ExprKind::sub:
            return make_binary(ExprKind::sub, differentiate(e->lhs, var),
                               differentiate(e->rhs, var));
        case ExprKind::mul:
            return make_binary(
                ExprKind::add,
                make_binary(ExprKind::mul, differentiate(e->lhs, var), e->rhs),
                make_binary(ExprKind::mul, e->lhs, differentiate(e->rhs, var)));
        case ExprKind::divide:
            return make_binary(
                ExprKind::divide,
                make_binary(
                    ExprKind::sub,
                    make_binary(ExprKind::mul, differentiate(e->lhs, var), e->rhs),
                    make_binary(ExprKind::mul, e->lhs, differentiate(e->rhs, var))),
                make_binary(ExprKind::mul, e->rhs, e->rhs));
        case ExprKind::power: {
            if (e->rhs->kind == ExprKind::literal) {
                const double k = e->rhs->value;
                if (k == 0.0) return make_literal(0.0);
                return make_binary(
                    ExprKind::mul,
                    make_binary(ExprKind::mul, make_literal(k),
                                make_binary(ExprKind::power, e->lhs, make_literal(k - 1.0))),
                    differentiate(e->lhs, var));
            }
            // d u^v = u^v (v' ln u + v u'/u); requires u > 0 when evaluated.
            return make_binary(
                ExprKind::mul, e,
                make_binary(
                    ExprKind::add,
                    make_binary(ExprKind::mul, differentiate(e->rhs, var),
                                make_unary(ExprKind::ln_fn, e->lhs)),
                    make_binary(ExprKind::mul, e->rhs,
                                make_binary(ExprKind::divide, differentiate(e->lhs, var),
                                            e->lhs))));
        }
        case ExprKind::negate: return make_unary(ExprKind::negate, differentiate(e->lhs, var));
        case ExprKind::exp_fn:
            return make_binary(ExprKind::mul, e, differentiate(e->lhs, var));
        case ExprKind::ln_fn:
            return make_binary(ExprKind::divide, differentiate(e->lhs, var), e->lhs);
        case ExprKind::cos_fn:
            // -sin(u) = cos(u + pi/2).
            return make_binary(
                ExprKind::mul,
                make_unary(ExprKind::cos_fn,
                           make_binary(ExprKind::add, e->lhs,
                                       make_literal(std::numbers::pi / 2.0))),
                differentiate(e->lhs, var));
        case ExprKind::abs_fn:
            return make_binary(ExprKind::mul, make_unary(sign_fn, e->lhs),
                               differentiate(e->lhs, var));
        default: // sign: piecewise constant
            return make_literal(0.0);
    }
}

// ---- variable utilities -----------------------------------------------------

namespace {

void collect_vars(const ExprPtr& e, std::set<int>& out) {
    if (e->kind == ExprKind::variable) out.insert(e->var);
    if (e->lhs) collect_vars(e->lhs, out);
    if (e->rhs) collect_vars(e->rhs, out);
}

} // namespace

std::set<int> variables_of(const ExprPtr& e) {
    std::set<int> out;
    collect_vars(e, out);
    return out;
}

ExprPtr remap_variable(const ExprPtr& e, int from, int to) {
    if (e->kind == ExprKind::variable) {
        return e->var == from ? make_variable(to) : e;
    }
    if (!e->lhs) return e;
    ExprPtr lhs = remap_variable(e->lhs, from, to);
    if (e->rhs) {
        ExprPtr rhs = remap_variable(e->rhs, from, to);
        if (lhs == e->lhs && rhs == e->rhs) return e;
        auto n = std::make_shared<ExprNode>(*e);
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }
    if (lhs == e->lhs) return e;
    auto n = std::make_shared<ExprNode>(*e);
    n->lhs = std::move(lhs);
    return n;
}

// ---- Lipschitz bound --------------------------------------------------------

double lipschitz_upper_bound(const ExprPtr& e, int dim, const Hypercube& Q, double p,
                             int cells_per_axis) {
    if (cells_per_axis <= 0) {
        cells_per_axis = dim == 1 ? 1024 : (dim == 2 ? 512 : (dim == 3 ? 20 : 6));
    }
    std::vector<ExprPtr> partials;
    partials.reserve(static_cast<std::size_t>(dim));
    for (int j = 1; j <= dim; ++j) partials.push_back(differentiate(e, j));

    const double h = (Q.b - Q.a) / cells_per_axis;
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    std::vector<Interval> box(static_cast<std::size_t>(dim));
    std::vector<double> bound(static_cast<std::size_t>(dim));
    double worst = 0.0;
    for (;;) {
        for (int j = 0; j < dim; ++j) {
            const double lo = Q.a + idx[static_cast<std::size_t>(j)] * h;
            box[static_cast<std::size_t>(j)] = widen(lo, lo + h);
        }
        for (int j = 0; j < dim; ++j) {
            bound[static_cast<std::size_t>(j)] =
                eval_interval(partials[static_cast<std::size_t>(j)], box).mag();
        }
        double cell;
        if (p == 1.0) {
            cell = *std::max_element(bound.begin(), bound.end());
        } else if (std::isinf(p)) {
            cell = 0.0;
            for (double b : bound) cell += b;
        } else {
            const double q = p / (p - 1.0);
            cell = 0.0;
            for (double b : bound) cell += std::pow(b, q);
            cell = std::pow(cell, 1.0 / q);
        }
        worst = std::max(worst, cell);

        int j = 0;
        while (j < dim && ++idx[static_cast<std::size_t>(j)] == cells_per_axis) {
            idx[static_cast<std::size_t>(j)] = 0;
            ++j;
        }
        if (j == dim) break;
    }
    return worst;
}

// ---- structure analysis -----------------------------------------------------

namespace {

bool is_const(const AffineForm& a) { return a.coef.isZero(0.0); }

std::optional<double> const_of(const ExprPtr& e, int dim) {
    auto a = as_affine(e, dim);
    if (a && is_const(*a)) return a->offset;
    return std::nullopt;
}

} // namespace

std::optional<AffineForm> as_affine(const ExprPtr& e, int dim) {
    const auto none = std::nullopt;
    switch (e->kind) {
        case ExprKind::literal:
            return AffineForm{Eigen::VectorXd::Zero(dim), e->value};
        case ExprKind::variable: {
            if (e->var > dim) return none;
            AffineForm a{Eigen::VectorXd::Zero(dim), 0.0};
            a.coef[e->var - 1] = 1.0;
            return a;
        }
        case ExprKind::add:
        case ExprKind::sub: {
            auto l = as_affine(e->lhs, dim);
            auto r = as_affine(e->rhs, dim);
            if (!l || !r) return none;
            const double s = e->kind == ExprKind::add ? 1.0 : -1.0;
            return AffineForm{l->coef + s * r->coef, l->offset + s * r->offset};
        }
        case ExprKind::mul: {
            auto l = as_affine(e->lhs, dim);
            auto r = as_affine(e->rhs, dim);
            if (!l || !r) return none;
            if (is_const(*l)) return AffineForm{l->offset * r->coef, l->offset * r->offset};
            if (is_const(*r)) return AffineForm{r->offset * l->coef, r->offset * l->offset};
            return none;
        }
        case ExprKind::divide: {
            auto l = as_affine(e->lhs, dim);
            auto r = as_affine(e->rhs, dim);
            if (!l || !r || !is_const(*r) || r->offset == 0.0) return none;
            return AffineForm{l->coef / r->offset, l->offset / r->offset};
        }
        case ExprKind::power: {
            if (e->rhs->kind != ExprKind::literal) return none;
            const double k = e->rhs->value;
            if (k == 0.0) return AffineForm{Eigen::VectorXd::Zero(dim), 1.0};
            auto l = as_affine(e->lhs, dim);
            if (!l) return none;
            if (k == 1.0) return l;
            if (is_const(*l)) {
                const double v = std::pow(l->offset, k);
                if (!std::isfinite(v)) return none;
                return AffineForm{Eigen::VectorXd::Zero(dim), v};
            }
            return none;
        }
        case ExprKind::negate: {
            auto l = as_affine(e->lhs, dim);
            if (!l) return none;
            return AffineForm{-l->coef, -l->offset};
        }
        default: {
            // Unary functions fold only over constants.
            auto l = as_affine(e->lhs, dim);
            if (!l || !is_const(*l)) return none;
            double v;
            switch (e->kind) {
                case ExprKind::exp_fn: v = std::exp(l->offset); break;
                case ExprKind::ln_fn:
                    if (l->offset <= 0.0) return none;
                    v = std::log(l->offset);
                    break;
                case ExprKind::cos_fn: v = std::cos(l->offset); break;
                case ExprKind::abs_fn: v = std::fabs(l->offset); break;
                default:
                    v = l->offset > 0.0 ? 1.0 : (l->offset < 0.0 ? -1.0 : 0.0);
                    break;
            }
            if (!std::isfinite(v)) return none;
            return AffineForm{Eigen::VectorXd::Zero(dim), v};
        }
    }
}

std::optional<RidgeForm> as_ridge(const ExprPtr& e, int dim) {
    if (auto a = as_affine(e, dim)) {
        return RidgeForm{*a, make_variable(1)};
    }
    switch (e->kind) {
        case ExprKind::negate:
        case ExprKind::exp_fn:
        case ExprKind::ln_fn:
        case ExprKind::cos_fn:
        case ExprKind::abs_fn: {
            auto r = as_ridge(e->lhs, dim);
            if (!r) return std::nullopt;
            return RidgeForm{r->inner, make_unary(e->kind, r->outer)};
        }
        case ExprKind::power: {
            if (e->rhs->kind == ExprKind::literal) {
                auto r = as_ridge(e->lhs, dim);
                if (!r) return std::nullopt;
                return RidgeForm{r->inner,
                                 make_binary(ExprKind::power, r->outer, e->rhs)};
            }
            if (auto base = const_of(e->lhs, dim)) {
                auto r = as_ridge(e->rhs, dim);
                if (!r) return std::nullopt;
                return RidgeForm{r->inner, make_binary(ExprKind::power,
                                                       make_literal(*base), r->outer)};
            }
            return std::nullopt;
        }
        case ExprKind::add:
        case ExprKind::sub:
        case ExprKind::mul:
        case ExprKind::divide: {
            if (auto rc = const_of(e->rhs, dim)) {
                auto r = as_ridge(e->lhs, dim);
                if (!r) return std::nullopt;
                return RidgeForm{r->inner,
                                 make_binary(e->kind, r->outer, make_literal(*rc))};
            }
            if (auto lc = const_of(e->lhs, dim)) {
                auto r = as_ridge(e->rhs, dim);
                if (!r) return std::nullopt;
                return RidgeForm{r->inner,
                                 make_binary(e->kind, make_literal(*lc), r->outer)};
            }
            return std::nullopt;
        }
        default:
            return std::nullopt;
    }
}

namespace {

void flatten_sum(const ExprPtr& e, double sign, std::vector<std::pair<double, ExprPtr>>& out) {
    switch (e->kind) {
        case ExprKind::add:
            flatten_sum(e->lhs, sign, out);
            flatten_sum(e->rhs, sign, out);
            return;
        case ExprKind::sub:
            flatten_sum(e->lhs, sign, out);
            flatten_sum(e->rhs, -sign, out);
            return;
        case ExprKind::negate:
            flatten_sum(e->lhs, -sign, out);
            return;
        default:
            out.emplace_back(sign, e);
    }
}

} // namespace

std::optional<SeparableForm> as_separable(const ExprPtr& e, int dim) {
    std::vector<std::pair<double, ExprPtr>> parts;
    flatten_sum(e, 1.0, parts);

    SeparableForm form;
    form.lin = Eigen::VectorXd::Zero(dim);
    std::map<int, ExprPtr> grouped;
    for (const auto& [sign, part] : parts) {
        if (auto a = as_affine(part, dim)) {
            form.lin += sign * a->coef;
            form.offset += sign * a->offset;
            continue;
        }
        const std::set<int> vars = variables_of(part);
        if (vars.size() != 1) return std::nullopt;
        const int v = *vars.begin();
        if (v > dim) return std::nullopt;
        ExprPtr one_d = remap_variable(part, v, 1);
        if (sign < 0) one_d = make_unary(ExprKind::negate, one_d);
        auto it = grouped.find(v);
        if (it == grouped.end()) grouped.emplace(v, std::move(one_d));
        else it->second = make_binary(ExprKind::add, it->second, one_d);
    }
    form.terms.assign(grouped.begin(), grouped.end());
    return form;
}

} // namespace relu_forge
