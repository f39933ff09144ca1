#pragma once

#include "semigroup/linalg.hpp"

#include <memory>
#include <string>
#include <vector>

namespace semigroup {

namespace detail {
struct ExprNode;
}

/// Scalar arithmetic expression over point coordinates.
///
/// Grammar: numbers, the variables x1..xN (x, y, z alias x1, x2, x3), binary
/// + - * / ^, unary minus, parentheses and the functions pow(a, b), exp, log,
/// sin, cos. Expressions are differentiated symbolically, so fields built from
/// them carry analytic Jacobians.
class Expression {
public:
    Expression();  // the constant 0

    /// Throws ConfigError with the offending position on a syntax error or on
    /// a variable index above `dim`.
    static Expression parse(const std::string& text, int dim);
    static Expression constant(double value);

    double operator()(const Vec& x) const;
    Expression derivative(int variable) const;  // zero-based coordinate index
    bool is_constant() const;
    std::string str() const;

private:
    explicit Expression(std::shared_ptr<const detail::ExprNode> node);
    std::shared_ptr<const detail::ExprNode> node_;
};

/// A vector of expressions with its symbolic Jacobian.
class ExpressionVector {
public:
    ExpressionVector() = default;
    ExpressionVector(const std::vector<std::string>& components, int dim);

    int size() const { return static_cast<int>(components_.size()); }
    Vec operator()(const Vec& x) const;
    /// J(i, k) = d component_i / d x_k.
    Mat jacobian(const Vec& x) const;

private:
    std::vector<Expression> components_;
    std::vector<std::vector<Expression>> partials_;
};

}  // namespace semigroup
