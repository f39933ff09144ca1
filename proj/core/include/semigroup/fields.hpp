#pragma once

#include "semigroup/linalg.hpp"

#include <functional>

namespace semigroup {

/// Point-evaluable scalar function. Estimators that must not differentiate f
/// take this type, which carries no derivative.
using ScalarFunction = std::function<double(const Vec&)>;

/// Vector field handle, evaluated in the coordinates points live in. The
/// Jacobian J(i, k) = d V^i / d x_k is optional; without it derivatives are
/// taken by central differences.
struct VectorField {
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;

    Vec operator()(const Vec& x) const { return value(x); }
    bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// 1-form handle: returns the covector components at a point, so that
/// phi(x)(u) = phi(x).dot(u).
struct OneForm {
    std::function<Vec(const Vec&)> value;
    std::function<Mat(const Vec&)> jacobian;

    Vec operator()(const Vec& x) const { return value(x); }
};

/// Relative step for central differences.
inline constexpr double kFiniteDifferenceStep = 1e-5;

inline double fd_step(const Vec& x) { return kFiniteDifferenceStep * std::max(1.0, x.norm()); }

/// Central-difference directional derivative of a vector-valued function.
template <class F>
auto directional_derivative(const F& f, const Vec& x, const Vec& direction) {
    const double dn = direction.norm();
    if (dn == 0.0) return decltype(f(x))(f(x) * 0.0);
    const double h = fd_step(x) / dn;
    return decltype(f(x))((f(x + h * direction) - f(x - h * direction)) / (2.0 * h));
}

/// Central-difference directional derivative of a scalar function.
template <class F>
double directional_derivative_scalar(const F& f, const Vec& x, const Vec& direction) {
    const double dn = direction.norm();
    if (dn == 0.0) return 0.0;
    const double h = fd_step(x) / dn;
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h);
}

/// Jacobian of a vector field, analytic when available.
Mat field_jacobian(const VectorField& field, const Vec& x);

/// Convenience constructors.
VectorField constant_field(const Vec& value);
VectorField linear_field(const Mat& matrix);  // V(x) = M x

}  // namespace semigroup
