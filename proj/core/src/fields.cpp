#include "semigroup/fields.hpp"

namespace semigroup {

Mat field_jacobian(const VectorField& field, const Vec& x) {
    if (field.jacobian) return field.jacobian(x);
    const Vec v0 = field(x);
    Mat j(v0.size(), x.size());
    const double h = fd_step(x);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Vec e = Vec::Zero(x.size());
        e(k) = h;
        j.col(k) = (field(x + e) - field(x - e)) / (2.0 * h);
    }
    return j;
}

VectorField constant_field(const Vec& value) {
    const Eigen::Index n = value.size();
    return {[value](const Vec&) { return value; },
            [n](const Vec& x) { return Mat(Mat::Zero(n, x.size())); }};
}

VectorField linear_field(const Mat& matrix) {
    return {[matrix](const Vec& x) { return Vec(matrix * x); },
            [matrix](const Vec&) { return matrix; }};
}

}  // namespace semigroup
