#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace semigroup {

// Every dimension in the library (manifold, ambient and noise) is bounded by
// kMaxDim so that vectors and matrices live on the stack in the inner loops.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Christoffel symbols Gamma^k_{ij} stored as one n x n matrix per upper index k.
using Christoffel = std::vector<Mat>;

inline Mat identity(int n) { return Mat::Identity(n, n); }

inline Vec make_vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double value : values) v(i++) = value;
    return v;
}

inline Vec to_vec(const std::vector<double>& values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
    return v;
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// Closest matrix with orthonormal columns (the orthogonal polar factor).
///
/// Newton-Schulz iteration; the inputs seen during path simulation are within
/// O(dt) of orthonormal, where it converges quadratically. Falls back to an
/// eigen-decomposition of the Gram matrix when the input is far from
/// orthonormal.
Mat polar_factor(const Mat& frame);

/// Infinity norm of F^T F - I.
double orthonormality_defect(const Mat& frame);

}  // namespace semigroup
