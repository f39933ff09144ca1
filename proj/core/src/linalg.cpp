#include "semigroup/linalg.hpp"

#include <cmath>

namespace semigroup {

double orthonormality_defect(const Mat& frame) {
    const Mat gram = frame.transpose() * frame;
    return (gram - identity(static_cast<int>(gram.rows()))).cwiseAbs().maxCoeff();
}

Mat polar_factor(const Mat& frame) {
    const int k = static_cast<int>(frame.cols());
    Mat u = frame;
    double defect = orthonormality_defect(u);
    if (defect < 0.5) {
        for (int it = 0; it < 8 && defect > 1e-15; ++it) {
            const Mat gram = u.transpose() * u;
            u = 0.5 * u * (3.0 * identity(k) - gram);
            defect = orthonormality_defect(u);
        }
        if (defect <= 1e-13) return u;
    }
    // U (U^T U)^{-1/2}
    Eigen::SelfAdjointEigenSolver<Mat> eig(frame.transpose() * frame);
    Vec inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    return frame * eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace semigroup
