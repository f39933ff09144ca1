#pragma once

#include "semigroup/expression.hpp"
#include "semigroup/fields.hpp"
#include "semigroup/linalg.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <string>
#include <vector>

namespace semigroup {

/// An SDE dX = A0(X) dt + A(X) o dB on a manifold M, with A(x): R^m -> T_xM
/// surjective.
///
/// M is either R^n in its global chart or a submanifold of R^N (the sphere),
/// in which case points and tangent vectors are ambient and the normal space
/// is described by tangent_projector. A(x) is N x m. The induced metric is
/// the quotient metric <u, v> = <A* u, A* v> with A* = (A restricted to
/// ker A^perp)^{-1}.
class ExtrinsicSystem {
public:
    virtual ~ExtrinsicSystem() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;  // n
    virtual int ambient_dim() const { return dim(); }
    virtual int noise_dim() const = 0;  // m

    virtual Mat A(const Vec& x) const = 0;
    virtual Vec A0(const Vec& x) const = 0;
    /// Partial derivatives d_k A, one N x m matrix per coordinate k.
    /// Default: central finite differences.
    virtual std::vector<Mat> dA(const Vec& x) const;
    /// Jacobian of A0. Default: central finite differences.
    virtual Mat dA0(const Vec& x) const;

    /// Retraction onto M and its Jacobian, used by the integrator.
    virtual Vec project(const Vec& y) const { return y; }
    virtual Mat projection_jacobian(const Vec&) const { return identity(ambient_dim()); }
    /// Orthogonal projector of R^N onto T_xM and its partial derivatives.
    virtual Mat tangent_projector(const Vec&) const { return identity(ambient_dim()); }
    virtual std::vector<Mat> d_tangent_projector(const Vec& x) const;
    /// Orthonormal basis of the normal space, N x (N - n); empty for R^n.
    virtual Mat normal_basis(const Vec&) const { return Mat(ambient_dim(), 0); }

    /// Whether A0 vanishes identically (skips the drift terms exactly).
    virtual bool driftless() const { return false; }
    /// Whether A is constant, so that A* is constant and the torsion vanishes.
    virtual bool constant_bundle_map() const { return false; }
    /// Declared boundedness of the coefficients entering the extrinsic
    /// true-martingale hypotheses (A, A0, their derivatives, torsion terms).
    virtual bool martingale_bounds_declared() const { return false; }
    virtual Vec base_point() const { return Vec::Zero(ambient_dim()); }

    double surjectivity_tol() const { return surjectivity_tol_; }
    void set_surjectivity_tol(double tol) { surjectivity_tol_ = tol; }

protected:
    double surjectivity_tol_ = 1e-8;
};

/// A = I on R^n with drift A0 = 0, -lambda x or coefficient expressions.
class IdentitySystem final : public ExtrinsicSystem {
public:
    static std::shared_ptr<IdentitySystem> flat(int dim);
    static std::shared_ptr<IdentitySystem> ornstein_uhlenbeck(int dim, double lambda);
    static std::shared_ptr<IdentitySystem> custom(int dim, const std::vector<std::string>& drift);

    IdentitySystem(int dim, int drift_kind, double lambda, ExpressionVector drift);

    std::string name() const override { return "identity"; }
    int dim() const override { return dim_; }
    int noise_dim() const override { return dim_; }
    Mat A(const Vec&) const override { return identity(dim_); }
    Vec A0(const Vec& x) const override;
    std::vector<Mat> dA(const Vec&) const override { return std::vector<Mat>(dim_, Mat::Zero(dim_, dim_)); }
    Mat dA0(const Vec& x) const override;
    std::vector<Mat> d_tangent_projector(const Vec&) const override {
        return std::vector<Mat>(dim_, Mat::Zero(dim_, dim_));
    }
    bool driftless() const override { return kind_ == 0; }
    bool constant_bundle_map() const override { return true; }
    bool martingale_bounds_declared() const override { return kind_ != 2; }

private:
    int dim_;
    int kind_;  // 0 none, 1 OU, 2 expressions
    double lambda_;
    ExpressionVector drift_;
};

/// A = diag(1, c(x)) on R^2 with c(x) = 1 + kappa x1^2 and constant drift A0.
/// Not a gradient system: its Le Jan-Watanabe connection has torsion.
class ScaledDiagonalSystem final : public ExtrinsicSystem {
public:
    explicit ScaledDiagonalSystem(double kappa = 0.25, Vec a0 = Vec::Zero(2));

    std::string name() const override { return "scaled-diagonal"; }
    int dim() const override { return 2; }
    int noise_dim() const override { return 2; }
    Mat A(const Vec& x) const override;
    Vec A0(const Vec&) const override { return a0_; }
    std::vector<Mat> dA(const Vec& x) const override;
    Mat dA0(const Vec&) const override { return Mat::Zero(2, 2); }
    std::vector<Mat> d_tangent_projector(const Vec&) const override {
        return std::vector<Mat>(2, Mat::Zero(2, 2));
    }
    bool driftless() const override { return a0_.isZero(0.0); }
    bool martingale_bounds_declared() const override { return true; }

    double c(const Vec& x) const { return 1.0 + kappa_ * x(0) * x(0); }
    double kappa() const { return kappa_; }

private:
    double kappa_;
    Vec a0_;
};

/// The gradient system of the unit sphere S^n in R^{n+1}: A(x) = I - x x^T,
/// m = n + 1. Optional drift: a rotation (Killing) field omega (-x2, x1, 0, ...).
class SphereProjectionSystem final : public ExtrinsicSystem {
public:
    explicit SphereProjectionSystem(int dim = 2, double rotation = 0.0);

    std::string name() const override { return "sphere-projection"; }
    int dim() const override { return dim_; }
    int ambient_dim() const override { return dim_ + 1; }
    int noise_dim() const override { return dim_ + 1; }
    Mat A(const Vec& x) const override;
    Vec A0(const Vec& x) const override;
    std::vector<Mat> dA(const Vec& x) const override;
    Mat dA0(const Vec& x) const override;
    Vec project(const Vec& y) const override { return y / y.norm(); }
    Mat projection_jacobian(const Vec& y) const override;
    Mat tangent_projector(const Vec& x) const override;
    std::vector<Mat> d_tangent_projector(const Vec& x) const override;
    Mat normal_basis(const Vec& x) const override { return x / x.norm(); }
    bool driftless() const override { return rotation_ == 0.0; }
    bool martingale_bounds_declared() const override { return true; }
    Vec base_point() const override;

private:
    int dim_;
    double rotation_;
};

/// A and A0 on R^n given by coefficient expressions; A row-major N x m.
/// Derivatives are symbolic.
class ExpressionSystem final : public ExtrinsicSystem {
public:
    ExpressionSystem(int dim, int noise_dim, const std::vector<std::string>& a,
                     const std::vector<std::string>& a0, bool bounds_declared = false);

    std::string name() const override { return "custom"; }
    int dim() const override { return dim_; }
    int noise_dim() const override { return m_; }
    Mat A(const Vec& x) const override;
    Vec A0(const Vec& x) const override { return a0_(x); }
    std::vector<Mat> dA(const Vec& x) const override;
    Mat dA0(const Vec& x) const override { return a0_.jacobian(x); }
    std::vector<Mat> d_tangent_projector(const Vec&) const override {
        return std::vector<Mat>(dim_, Mat::Zero(dim_, dim_));
    }
    bool driftless() const override { return driftless_; }
    bool martingale_bounds_declared() const override { return bounds_declared_; }

private:
    int dim_, m_;
    std::vector<ExpressionVector> rows_;  // one per row of A
    ExpressionVector a0_;
    bool driftless_;
    bool bounds_declared_;
};

// ---------------------------------------------------------------------------
// Pointwise geometry

/// All first-order quantities of a system at one point, evaluated once.
struct ExtrinsicFrame {
    Vec x;
    Mat a;                      // N x m
    Vec a0;                     // N
    std::vector<Mat> da;        // d_k A
    Mat da0;                    // N x N
    Mat p;                      // tangent projector
    Mat gram;                   // A A^T + (I - P)
    Eigen::LLT<Mat> gram_llt;
    Mat g;                      // gram^{-1}: induced metric on tangent vectors
    Mat a_star;                 // m x N, A^T gram^{-1}
    std::vector<Mat> d_a_star;  // d_k A*
    double sigma_min = 0.0;

    /// D_v A*, m x N.
    Mat directional_a_star(const Vec& v) const;
    /// Metric adjoint of a tangent endomorphism.
    Mat adjoint(const Mat& m) const;
    double inner(const Vec& u, const Vec& v) const { return u.dot(g * v); }
    int n() const { return static_cast<int>(a.rows()); }
    int m() const { return static_cast<int>(a.cols()); }
};

/// Evaluates the frame; throws DegeneracyError when sigma_min(A) falls below
/// the system's surjectivity tolerance.
ExtrinsicFrame evaluate_frame(const ExtrinsicSystem& sys, const Vec& x);

struct InducedMetric {
    Mat g;
    Mat ginv;
};

Vec a_star(const ExtrinsicSystem& sys, const Vec& x, const Vec& v);
InducedMetric induced_metric(const ExtrinsicSystem& sys, const Vec& x);
/// Smallest singular value of A(x) on the tangent space (inverse power
/// iteration on the Gram matrix).
double sigma_min(const ExtrinsicSystem& sys, const Vec& x);

/// Le Jan-Watanabe covariant derivative A(x) D_v[A* U](x).
Vec ljw_derivative(const ExtrinsicSystem& sys, const Vec& x, const Vec& v, const VectorField& u);
/// Torsion A(x) dA*(v, u).
Vec ljw_torsion(const ExtrinsicSystem& sys, const Vec& x, const Vec& v, const Vec& u);
Vec ljw_torsion(const ExtrinsicFrame& f, const Vec& v, const Vec& u);

/// Matrix of v -> adjoint derivative nabla^_v A0, and its trace.
Mat adjoint_nabla_A0_matrix(const ExtrinsicFrame& f);
Vec adjoint_nabla_A0(const ExtrinsicSystem& sys, const Vec& x, const Vec& v);
double trace_adjoint_nabla_A0(const ExtrinsicSystem& sys, const Vec& x);
double trace_adjoint_nabla_A0(const ExtrinsicFrame& f);

/// W = sum_i T(., A_i)^*(A_i); the contorsion sum is -W.
Vec torsion_contraction(const ExtrinsicFrame& f);
Vec contorsion_sum(const ExtrinsicSystem& sys, const Vec& x);

/// A0^A = sum_i ((nabla^A0)^* + nabla^A0) W + [A0, W].
Vec a0A_field(const ExtrinsicSystem& sys, const Vec& x);
Vec a0A_field(const ExtrinsicSystem& sys, const ExtrinsicFrame& f);

/// delta^ phi = -sum_i A_i(phi(A_i)).
double hat_delta(const ExtrinsicSystem& sys, const OneForm& phi, const Vec& x);
/// delta^ of V-flat, -sum_i A_i <V, A_i>.
double hat_delta_vector(const ExtrinsicSystem& sys, const VectorField& v, const Vec& x);

/// det g at y in an orthonormal (Euclidean) basis of the tangent space; the
/// density correction q_T = p_T rho^{1/2}.
double density_rho(const ExtrinsicSystem& sys, const Vec& y);
/// The same determinant computed as det <A* e_i, A* e_j>.
double density_rho_explicit(const ExtrinsicSystem& sys, const Vec& y);

/// An orthonormal basis of the tangent space at x, N x n.
Mat tangent_basis(const ExtrinsicSystem& sys, const Vec& x);

}  // namespace semigroup
