#include "semigroup/extrinsic.hpp"

#include "semigroup/errors.hpp"

#include <cmath>

namespace semigroup {

namespace {

Vec unit(int n, int k) {
    Vec e = Vec::Zero(n);
    e(k) = 1.0;
    return e;
}

void check_dim(int n, const char* what) {
    if (n < 1 || n > kMaxDim)
        throw ConfigError(std::string(what) + " must be in [1, " + std::to_string(kMaxDim) + "]");
}

}  // namespace

// ---------------------------------------------------------------------------
// ExtrinsicSystem defaults

std::vector<Mat> ExtrinsicSystem::dA(const Vec& x) const {
    const int n = ambient_dim();
    const double h = fd_step(x);
    std::vector<Mat> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) out.push_back((A(x + h * unit(n, k)) - A(x - h * unit(n, k))) / (2.0 * h));
    return out;
}

Mat ExtrinsicSystem::dA0(const Vec& x) const {
    const int n = ambient_dim();
    const double h = fd_step(x);
    Mat j(n, n);
    for (int k = 0; k < n; ++k) j.col(k) = (A0(x + h * unit(n, k)) - A0(x - h * unit(n, k))) / (2.0 * h);
    return j;
}

std::vector<Mat> ExtrinsicSystem::d_tangent_projector(const Vec& x) const {
    const int n = ambient_dim();
    const double h = fd_step(x);
    std::vector<Mat> out;
    for (int k = 0; k < n; ++k)
        out.push_back((tangent_projector(x + h * unit(n, k)) - tangent_projector(x - h * unit(n, k))) / (2.0 * h));
    return out;
}

// ---------------------------------------------------------------------------
// IdentitySystem

std::shared_ptr<IdentitySystem> IdentitySystem::flat(int dim) {
    return std::make_shared<IdentitySystem>(dim, 0, 0.0, ExpressionVector{});
}

std::shared_ptr<IdentitySystem> IdentitySystem::ornstein_uhlenbeck(int dim, double lambda) {
    return std::make_shared<IdentitySystem>(dim, 1, lambda, ExpressionVector{});
}

std::shared_ptr<IdentitySystem> IdentitySystem::custom(int dim, const std::vector<std::string>& drift) {
    if (static_cast<int>(drift.size()) != dim)
        throw ConfigError("drift needs " + std::to_string(dim) + " components, got " + std::to_string(drift.size()));
    return std::make_shared<IdentitySystem>(dim, 2, 0.0, ExpressionVector(drift, dim));
}

IdentitySystem::IdentitySystem(int dim, int drift_kind, double lambda, ExpressionVector drift)
    : dim_(dim), kind_(drift_kind), lambda_(lambda), drift_(std::move(drift)) {
    check_dim(dim, "identity system dimension");
}

Vec IdentitySystem::A0(const Vec& x) const {
    if (kind_ == 1) return -lambda_ * x;
    if (kind_ == 2) return drift_(x);
    return Vec::Zero(dim_);
}

Mat IdentitySystem::dA0(const Vec& x) const {
    if (kind_ == 1) return -lambda_ * identity(dim_);
    if (kind_ == 2) return drift_.jacobian(x);
    return Mat::Zero(dim_, dim_);
}

// ---------------------------------------------------------------------------
// ScaledDiagonalSystem

ScaledDiagonalSystem::ScaledDiagonalSystem(double kappa, Vec a0) : kappa_(kappa), a0_(std::move(a0)) {
    if (!(kappa >= 0.0)) throw ConfigError("scaled-diagonal kappa must be non-negative");
    if (a0_.size() != 2) throw ConfigError("scaled-diagonal A0 must have 2 components");
}

Mat ScaledDiagonalSystem::A(const Vec& x) const {
    Mat a = identity(2);
    a(1, 1) = c(x);
    return a;
}

std::vector<Mat> ScaledDiagonalSystem::dA(const Vec& x) const {
    std::vector<Mat> d(2, Mat::Zero(2, 2));
    d[0](1, 1) = 2.0 * kappa_ * x(0);
    return d;
}

// ---------------------------------------------------------------------------
// SphereProjectionSystem

SphereProjectionSystem::SphereProjectionSystem(int dim, double rotation) : dim_(dim), rotation_(rotation) {
    check_dim(dim + 1, "sphere ambient dimension");
    if (rotation != 0.0 && dim < 1) throw ConfigError("rotation needs a sphere of dimension >= 1");
}

Mat SphereProjectionSystem::A(const Vec& x) const { return identity(dim_ + 1) - x * x.transpose(); }

Vec SphereProjectionSystem::A0(const Vec& x) const {
    Vec v = Vec::Zero(dim_ + 1);
    if (rotation_ != 0.0) {
        v(0) = -rotation_ * x(1);
        v(1) = rotation_ * x(0);
    }
    return v;
}

std::vector<Mat> SphereProjectionSystem::dA(const Vec& x) const {
    const int n = dim_ + 1;
    std::vector<Mat> d;
    d.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Vec e = unit(n, k);
        d.push_back(-(e * x.transpose() + x * e.transpose()));
    }
    return d;
}

Mat SphereProjectionSystem::dA0(const Vec&) const {
    Mat j = Mat::Zero(dim_ + 1, dim_ + 1);
    j(0, 1) = -rotation_;
    j(1, 0) = rotation_;
    return j;
}

Mat SphereProjectionSystem::projection_jacobian(const Vec& y) const {
    const double r = y.norm();
    const Vec u = y / r;
    return (identity(dim_ + 1) - u * u.transpose()) / r;
}

Mat SphereProjectionSystem::tangent_projector(const Vec& x) const {
    return identity(dim_ + 1) - x * x.transpose() / x.squaredNorm();
}

std::vector<Mat> SphereProjectionSystem::d_tangent_projector(const Vec& x) const {
    const int n = dim_ + 1;
    const double s = x.squaredNorm();
    std::vector<Mat> d;
    d.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Vec e = unit(n, k);
        d.push_back(-((e * x.transpose() + x * e.transpose()) / s - 2.0 * x(k) * x * x.transpose() / (s * s)));
    }
    return d;
}

Vec SphereProjectionSystem::base_point() const {
    Vec x = Vec::Zero(dim_ + 1);
    x(dim_) = 1.0;
    return x;
}

// ---------------------------------------------------------------------------
// ExpressionSystem

ExpressionSystem::ExpressionSystem(int dim, int noise_dim, const std::vector<std::string>& a,
                                   const std::vector<std::string>& a0, bool bounds_declared)
    : dim_(dim), m_(noise_dim), bounds_declared_(bounds_declared) {
    check_dim(dim, "system dimension");
    check_dim(noise_dim, "noise dimension");
    if (noise_dim < dim) throw ConfigError("noise dimension m must be at least n");
    if (static_cast<int>(a.size()) != dim * noise_dim)
        throw ConfigError("A needs n*m = " + std::to_string(dim * noise_dim) + " entries (row-major), got " +
                          std::to_string(a.size()));
    if (static_cast<int>(a0.size()) != dim)
        throw ConfigError("A0 needs " + std::to_string(dim) + " entries, got " + std::to_string(a0.size()));
    for (int r = 0; r < dim; ++r)
        rows_.emplace_back(std::vector<std::string>(a.begin() + r * noise_dim, a.begin() + (r + 1) * noise_dim), dim);
    a0_ = ExpressionVector(a0, dim);
    driftless_ = true;
    for (const auto& text : a0) {
        const Expression e = Expression::parse(text, dim);
        if (!e.is_constant() || e(Vec::Zero(dim)) != 0.0) driftless_ = false;
    }
}

Mat ExpressionSystem::A(const Vec& x) const {
    Mat a(dim_, m_);
    for (int r = 0; r < dim_; ++r) a.row(r) = rows_[r](x).transpose();
    return a;
}

std::vector<Mat> ExpressionSystem::dA(const Vec& x) const {
    std::vector<Mat> d(dim_, Mat::Zero(dim_, m_));
    for (int r = 0; r < dim_; ++r) {
        const Mat j = rows_[r].jacobian(x);  // m x n
        for (int k = 0; k < dim_; ++k) d[k].row(r) = j.col(k).transpose();
    }
    return d;
}

// ---------------------------------------------------------------------------
// Frames

Mat ExtrinsicFrame::directional_a_star(const Vec& v) const {
    Mat out = Mat::Zero(a_star.rows(), a_star.cols());
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (v(k) != 0.0) out += v(k) * d_a_star[k];
    return out;
}

Mat ExtrinsicFrame::adjoint(const Mat& m) const { return p * gram * (m * p).transpose() * g * p; }

namespace {

double inverse_power_sigma(const Mat& gram, const Eigen::LLT<Mat>& llt) {
    const Eigen::Index n = gram.rows();
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
    v.normalize();
    for (int it = 0; it < 6; ++it) {
        Vec w = llt.solve(v);
        const double norm = w.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) return 0.0;
        v = w / norm;
    }
    const double lambda = v.dot(gram * v);
    return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace

ExtrinsicFrame evaluate_frame(const ExtrinsicSystem& sys, const Vec& x) {
    ExtrinsicFrame f;
    const int n = sys.ambient_dim();
    f.x = x;
    f.a = sys.A(x);
    f.a0 = sys.A0(x);
    f.da = sys.dA(x);
    f.da0 = sys.driftless() ? Mat(Mat::Zero(n, n)) : sys.dA0(x);
    f.p = sys.tangent_projector(x);
    f.gram = f.a * f.a.transpose() + (identity(n) - f.p);
    f.gram_llt.compute(f.gram);
    if (f.gram_llt.info() != Eigen::Success || !f.gram.allFinite()) throw DegeneracyError(0.0);
    f.sigma_min = inverse_power_sigma(f.gram, f.gram_llt);
    if (!(f.sigma_min > sys.surjectivity_tol())) throw DegeneracyError(f.sigma_min);
    f.g = f.gram_llt.solve(identity(n));
    f.a_star = f.a.transpose() * f.g;
    const std::vector<Mat> dp = sys.d_tangent_projector(x);
    f.d_a_star.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Mat dgram = f.da[k] * f.a.transpose() + f.a * f.da[k].transpose() - dp[k];
        f.d_a_star.push_back(f.da[k].transpose() * f.g - f.a_star * dgram * f.g);
    }
    return f;
}

Vec a_star(const ExtrinsicSystem& sys, const Vec& x, const Vec& v) { return evaluate_frame(sys, x).a_star * v; }

InducedMetric induced_metric(const ExtrinsicSystem& sys, const Vec& x) {
    const ExtrinsicFrame f = evaluate_frame(sys, x);
    return {f.g, f.gram};
}

double sigma_min(const ExtrinsicSystem& sys, const Vec& x) {
    const int n = sys.ambient_dim();
    const Mat a = sys.A(x);
    const Mat gram = a * a.transpose() + (identity(n) - sys.tangent_projector(x));
    const Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(eig.eigenvalues()(0), 0.0));
}

Vec ljw_derivative(const ExtrinsicSystem& sys, const Vec& x, const Vec& v, const VectorField& u) {
    const ExtrinsicFrame f = evaluate_frame(sys, x);
    const Vec du = u.has_jacobian() ? Vec(u.jacobian(x) * v) : Vec(directional_derivative(u.value, x, v));
    return f.a * (f.directional_a_star(v) * u(x) + f.a_star * du);
}

Vec ljw_torsion(const ExtrinsicFrame& f, const Vec& v, const Vec& u) {
    return f.a * (f.directional_a_star(v) * u - f.directional_a_star(u) * v);
}

Vec ljw_torsion(const ExtrinsicSystem& sys, const Vec& x, const Vec& v, const Vec& u) {
    return ljw_torsion(evaluate_frame(sys, x), v, u);
}

Mat adjoint_nabla_A0_matrix(const ExtrinsicFrame& f) {
    // nabla^_v A0 = A (D_v[A* A0] - dA*(v, A0)) = A (A* DA0 v + (D_{A0} A*) v)
    return f.a * (f.a_star * f.da0 + f.directional_a_star(f.a0)) * f.p;
}

Vec adjoint_nabla_A0(const ExtrinsicSystem& sys, const Vec& x, const Vec& v) {
    return adjoint_nabla_A0_matrix(evaluate_frame(sys, x)) * v;
}

double trace_adjoint_nabla_A0(const ExtrinsicFrame& f) { return adjoint_nabla_A0_matrix(f).trace(); }

double trace_adjoint_nabla_A0(const ExtrinsicSystem& sys, const Vec& x) {
    return trace_adjoint_nabla_A0(evaluate_frame(sys, x));
}

Vec torsion_contraction(const ExtrinsicFrame& f) {
    const int n = f.n();
    Vec w = Vec::Zero(n);
    for (int i = 0; i < f.m(); ++i) {
        const Vec ai = f.a.col(i);
        const Mat dai = f.directional_a_star(ai);
        Mat t(n, n);  // v -> T(v, A_i)
        for (int k = 0; k < n; ++k) t.col(k) = f.a * (f.d_a_star[k] * ai - dai.col(k));
        w += f.adjoint(t) * ai;
    }
    return w;
}

Vec contorsion_sum(const ExtrinsicSystem& sys, const Vec& x) { return -torsion_contraction(evaluate_frame(sys, x)); }

Vec a0A_field(const ExtrinsicSystem& sys, const ExtrinsicFrame& f) {
    const int n = f.n();
    if (sys.driftless() || sys.constant_bundle_map()) return Vec::Zero(n);
    const Mat nh = adjoint_nabla_A0_matrix(f);
    const Vec w = torsion_contraction(f);
    Vec out = (f.adjoint(nh) + nh) * w;
    // [A0, W] = D_{A0} W - D_W A0
    const double a0n = f.a0.norm();
    if (a0n > 0.0) {
        const double h = fd_step(f.x) / a0n;
        const Vec wp = torsion_contraction(evaluate_frame(sys, f.x + h * f.a0));
        const Vec wm = torsion_contraction(evaluate_frame(sys, f.x - h * f.a0));
        out += (wp - wm) / (2.0 * h);
    }
    out -= f.da0 * w;
    return out;
}

Vec a0A_field(const ExtrinsicSystem& sys, const Vec& x) { return a0A_field(sys, evaluate_frame(sys, x)); }

double hat_delta(const ExtrinsicSystem& sys, const OneForm& phi, const Vec& x) {
    const ExtrinsicFrame f = evaluate_frame(sys, x);
    double out = 0.0;
    for (int i = 0; i < f.m(); ++i) {
        const Vec ai = f.a.col(i);
        if (phi.jacobian) {
            Vec dai = Vec::Zero(f.n());  // D_{A_i} A_i
            for (int k = 0; k < f.n(); ++k) dai += ai(k) * f.da[k].col(i);
            out -= (phi.jacobian(x) * ai).dot(ai) + phi(x).dot(dai);
        } else {
            auto pairing = [&](const Vec& y) { return phi(y).dot(sys.A(y).col(i)); };
            out -= directional_derivative_scalar(pairing, x, ai);
        }
    }
    return out;
}

double hat_delta_vector(const ExtrinsicSystem& sys, const VectorField& v, const Vec& x) {
    const Mat a = sys.A(x);
    double out = 0.0;
    for (int i = 0; i < a.cols(); ++i) {
        auto pairing = [&](const Vec& y) {
            const ExtrinsicFrame fy = evaluate_frame(sys, y);
            return v(y).dot(fy.g * fy.a.col(i));
        };
        out -= directional_derivative_scalar(pairing, x, Vec(a.col(i)));
    }
    return out;
}

Mat tangent_basis(const ExtrinsicSystem& sys, const Vec& x) {
    const Mat p = sys.tangent_projector(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(p);
    return eig.eigenvectors().rightCols(sys.dim());
}

double density_rho(const ExtrinsicSystem& sys, const Vec& y) {
    const ExtrinsicFrame f = evaluate_frame(sys, y);
    const Mat basis = tangent_basis(sys, y);
    return std::abs((basis.transpose() * f.g * basis).determinant());
}

double density_rho_explicit(const ExtrinsicSystem& sys, const Vec& y) {
    const ExtrinsicFrame f = evaluate_frame(sys, y);
    const Mat images = f.a_star * tangent_basis(sys, y);  // columns A* e_i
    return std::abs((images.transpose() * images).determinant());
}

}  // namespace semigroup
