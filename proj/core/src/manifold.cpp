#include "semigroup/manifold.hpp"

#include "semigroup/errors.hpp"

#include <cmath>
#include <sstream>

namespace semigroup {

// ---------------------------------------------------------------------------
// ManifoldModel defaults

Mat ManifoldModel::tangent_projector(const Vec&) const { return identity(ambient_dim()); }

Mat ManifoldModel::initial_frame(const Vec& x) const {
    const Mat p = tangent_projector(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(p);
    // Eigenvalues ascend; the tangent directions carry eigenvalue 1.
    return eig.eigenvectors().rightCols(dim());
}

Mat ManifoldModel::nabla_drift_adjoint(const Vec& x) const {
    const Mat p = tangent_projector(x);
    return p * (nabla_drift(x) * p).transpose() * p;
}

Mat ManifoldModel::reorthonormalize(const Vec& x, const Mat& frame) const {
    return polar_factor(tangent_projector(x) * frame);
}

std::vector<Vec> ManifoldModel::validation_points() const {
    const int n = dim();
    std::vector<Vec> points;
    points.push_back(Vec::Zero(n));
    for (int i = 0; i < 6; ++i) {
        Vec u(n);
        for (int j = 0; j < n; ++j) u(j) = 0.9 * std::sin(1.7 * i + 0.9 * j + 0.3);
        points.push_back(u);
    }
    return points;
}

double ManifoldModel::divergence(const VectorField& field, const Vec& x) const {
    const Mat p = tangent_projector(x);
    return (p * field_jacobian(field, x) * p).trace();
}

// ---------------------------------------------------------------------------
// Euclidean

std::shared_ptr<EuclideanModel> EuclideanModel::flat(int dim) {
    auto m = std::make_shared<EuclideanModel>(dim, Drift::None, 0.0, ExpressionVector{});
    m->set_bounds({0.0, 0.0, 0.0});
    return m;
}

std::shared_ptr<EuclideanModel> EuclideanModel::ornstein_uhlenbeck(int dim, double lambda) {
    auto m = std::make_shared<EuclideanModel>(dim, Drift::OrnsteinUhlenbeck, lambda, ExpressionVector{});
    // Ric_Z = lambda g; Ric + (nabla Z)^* = -lambda I; div Z = -n lambda.
    m->set_bounds({lambda, std::abs(lambda), dim * std::abs(lambda)});
    return m;
}

std::shared_ptr<EuclideanModel> EuclideanModel::custom(int dim, const std::vector<std::string>& drift,
                                                       const ModelBounds& bounds) {
    if (static_cast<int>(drift.size()) != dim)
        throw ConfigError("custom drift needs " + std::to_string(dim) + " components, got " +
                          std::to_string(drift.size()));
    auto m = std::make_shared<EuclideanModel>(dim, Drift::Custom, 0.0, ExpressionVector(drift, dim));
    m->set_bounds(bounds);
    return m;
}

EuclideanModel::EuclideanModel(int dim, Drift kind, double lambda, ExpressionVector custom)
    : dim_(dim), kind_(kind), lambda_(lambda), custom_(std::move(custom)) {
    if (dim < 1 || dim > kMaxDim)
        throw ConfigError("euclidean dimension must be in [1, " + std::to_string(kMaxDim) + "]");
}

std::string EuclideanModel::name() const {
    switch (kind_) {
        case Drift::None: return "euclidean";
        case Drift::OrnsteinUhlenbeck: return "euclidean-ou";
        case Drift::Custom: return "euclidean-custom";
    }
    return "euclidean";
}

Vec EuclideanModel::drift(const Vec& x) const {
    switch (kind_) {
        case Drift::None: return Vec::Zero(dim_);
        case Drift::OrnsteinUhlenbeck: return -lambda_ * x;
        case Drift::Custom: return custom_(x);
    }
    return Vec::Zero(dim_);
}

Mat EuclideanModel::nabla_drift(const Vec& x) const {
    switch (kind_) {
        case Drift::None: return Mat::Zero(dim_, dim_);
        case Drift::OrnsteinUhlenbeck: return -lambda_ * identity(dim_);
        case Drift::Custom: return custom_.jacobian(x);
    }
    return Mat::Zero(dim_, dim_);
}

double EuclideanModel::div_drift(const Vec& x) const {
    switch (kind_) {
        case Drift::None: return 0.0;
        case Drift::OrnsteinUhlenbeck: return -lambda_ * dim_;
        case Drift::Custom: return custom_.jacobian(x).trace();
    }
    return 0.0;
}

Mat EuclideanModel::reorthonormalize(const Vec&, const Mat& frame) const { return polar_factor(frame); }

Christoffel EuclideanModel::chart_christoffel(const Vec&) const {
    return Christoffel(dim_, Mat::Zero(dim_, dim_));
}

// ---------------------------------------------------------------------------
// Sphere

SphereModel::SphereModel(int dim) : dim_(dim) {
    if (dim < 1 || dim + 1 > kMaxDim)
        throw ConfigError("sphere dimension must be in [1, " + std::to_string(kMaxDim - 1) + "]");
    bounds_ = {static_cast<double>(dim - 1), static_cast<double>(dim - 1), 0.0};
}

Mat SphereModel::tangent_projector(const Vec& x) const {
    const Vec u = x / x.norm();
    return identity(dim_ + 1) - u * u.transpose();
}

Mat SphereModel::initial_frame(const Vec& x) const {
    Mat col = x / x.norm();
    Eigen::HouseholderQR<Mat> qr(col);
    Mat q = qr.householderQ() * identity(dim_ + 1);
    return q.rightCols(dim_);
}

Mat SphereModel::ricci(const Vec& x) const { return (dim_ - 1) * tangent_projector(x); }

Mat SphereModel::transport_increment(const Vec& x, const Vec& dx, const Mat& frame) const {
    return -x * (dx.transpose() * frame);
}

Mat SphereModel::reorthonormalize(const Vec& x, const Mat& frame) const {
    return polar_factor(tangent_projector(x) * frame);
}

Vec SphereModel::chart_to_point(const Vec& u) const {
    const double s = u.squaredNorm();
    Vec x(dim_ + 1);
    x.head(dim_) = 2.0 * u / (1.0 + s);
    x(dim_) = (1.0 - s) / (1.0 + s);
    return x;
}

Vec SphereModel::point_to_chart(const Vec& x) const {
    const double denom = 1.0 + x(dim_);
    if (!(denom > 1e-12)) throw ChartBoundaryError("south pole is outside the stereographic chart");
    return x.head(dim_) / denom;
}

Mat SphereModel::chart_metric(const Vec& u) const {
    const double c = 2.0 / (1.0 + u.squaredNorm());
    return c * c * identity(dim_);
}

Christoffel SphereModel::chart_christoffel(const Vec& u) const {
    // Conformal metric e^{2 phi} I with phi = log 2 - log(1 + |u|^2).
    const Vec dphi = -2.0 * u / (1.0 + u.squaredNorm());
    Christoffel gamma(dim_, Mat::Zero(dim_, dim_));
    for (int k = 0; k < dim_; ++k)
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) {
                double v = 0.0;
                if (i == k) v += dphi(j);
                if (j == k) v += dphi(i);
                if (i == j) v -= dphi(k);
                gamma[k](i, j) = v;
            }
    return gamma;
}

Mat SphereModel::chart_ricci(const Vec& u) const { return (dim_ - 1) * chart_metric(u); }

Vec SphereModel::base_point() const {
    Vec x = Vec::Zero(dim_ + 1);
    x(dim_) = 1.0;
    return x;
}

// ---------------------------------------------------------------------------
// Fault injection

namespace {

class CorruptedModel final : public ManifoldModel {
public:
    CorruptedModel(std::shared_ptr<const ManifoldModel> base, double magnitude)
        : base_(std::move(base)), magnitude_(magnitude) {
        bounds_ = base_->bounds();
    }

    std::string name() const override { return base_->name() + "-corrupted"; }
    int dim() const override { return base_->dim(); }
    int ambient_dim() const override { return base_->ambient_dim(); }
    Vec project(const Vec& x) const override { return base_->project(x); }
    Mat tangent_projector(const Vec& x) const override { return base_->tangent_projector(x); }
    Mat initial_frame(const Vec& x) const override { return base_->initial_frame(x); }
    Mat ricci(const Vec& x) const override { return base_->ricci(x); }
    Vec drift(const Vec& x) const override { return base_->drift(x); }
    Mat nabla_drift(const Vec& x) const override { return base_->nabla_drift(x); }
    double div_drift(const Vec& x) const override { return base_->div_drift(x); }
    Mat transport_increment(const Vec& x, const Vec& dx, const Mat& f) const override {
        return base_->transport_increment(x, dx, f);
    }
    Mat reorthonormalize(const Vec& x, const Mat& f) const override { return base_->reorthonormalize(x, f); }
    Vec chart_to_point(const Vec& u) const override { return base_->chart_to_point(u); }
    Vec point_to_chart(const Vec& x) const override { return base_->point_to_chart(x); }
    Mat chart_metric(const Vec& u) const override { return base_->chart_metric(u); }
    Christoffel chart_christoffel(const Vec& u) const override {
        Christoffel gamma = base_->chart_christoffel(u);
        gamma[0](0, 0) += magnitude_;
        return gamma;
    }
    Mat chart_ricci(const Vec& u) const override { return base_->chart_ricci(u); }
    Vec chart_drift(const Vec& u) const override { return base_->chart_drift(u); }
    std::vector<Vec> validation_points() const override { return base_->validation_points(); }
    Vec base_point() const override { return base_->base_point(); }
    bool is_flat_euclidean() const override { return base_->is_flat_euclidean(); }
    bool driftless() const override { return base_->driftless(); }

private:
    std::shared_ptr<const ManifoldModel> base_;
    double magnitude_;
};

}  // namespace

std::shared_ptr<ManifoldModel> make_corrupted_model(std::shared_ptr<const ManifoldModel> base,
                                                    double magnitude) {
    return std::make_shared<CorruptedModel>(std::move(base), magnitude);
}

// ---------------------------------------------------------------------------
// Endomorphisms

EndomorphismVariant parse_endomorphism_variant(const std::string& text) {
    if (text == "THETA_GEN" || text == "theta") return EndomorphismVariant::ThetaGen;
    if (text == "Q_GEN" || text == "q") return EndomorphismVariant::QGen;
    if (text == "CUSTOM" || text == "custom") return EndomorphismVariant::Custom;
    throw ConfigError("unknown endomorphism variant '" + text + "'");
}

std::string to_string(EndomorphismVariant variant) {
    switch (variant) {
        case EndomorphismVariant::ThetaGen: return "THETA_GEN";
        case EndomorphismVariant::QGen: return "Q_GEN";
        case EndomorphismVariant::Custom: return "CUSTOM";
    }
    return "?";
}

WeitzenbockEndomorphism weitzenbock_endomorphism(const ManifoldModel& model, EndomorphismVariant variant) {
    const ManifoldModel* m = &model;
    switch (variant) {
        case EndomorphismVariant::ThetaGen:
            return {variant, [m](const Vec& x) {
                        return Mat(m->ricci(x) + m->nabla_drift_adjoint(x) -
                                   m->div_drift(x) * m->tangent_projector(x));
                    }};
        case EndomorphismVariant::QGen:
            return {variant, [m](const Vec& x) { return Mat(m->ricci(x) - m->nabla_drift_adjoint(x)); }};
        case EndomorphismVariant::Custom:
            throw ConfigError("CUSTOM endomorphism requires a matrix callback");
    }
    throw ConfigError("unknown endomorphism variant");
}

WeitzenbockEndomorphism custom_endomorphism(std::function<Mat(const Vec&)> matrix) {
    return {EndomorphismVariant::Custom, std::move(matrix)};
}

Mat parallel_transport_step(const ManifoldModel& model, const Vec& x, const Vec& dx, const Mat& frame) {
    if (dx.isZero(0.0)) return frame;
    const Vec raw = x + dx;
    if (!raw.allFinite()) throw ChartBoundaryError("transport step left the chart");
    const Vec x1 = model.project(raw);
    if (!x1.allFinite()) throw ChartBoundaryError("transport step left the chart");
    const Mat k1 = model.transport_increment(x, dx, frame);
    const Mat k2 = model.transport_increment(x1, dx, frame + k1);
    return model.reorthonormalize(x1, frame + 0.5 * (k1 + k2));
}

// ---------------------------------------------------------------------------
// Validation

namespace {

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

struct CheckAccumulator {
    ValidationCheck check;
    CheckAccumulator(const std::string& identity, double tolerance) {
        check.identity = identity;
        check.tolerance = tolerance;
    }
    void record(double error, const Vec& at) {
        if (error > check.max_error || check.worst_point.size() == 0) {
            check.max_error = std::max(check.max_error, error);
            check.worst_point = at;
        }
    }
};

// Relative error with the reference magnitude floored at 1.
double relative(const Mat& value, const Mat& reference) {
    return max_abs(value - reference) / std::max(1.0, max_abs(reference));
}

Vec unit(int n, int k) {
    Vec e = Vec::Zero(n);
    e(k) = 1.0;
    return e;
}

std::string format_point(const Vec& v) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ')';
    return os.str();
}

}  // namespace

Mat ricci_from_christoffel(const ManifoldModel& model, const Vec& u) {
    const int n = model.dim();
    const Christoffel g0 = model.chart_christoffel(u);
    const double h = fd_step(u);
    // dgamma[m][k](i, j) = d_m Gamma^k_ij
    std::vector<Christoffel> dgamma(n);
    for (int m = 0; m < n; ++m) {
        const Christoffel plus = model.chart_christoffel(u + h * unit(n, m));
        const Christoffel minus = model.chart_christoffel(u - h * unit(n, m));
        dgamma[m].resize(n);
        for (int k = 0; k < n; ++k) dgamma[m][k] = (plus[k] - minus[k]) / (2.0 * h);
    }
    // R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
    Mat ric = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double r = 0.0;
            for (int k = 0; k < n; ++k) {
                r += dgamma[k][k](i, j) - dgamma[j][k](i, k);
                for (int l = 0; l < n; ++l)
                    r += g0[k](k, l) * g0[l](i, j) - g0[k](j, l) * g0[l](i, k);
            }
            ric(i, j) = r;
        }
    return ric;
}

bool ValidationReport::passed() const { return first_failure() == nullptr; }

const ValidationCheck* ValidationReport::first_failure() const {
    for (const auto& c : checks)
        if (!c.passed()) return &c;
    return nullptr;
}

ValidationReport check_model(const ManifoldModel& model) {
    const int n = model.dim();
    CheckAccumulator pd("metric positive definite", 0.0);
    CheckAccumulator compat("metric compatibility", 1e-5);
    CheckAccumulator ricci("Ricci consistency", 1e-4);
    CheckAccumulator symmetry("Ricci symmetry", 1e-10);
    CheckAccumulator divz("div Z identity", 1e-5);
    CheckAccumulator iso("embedding isometry", 1e-6);
    CheckAccumulator ric_embed("Ricci endomorphism", 1e-6);
    CheckAccumulator drift_embed("drift consistency", 1e-6);

    for (const Vec& u : model.validation_points()) {
        const double h = fd_step(u);
        const Mat g = model.chart_metric(u);
        const Christoffel gamma = model.chart_christoffel(u);

        Eigen::SelfAdjointEigenSolver<Mat> eig(g);
        pd.record(std::max(0.0, 1e-12 - eig.eigenvalues().minCoeff()), u);

        // d_k g_ij = g_lj G^l_ki + g_il G^l_kj
        double compat_err = 0.0;
        for (int k = 0; k < n; ++k) {
            const Mat dg = (model.chart_metric(u + h * unit(n, k)) - model.chart_metric(u - h * unit(n, k))) /
                           (2.0 * h);
            Mat rhs = Mat::Zero(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l)
                        rhs(i, j) += g(l, j) * gamma[l](k, i) + g(i, l) * gamma[l](k, j);
            compat_err = std::max(compat_err, relative(rhs, dg));
        }
        compat.record(compat_err, u);

        const Mat ric = model.chart_ricci(u);
        ricci.record(relative(ricci_from_christoffel(model, u), ric), u);
        symmetry.record(max_abs(ric - ric.transpose()), u);

        // div Z = d_i Z^i + G^i_ik Z^k
        const Vec z = model.chart_drift(u);
        double div = 0.0;
        for (int i = 0; i < n; ++i) {
            div += (model.chart_drift(u + h * unit(n, i))(i) - model.chart_drift(u - h * unit(n, i))(i)) /
                   (2.0 * h);
            for (int k = 0; k < n; ++k) div += gamma[i](i, k) * z(k);
        }
        const Vec x = model.chart_to_point(u);
        const double dz = model.div_drift(x);
        divz.record(std::abs(div - dz) / std::max(1.0, std::abs(dz)), u);

        Mat jac(model.ambient_dim(), n);
        for (int k = 0; k < n; ++k)
            jac.col(k) = (model.chart_to_point(u + h * unit(n, k)) - model.chart_to_point(u - h * unit(n, k))) /
                         (2.0 * h);
        iso.record(relative(jac.transpose() * jac, g), u);
        ric_embed.record(relative(jac.transpose() * model.ricci(x) * jac, ric), u);
        drift_embed.record(relative(jac * z, model.drift(x)), u);
    }

    ValidationReport report;
    for (auto* acc : {&pd, &compat, &ricci, &symmetry, &divz, &iso, &ric_embed, &drift_embed})
        report.checks.push_back(acc->check);
    return report;
}

ValidationReport validate_model(const ManifoldModel& model) {
    ValidationReport report = check_model(model);
    if (const ValidationCheck* failed = report.first_failure()) {
        std::ostringstream detail;
        detail << "max error " << failed->max_error << " > " << failed->tolerance << " at chart point "
               << format_point(failed->worst_point);
        throw ValidationFailure(failed->identity, detail.str());
    }
    return report;
}

}  // namespace semigroup
