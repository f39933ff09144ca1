#pragma once

#include "semigroup/expression.hpp"
#include "semigroup/fields.hpp"
#include "semigroup/linalg.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace semigroup {

/// Declared global bounds used by the true-martingale gate and by the
/// analytic derivative-estimate constants. Not computed: global bounds cannot
/// be recovered from pointwise callbacks.
struct ModelBounds {
    std::optional<double> curvature_lower_bound;  // Ric_Z >= K
    std::optional<double> ricci_drift_bound;      // sup |Ric + (nabla Z)^*|_op
    std::optional<double> div_drift_bound;        // sup |div Z|
};

/// A Riemannian manifold with a drift vector field Z, i.e. the generator
/// Delta + Z.
///
/// Points and tangent vectors are represented in an ambient R^N in which the
/// manifold is isometrically embedded (N = n for Euclidean models), so the
/// metric on tangent vectors is the Euclidean one and frames are N x n
/// matrices with orthonormal columns. A local chart with metric, Christoffel
/// symbols and Ricci tensor is exposed separately for geometric validation.
class ManifoldModel {
public:
    virtual ~ManifoldModel() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual int ambient_dim() const = 0;

    /// Retraction of an ambient point onto the manifold.
    virtual Vec project(const Vec& x) const { return x; }
    /// Orthogonal projector of R^N onto T_xM.
    virtual Mat tangent_projector(const Vec& x) const;
    /// An orthonormal frame of T_xM, N x n.
    virtual Mat initial_frame(const Vec& x) const;

    /// Ricci curvature as an endomorphism of T_xM (N x N acting on tangent vectors).
    virtual Mat ricci(const Vec& x) const = 0;
    virtual Vec drift(const Vec& x) const = 0;
    /// The endomorphism v -> nabla_v Z.
    virtual Mat nabla_drift(const Vec& x) const = 0;
    virtual double div_drift(const Vec& x) const = 0;
    /// Metric adjoint (nabla Z)^*.
    Mat nabla_drift_adjoint(const Vec& x) const;

    /// First-order change of a frame parallel transported along the
    /// displacement dx starting at x.
    virtual Mat transport_increment(const Vec& x, const Vec& dx, const Mat& frame) const = 0;
    /// Projects a frame back onto the orthonormal frames of T_xM.
    virtual Mat reorthonormalize(const Vec& x, const Mat& frame) const;

    // Chart used for validation.
    virtual Vec chart_to_point(const Vec& u) const = 0;
    virtual Vec point_to_chart(const Vec& x) const = 0;
    virtual Mat chart_metric(const Vec& u) const = 0;
    virtual Christoffel chart_christoffel(const Vec& u) const = 0;
    /// Ricci tensor as a bilinear form in chart components.
    virtual Mat chart_ricci(const Vec& u) const = 0;
    /// Drift components Z^i in the chart.
    virtual Vec chart_drift(const Vec& u) const = 0;
    /// Deterministic chart points at which validation runs.
    virtual std::vector<Vec> validation_points() const;

    /// A default starting point (origin / north pole).
    virtual Vec base_point() const = 0;

    /// Whether the model is R^n with its flat metric in global coordinates.
    virtual bool is_flat_euclidean() const { return false; }
    /// Whether the drift vanishes identically.
    virtual bool driftless() const { return false; }

    /// Divergence of a tangent vector field, trace(P DV P).
    double divergence(const VectorField& field, const Vec& x) const;

    const ModelBounds& bounds() const { return bounds_; }
    void set_bounds(const ModelBounds& bounds) { bounds_ = bounds; }

protected:
    ModelBounds bounds_;
};

/// R^n with drift Z = 0, Z = -lambda x (Ornstein-Uhlenbeck) or Z given by
/// coefficient expressions.
class EuclideanModel final : public ManifoldModel {
public:
    enum class Drift { None, OrnsteinUhlenbeck, Custom };

    static std::shared_ptr<EuclideanModel> flat(int dim);
    static std::shared_ptr<EuclideanModel> ornstein_uhlenbeck(int dim, double lambda);
    /// Bounds are left undeclared unless supplied.
    static std::shared_ptr<EuclideanModel> custom(int dim, const std::vector<std::string>& drift,
                                                  const ModelBounds& bounds = {});

    EuclideanModel(int dim, Drift kind, double lambda, ExpressionVector custom);

    std::string name() const override;
    int dim() const override { return dim_; }
    int ambient_dim() const override { return dim_; }
    Mat tangent_projector(const Vec&) const override { return identity(dim_); }
    Mat initial_frame(const Vec&) const override { return identity(dim_); }
    Mat ricci(const Vec&) const override { return Mat::Zero(dim_, dim_); }
    Vec drift(const Vec& x) const override;
    Mat nabla_drift(const Vec& x) const override;
    double div_drift(const Vec& x) const override;
    Mat transport_increment(const Vec&, const Vec&, const Mat& frame) const override {
        return Mat::Zero(frame.rows(), frame.cols());
    }
    Mat reorthonormalize(const Vec&, const Mat& frame) const override;

    Vec chart_to_point(const Vec& u) const override { return u; }
    Vec point_to_chart(const Vec& x) const override { return x; }
    Mat chart_metric(const Vec&) const override { return identity(dim_); }
    Christoffel chart_christoffel(const Vec&) const override;
    Mat chart_ricci(const Vec&) const override { return Mat::Zero(dim_, dim_); }
    Vec chart_drift(const Vec& u) const override { return drift(u); }
    Vec base_point() const override { return Vec::Zero(dim_); }
    bool is_flat_euclidean() const override { return true; }
    bool driftless() const override { return kind_ == Drift::None; }

    Drift drift_kind() const { return kind_; }
    double lambda() const { return lambda_; }

private:
    int dim_;
    Drift kind_;
    double lambda_;
    ExpressionVector custom_;
};

/// The unit sphere S^n in R^{n+1}, driftless. Ric = (n-1) g.
class SphereModel final : public ManifoldModel {
public:
    explicit SphereModel(int dim);
    static std::shared_ptr<SphereModel> make(int dim) { return std::make_shared<SphereModel>(dim); }

    std::string name() const override { return "sphere"; }
    int dim() const override { return dim_; }
    int ambient_dim() const override { return dim_ + 1; }
    Vec project(const Vec& x) const override { return x / x.norm(); }
    Mat tangent_projector(const Vec& x) const override;
    Mat initial_frame(const Vec& x) const override;
    Mat ricci(const Vec& x) const override;
    Vec drift(const Vec&) const override { return Vec::Zero(dim_ + 1); }
    Mat nabla_drift(const Vec&) const override { return Mat::Zero(dim_ + 1, dim_ + 1); }
    double div_drift(const Vec&) const override { return 0.0; }
    /// Embedded transport equation dp = -<dx, p> x.
    Mat transport_increment(const Vec& x, const Vec& dx, const Mat& frame) const override;
    Mat reorthonormalize(const Vec& x, const Mat& frame) const override;

    /// Stereographic chart from the south pole; the north pole is u = 0.
    Vec chart_to_point(const Vec& u) const override;
    Vec point_to_chart(const Vec& x) const override;
    Mat chart_metric(const Vec& u) const override;
    Christoffel chart_christoffel(const Vec& u) const override;
    Mat chart_ricci(const Vec& u) const override;
    Vec chart_drift(const Vec&) const override { return Vec::Zero(dim_); }
    Vec base_point() const override;
    bool driftless() const override { return true; }

private:
    int dim_;
};

/// Wraps a model and perturbs its Christoffel symbols; negative control for
/// validation.
std::shared_ptr<ManifoldModel> make_corrupted_model(std::shared_ptr<const ManifoldModel> base,
                                                    double magnitude);

// ---------------------------------------------------------------------------
// Curvature/drift endomorphisms driving the damped transports.

enum class EndomorphismVariant {
    ThetaGen,  // Ric + (nabla Z)^* - div Z
    QGen,      // Ric - (nabla Z)^*, i.e. Ric_Z acting on 1-forms
    Custom,
};

EndomorphismVariant parse_endomorphism_variant(const std::string& text);
std::string to_string(EndomorphismVariant variant);

class WeitzenbockEndomorphism {
public:
    WeitzenbockEndomorphism(EndomorphismVariant variant, std::function<Mat(const Vec&)> matrix)
        : variant_(variant), matrix_(std::move(matrix)) {}

    EndomorphismVariant variant() const { return variant_; }
    /// Ambient matrix of the endomorphism of T_xM.
    Mat operator()(const Vec& x) const { return matrix_(x); }
    /// Matrix in the orthonormal frame: U^T R(x) U.
    Mat in_frame(const Vec& x, const Mat& frame) const {
        return frame.transpose() * matrix_(x) * frame;
    }

private:
    EndomorphismVariant variant_;
    std::function<Mat(const Vec&)> matrix_;
};

/// Built-in variants; Custom requires custom_endomorphism. The returned
/// object references `model`, which must outlive it.
WeitzenbockEndomorphism weitzenbock_endomorphism(const ManifoldModel& model,
                                                 EndomorphismVariant variant);
WeitzenbockEndomorphism custom_endomorphism(std::function<Mat(const Vec&)> matrix);

/// One Heun step of the parallel transport of `frame` along the chart
/// displacement dx, followed by re-orthonormalization at the endpoint.
/// Throws ChartBoundaryError when x + dx cannot be mapped back onto the model.
Mat parallel_transport_step(const ManifoldModel& model, const Vec& x, const Vec& dx, const Mat& frame);

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string identity;
    double max_error = 0.0;
    double tolerance = 0.0;
    Vec worst_point;
    bool passed() const { return max_error <= tolerance; }
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool passed() const;
    const ValidationCheck* first_failure() const;
};

/// Runs the finite-difference cross-checks without throwing.
ValidationReport check_model(const ManifoldModel& model);
/// As check_model, but throws ValidationFailure naming the first failed
/// identity and its worst point.
ValidationReport validate_model(const ManifoldModel& model);

/// Ricci tensor of the chart connection by central differences of the
/// Christoffel symbols.
Mat ricci_from_christoffel(const ManifoldModel& model, const Vec& u);

}  // namespace semigroup
