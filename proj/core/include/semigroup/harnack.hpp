#pragma once

#include "semigroup/estimators.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace semigroup {

/// C^1 family of diffeomorphisms F_s, s in [0, 1], with F_0 = id.
struct DiffeoFamily {
    std::string name;
    std::function<Vec(double, const Vec&)> F;
    std::function<Mat(double, const Vec&)> dF;    // spatial Jacobian
    std::function<Vec(double, const Vec&)> Fdot;  // d/ds F
    /// V_s does not depend on the point and div V_s = 0 (sup-norms are exact).
    bool constant_field = false;

    /// V_s(y) = dF(s, y)^{-1} Fdot(s, y); DomainError if dF is singular.
    Vec field(double s, const Vec& y) const;
    VectorField field_at(double s) const;

    static DiffeoFamily identity(int dim);
    static DiffeoFamily translation(const Vec& r);
};

/// Axis-aligned box sampled on a tensor grid, used to estimate sup-norms.
struct Region {
    Vec lo;
    Vec hi;
    int points_per_axis = 9;
};

/// Sup-norms of V and div V, given directly or estimated on a region.
struct FieldBounds {
    std::optional<double> v_sup;
    std::optional<double> div_sup;
    std::optional<Region> region;
};

/// Resolves missing sup-norms on the region grid (ConfigError without one).
std::pair<double, double> resolve_sup_norms(const ManifoldModel& model, const VectorField& V,
                                            const FieldBounds& bounds);

enum class AlphaMode { Empirical, Analytic };

AlphaMode parse_alpha_mode(const std::string& text);
std::string to_string(AlphaMode mode);

/// alpha_1(delta, t, V) = |div V| + delta c + C1 |V|^2 / (delta t) and
/// alpha_2(t, V) = |div V| + C2 |V| / sqrt(t).
///
/// Empirical mode takes the moments of the divergence weight Psi directly:
/// alpha_2 = |div V| + |V| sqrt(E|Psi|^2) / 2 and
/// alpha_1 = |div V| + delta log E exp(|V| |Psi| / (2 delta)); the split into
/// c and C1 is then not unique and those two fields are left at zero.
/// Analytic mode bounds Psi from the declared Ricci/drift bounds with
/// |Theta_t| <= exp(rho t) and |Theta_s^{-1}| <= exp(rho s),
/// rho = |Ric + (nabla Z)^*| + |div Z| (Theta_t is not adapted before t, so
/// the two factors are bounded separately).
/// With sigma^2 = 2 int (|hdot| + |div Z| h)^2 exp(2 rho s) ds this gives
/// c = log 2, C1 / t = n^2 exp(2 rho t) sigma^2 / 8 and
/// C2 / sqrt(t) = sqrt(n sigma^2 exp(2 rho t)) / 2.
struct AlphaConstants {
    AlphaMode mode = AlphaMode::Empirical;
    double t = 0.0;
    double delta = 0.0;
    double v_sup = 0.0;
    double div_sup = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha1_se = 0.0;  // zero in analytic mode
    double alpha2_se = 0.0;
    double c = 0.0;
    double C1_over_t = 0.0;
    double C2_over_sqrt_t = 0.0;
};

/// cfg.T is the time t.
AlphaConstants alpha_constants(const ManifoldModel& model, const VectorField& V, const FieldBounds& bounds,
                               const Vec& x, double delta, AlphaMode mode, const EstimatorConfig& cfg);

enum class Verdict { Holds, ViolatedWithinNoise, Violated };

std::string to_string(Verdict verdict);

struct HarnackNode {
    double s = 0.0;
    double weight = 0.0;
    double alpha = 0.0;
};

struct HarnackReport {
    std::string form;
    MCEstimate lhs;
    MCEstimate rhs;
    double slack = 0.0;  // rhs - lhs
    double slack_se = 0.0;
    Verdict verdict = Verdict::Holds;
    std::vector<HarnackNode> nodes;

    /// rhs / lhs with its relative standard error (delta method).
    double ratio() const { return rhs.value() / lhs.value(); }
};

Verdict classify(double slack, double slack_se);

/// |P_t(V f)| <= delta (P_t(f log f) - P_t f log P_t f) + alpha_1 P_t f with
/// empirical constants. f must be positive: `f_lower` is the declared lower
/// bound (DomainError if not positive or if a sample falls below it).
HarnackReport entropy_gradient_check(const ManifoldModel& model, const ScalarFunction& f, double f_lower,
                                     const VectorField& V, const FieldBounds& bounds, const Vec& x, double delta,
                                     const EstimatorConfig& cfg);

/// |P_t(V f)|^2 <= alpha_2^2 P_t f^2 with empirical constants.
HarnackReport l2_gradient_check(const ManifoldModel& model, const ScalarFunction& f, const VectorField& V,
                                const FieldBounds& bounds, const Vec& x, const EstimatorConfig& cfg);

enum class HarnackForm { Power, L2 };

HarnackForm parse_harnack_form(const std::string& text);
std::string to_string(HarnackForm form);

/// Shift-Harnack inequality for the family F:
///  power: (P_t f)^p <= P_t(f^p o F_1) exp(int_0^1 p / beta alpha_1(beta' / beta, t, V_s) ds),
///         beta(s) = 1 + (p - 1) s;
///  l2:    P_t f <= P_t(f o F_1) + (int_0^1 alpha_2(t, V_s) ds)^{1/2} sqrt(P_t f^2).
/// The s-integrals use 16-point Gauss-Legendre with alpha re-estimated at each
/// node from the same paths. With p = 1 the power form has beta' = 0 and
/// alpha_1(0, t, V) is infinite unless V_s = 0.
HarnackReport shift_harnack_verify(const ManifoldModel& model, const ScalarFunction& f, double f_lower,
                                   const DiffeoFamily& family, const FieldBounds& bounds, const Vec& x, double p,
                                   HarnackForm form, const EstimatorConfig& cfg);

/// Nodes and weights of n-point Gauss-Legendre quadrature on [0, 1].
std::vector<std::pair<double, double>> gauss_legendre_unit(int n);

}  // namespace semigroup
