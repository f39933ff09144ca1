#pragma once

#include "semigroup/extrinsic.hpp"
#include "semigroup/fields.hpp"
#include "semigroup/manifold.hpp"
#include "semigroup/montecarlo.hpp"
#include "semigroup/pathsim.hpp"
#include "semigroup/rate_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>

namespace semigroup {

struct EstimatorConfig {
    double T = 1.0;
    int steps = 512;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    int workers = 0;  // 0: available parallelism
    /// Control process; h(t) = t / T when unset.
    std::optional<RateProcess> h;
    double safe_radius = 1e6;
    /// Kernel bandwidth for conditioning; <= 0 selects the plug-in rule
    /// 1.06 sigma samples^{-1/(n+4)}.
    double bandwidth = 0.0;
    /// Smallest effective sample size accepted by kernel conditioning.
    double min_ess = 50.0;
    /// Skips the true-martingale gate.
    bool override_gate = false;

    RateProcess rate() const { return h ? *h : RateProcess::linear(T); }
    SimulationOptions simulation() const;
    void validate() const;
};

/// Refuses (GateRefusal naming the missing hypothesis) unless the declared
/// bounds make the local martingales behind the expectation formulas true
/// martingales: a lower Ricci bound, bounded Ric + (nabla Z)^* and bounded
/// div Z. `curvature_only` checks just the lower Ricci bound (backward formula).
void check_martingale_gate(const ManifoldModel& model, const EstimatorConfig& cfg, bool curvature_only = false);
void check_martingale_gate(const ExtrinsicSystem& sys, const EstimatorConfig& cfg);

/// Plain Monte Carlo of E[g(X_T)].
MCEstimate expectation(const ManifoldModel& model, const ScalarFunction& g, const Vec& x,
                       const EstimatorConfig& cfg);
MCEstimate expectation(const ExtrinsicSystem& sys, const ScalarFunction& g, const Vec& x,
                       const EstimatorConfig& cfg);

/// (d P_T f)(v) by the backward formula with l_t = (1 - h_t) v: Q damped
/// transport (intrinsic) or the derivative flow (extrinsic). f is only
/// evaluated at points.
MCEstimate bismut_backward_gradient(const ManifoldModel& model, const ScalarFunction& f, const Vec& x,
                                    const Vec& v, const EstimatorConfig& cfg);
MCEstimate bismut_backward_gradient(const ExtrinsicSystem& sys, const ScalarFunction& f, const Vec& x,
                                    const Vec& v, const EstimatorConfig& cfg);

/// E[(div V)(X_T)] from V alone:
/// 1/2 E<V(X_T), //_T Theta_T int (hdot - div Z h) Theta^{-1} //^{-1} dB>.
MCEstimate divergence_expectation(const ManifoldModel& model, const VectorField& V, const Vec& x,
                                  const EstimatorConfig& cfg);

/// P_T(V(f))(x) without derivatives of f. div V is taken from `div_V` when
/// given, otherwise by finite differences of V.
MCEstimate ptvf_intrinsic(const ManifoldModel& model, const ScalarFunction& f, const VectorField& V,
                          const Vec& x, const EstimatorConfig& cfg, const ScalarFunction& div_V = {});
/// Extrinsic version with Xi, tr nabla^A0 and A0^A.
MCEstimate ptvf_extrinsic(const ExtrinsicSystem& sys, const ScalarFunction& f, const VectorField& V,
                          const Vec& x, const EstimatorConfig& cfg);

/// h and hdot tabulated on the path grid (hdot_k the slope over [t_k, t_{k+1}]).
struct RateGrid {
    double dt = 0.0;
    int steps = 0;
    std::vector<double> h;
    std::vector<double> hdot;

    static RateGrid make(const RateProcess& rate, double T, int steps);
};

/// Terminal point and divergence weight //_T Theta_T int (hdot - div Z h)
/// Theta^{-1} //^{-1} dB of one intrinsic path (Theta from THETA_GEN).
struct WeightSample {
    Vec x_T;
    Vec weight;
};

/// Simulates path `path` of the stream keyed by cfg.seed. Returns false if
/// the path left the safe region.
bool intrinsic_weight_path(const ManifoldModel& model, const WeitzenbockEndomorphism& theta, const Vec& x,
                           const EstimatorConfig& cfg, const RateGrid& grid, std::uint64_t path,
                           WeightSample& out);

enum class ConditioningMode { ExactBridge, Kernel };

ConditioningMode parse_conditioning_mode(const std::string& text);

struct LogGradientEstimate {
    MCEstimate gradient;  // metric gradient of y -> log p_T(x, y)
    ConditioningMode mode = ConditioningMode::Kernel;
    double bandwidth = 0.0;
    double effective_samples = 0.0;
};

/// Gradient in y of log p_T(x, y), p_T the density with respect to the
/// Riemannian volume, conditioning on X_T = y either with the exact Brownian
/// bridge (flat, driftless only) or with Nadaraya-Watson kernel weights.
LogGradientEstimate forward_log_gradient(const ManifoldModel& model, const Vec& x, const Vec& y,
                                         const EstimatorConfig& cfg, ConditioningMode mode);
LogGradientEstimate forward_log_gradient(const ExtrinsicSystem& sys, const Vec& x, const Vec& y,
                                         const EstimatorConfig& cfg, ConditioningMode mode);
/// d log rho^{1/2} at y (chart covector): the correction from the Riemannian
/// density p_T to the Lebesgue density q_T = p_T rho^{1/2}.
Vec lebesgue_log_density_correction(const ExtrinsicSystem& sys, const Vec& y);

struct FeynmanKacReport {
    MCEstimate lhs;  // div of alpha_t = E[alpha(//_t Theta_t .)], by central differences
    MCEstimate rhs;  // E[(div alpha)(X_t) exp(int div Z)]
    double gap = 0.0;
    double combined_se = 0.0;
    double stencil = 0.0;
    /// The finite-difference signal is below the Monte Carlo noise.
    bool noise_conflict = false;

    /// |gap| <= k combined_se, with a 1e-10 relative round-off floor for
    /// zero-variance cases (flat, linear alpha).
    bool within(double k) const {
        return std::abs(gap) <= k * std::max(combined_se, 1e-10 * std::max(1.0, std::abs(rhs.value())));
    }
};

/// Both sides of div P_t alpha = P_t^{div Z}(div alpha) on a flat Euclidean
/// model, with common random numbers across the stencil points.
FeynmanKacReport feynman_kac_div_check(const ManifoldModel& model, const OneForm& alpha, const Vec& x,
                                       const EstimatorConfig& cfg, const ScalarFunction& div_alpha = {},
                                       double stencil = 1e-3);

}  // namespace semigroup
