#pragma once

#include "semigroup/extrinsic.hpp"
#include "semigroup/linalg.hpp"
#include "semigroup/manifold.hpp"
#include "semigroup/rng.hpp"

#include <Eigen/LU>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace semigroup {

struct SimulationOptions {
    double T = 1.0;
    int steps = 512;
    /// A path whose ambient norm exceeds this radius (or turns non-finite)
    /// is flagged as exploded.
    double safe_radius = 1e6;
    /// ||TX||_max above which a conditioning warning is recorded.
    double jacobian_bound = 1e8;

    double dt() const { return T / steps; }
    void validate() const;
};

/// One simulated trajectory on the grid t_k = k T / N.
struct PathRecord {
    double T = 0.0;
    int steps = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Vec> X;
    std::vector<Vec> dB;     // dB[k] drives the step from t_k to t_{k+1}
    std::vector<Mat> frame;  // intrinsic only
    std::vector<Mat> theta;  // filled by callers from integrate_damped_transport / integrate_xi
    std::vector<Mat> tx;     // extrinsic with Jacobian only
    bool exploded = false;
    int explosion_step = -1;
    bool conditioning_warning = false;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

/// Right-driven (M' = -R M, the Theta form) or left-driven (M' = -M R, the
/// Q form) damped transport.
enum class DampedForm { Right, Left };

DampedForm default_form(EndomorphismVariant variant);

/// One Heun step of the damped transport with endomorphisms r0 at t_k and
/// r1 at t_{k+1} (both in the frame).
Mat damped_step(DampedForm form, const Mat& m, const Mat& r0, const Mat& r1, double dt);

/// Heun predictor-corrector for the frame-bundle SDE dX = U o dB + Z dt with
/// U parallel transported, optionally integrating a damped transport along.
class IntrinsicStepper {
public:
    IntrinsicStepper(const ManifoldModel& model, double dt, const WeitzenbockEndomorphism* endo = nullptr,
                     DampedForm form = DampedForm::Right);

    void reset(const Vec& x0);
    void advance(const Vec& db);
    bool left_region(double safe_radius) const;

    const Vec& x() const { return x_; }
    const Mat& frame() const { return frame_; }
    /// Theta or Q at the current point (identity without an endomorphism).
    const Mat& damped() const { return damped_; }

private:
    const ManifoldModel& model_;
    double dt_;
    const WeitzenbockEndomorphism* endo_;
    DampedForm form_;
    bool flat_;
    bool driftless_;
    Vec x_;
    Mat frame_;
    Mat damped_;
    Mat r_;
};

/// Heun predictor-corrector for dX = A0 dt + A o dB, propagating the exact
/// derivative of the discrete flow map (TX) and optionally Xi by variation
/// of constants.
class ExtrinsicStepper {
public:
    ExtrinsicStepper(const ExtrinsicSystem& sys, double dt, bool with_jacobian, bool with_xi);

    void reset(const Vec& x0);
    void advance(const Vec& db);
    bool left_region(double safe_radius) const;

    const Vec& x() const { return x_; }
    const Mat& tx() const { return tx_; }
    const Mat& xi() const { return xi_; }
    /// Geometry at the current point.
    const ExtrinsicFrame& frame() const { return frame_; }
    /// Solves M y = u for u tangent at the current point and M one of TX, Xi,
    /// returning y tangent at the starting point.
    Vec solve_tx(const Vec& u) const;
    Vec solve_xi(const Vec& u) const;

private:
    Vec increment(const Vec& x, const Mat& a, const Vec& a0, const Vec& db) const;
    Mat increment_jacobian(const std::vector<Mat>& da, const Mat& da0, const Vec& db) const;
    Mat augmented(const Mat& m) const;

    const ExtrinsicSystem& sys_;
    double dt_;
    bool with_jacobian_;
    bool with_xi_;
    int n_;
    Vec x_;
    Mat tx_;
    Mat xi_;
    Mat s_;    // accumulated variation-of-constants integral
    Mat p0_;   // tangent projector at the start
    Mat nu0_;  // normal basis at the start
    ExtrinsicFrame frame_;
};

/// Endomorphism K = nabla^A0 + (nabla^A0)^* - tr(nabla^A0) of the Xi equation.
Mat xi_endomorphism(const ExtrinsicFrame& f);

/// Intrinsic path with frames recorded; theta left empty.
PathRecord simulate_intrinsic(const ManifoldModel& model, const Vec& x0, const SimulationOptions& opts,
                              std::uint64_t seed, std::uint64_t path_index = 0);

/// Theta (right form) or Q (left form) along a recorded intrinsic path.
std::vector<Mat> integrate_damped_transport(const PathRecord& path, const ManifoldModel& model,
                                            const WeitzenbockEndomorphism& endo);
std::vector<Mat> integrate_damped_transport(const PathRecord& path, const ManifoldModel& model,
                                            const WeitzenbockEndomorphism& endo, DampedForm form);

PathRecord simulate_extrinsic(const ExtrinsicSystem& sys, const Vec& x0, const SimulationOptions& opts,
                              std::uint64_t seed, bool with_jacobian, std::uint64_t path_index = 0);

/// Xi along a recorded extrinsic path (requires TX), by forward substitution
/// in the Volterra relation with left-rectangle quadrature.
std::vector<Mat> integrate_xi(const PathRecord& path, const ExtrinsicSystem& sys);

/// Left-point Ito sum sum_k integrand(k) dB_k.
Vec ito_integral(const PathRecord& path, const std::function<Mat(int)>& integrand);

/// One CSV row per step: t, X components, then diagnostics (radius,
/// frame orthonormality defect, ||theta||, ||TX||) where recorded.
void write_path_csv(std::ostream& out, const PathRecord& path);

}  // namespace semigroup
