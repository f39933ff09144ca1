#include "semigroup/pathsim.hpp"

#include "semigroup/errors.hpp"

#include <cmath>
#include <ostream>

namespace semigroup {

void SimulationOptions::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (!(safe_radius > 0.0)) throw ConfigError("safe_radius must be positive");
}

DampedForm default_form(EndomorphismVariant variant) {
    return variant == EndomorphismVariant::QGen ? DampedForm::Left : DampedForm::Right;
}

Mat damped_step(DampedForm form, const Mat& m, const Mat& r0, const Mat& r1, double dt) {
    if (form == DampedForm::Right) {
        const Mat k0 = r0 * m;
        const Mat predictor = m - dt * k0;
        return m - 0.5 * dt * (k0 + r1 * predictor);
    }
    const Mat k0 = m * r0;
    const Mat predictor = m - dt * k0;
    return m - 0.5 * dt * (k0 + predictor * r1);
}

// ---------------------------------------------------------------------------
// Intrinsic

IntrinsicStepper::IntrinsicStepper(const ManifoldModel& model, double dt, const WeitzenbockEndomorphism* endo,
                                   DampedForm form)
    : model_(model),
      dt_(dt),
      endo_(endo),
      form_(form),
      flat_(model.is_flat_euclidean()),
      driftless_(model.driftless()) {}

void IntrinsicStepper::reset(const Vec& x0) {
    x_ = model_.project(x0);
    frame_ = model_.initial_frame(x_);
    damped_ = identity(model_.dim());
    if (endo_) r_ = endo_->in_frame(x_, frame_);
}

void IntrinsicStepper::advance(const Vec& db) {
    if (flat_) {
        // The frame of R^n is transported trivially and stays the identity.
        if (driftless_) {
            x_ += db;
        } else {
            const Vec z0 = model_.drift(x_);
            const Vec predictor = x_ + db + z0 * dt_;
            x_ += db + 0.5 * dt_ * (z0 + model_.drift(predictor));
        }
    } else {
        const Vec dx0 = frame_ * db + (driftless_ ? Vec(Vec::Zero(x_.size())) : Vec(model_.drift(x_) * dt_));
        const Mat du0 = model_.transport_increment(x_, dx0, frame_);
        const Vec x1 = model_.project(x_ + dx0);
        const Mat u1 = frame_ + du0;
        const Vec dx1 = u1 * db + (driftless_ ? Vec(Vec::Zero(x_.size())) : Vec(model_.drift(x1) * dt_));
        const Mat du1 = model_.transport_increment(x1, dx1, u1);
        const Vec xn = model_.project(x_ + 0.5 * (dx0 + dx1));
        frame_ = model_.reorthonormalize(xn, frame_ + 0.5 * (du0 + du1));
        x_ = xn;
    }
    if (endo_) {
        const Mat r1 = endo_->in_frame(x_, frame_);
        damped_ = damped_step(form_, damped_, r_, r1, dt_);
        r_ = r1;
    }
}

bool IntrinsicStepper::left_region(double safe_radius) const {
    return !x_.allFinite() || x_.norm() > safe_radius;
}

PathRecord simulate_intrinsic(const ManifoldModel& model, const Vec& x0, const SimulationOptions& opts,
                              std::uint64_t seed, std::uint64_t path_index) {
    opts.validate();
    if (x0.size() != model.ambient_dim())
        throw ConfigError("starting point has " + std::to_string(x0.size()) + " coordinates, model needs " +
                          std::to_string(model.ambient_dim()));
    PathRecord path;
    path.T = opts.T;
    path.steps = opts.steps;
    path.dt = opts.dt();
    path.seed = seed;
    path.path_index = path_index;
    PathRng rng(seed, path_index);
    IntrinsicStepper stepper(model, path.dt);
    stepper.reset(x0);
    path.times.push_back(0.0);
    path.X.push_back(stepper.x());
    path.frame.push_back(stepper.frame());
    Vec db;
    for (int k = 0; k < opts.steps; ++k) {
        rng.increment(db, model.dim(), path.dt);
        path.dB.push_back(db);
        stepper.advance(db);
        path.times.push_back((k + 1) * path.dt);
        path.X.push_back(stepper.x());
        path.frame.push_back(stepper.frame());
        if (stepper.left_region(opts.safe_radius)) {
            path.exploded = true;
            path.explosion_step = k + 1;
            break;
        }
    }
    return path;
}

std::vector<Mat> integrate_damped_transport(const PathRecord& path, const ManifoldModel& model,
                                            const WeitzenbockEndomorphism& endo, DampedForm form) {
    if (path.frame.size() != path.X.size()) throw ConfigError("damped transport needs an intrinsic path with frames");
    std::vector<Mat> out;
    out.reserve(path.X.size());
    out.push_back(identity(model.dim()));
    Mat r0 = endo.in_frame(path.X[0], path.frame[0]);
    for (std::size_t k = 0; k + 1 < path.X.size(); ++k) {
        const Mat r1 = endo.in_frame(path.X[k + 1], path.frame[k + 1]);
        out.push_back(damped_step(form, out.back(), r0, r1, path.dt));
        r0 = r1;
    }
    return out;
}

std::vector<Mat> integrate_damped_transport(const PathRecord& path, const ManifoldModel& model,
                                            const WeitzenbockEndomorphism& endo) {
    return integrate_damped_transport(path, model, endo, default_form(endo.variant()));
}

// ---------------------------------------------------------------------------
// Extrinsic

Mat xi_endomorphism(const ExtrinsicFrame& f) {
    const Mat nh = adjoint_nabla_A0_matrix(f);
    return nh + f.adjoint(nh) - nh.trace() * f.p;
}

ExtrinsicStepper::ExtrinsicStepper(const ExtrinsicSystem& sys, double dt, bool with_jacobian, bool with_xi)
    : sys_(sys), dt_(dt), with_jacobian_(with_jacobian || with_xi), with_xi_(with_xi), n_(sys.ambient_dim()) {}

void ExtrinsicStepper::reset(const Vec& x0) {
    x_ = sys_.project(x0);
    tx_ = identity(n_);
    p0_ = sys_.tangent_projector(x_);
    nu0_ = sys_.normal_basis(x_);
    xi_ = p0_;
    s_ = Mat::Zero(n_, n_);
    frame_ = evaluate_frame(sys_, x_);
}

Vec ExtrinsicStepper::increment(const Vec&, const Mat& a, const Vec& a0, const Vec& db) const {
    return sys_.driftless() ? Vec(a * db) : Vec(a0 * dt_ + a * db);
}

Mat ExtrinsicStepper::increment_jacobian(const std::vector<Mat>& da, const Mat& da0, const Vec& db) const {
    Mat j = sys_.driftless() ? Mat(Mat::Zero(n_, n_)) : Mat(da0 * dt_);
    for (int k = 0; k < n_; ++k) j.col(k) += da[k] * db;
    return j;
}

void ExtrinsicStepper::advance(const Vec& db) {
    const Vec inc0 = increment(x_, frame_.a, frame_.a0, db);
    const Vec ya = x_ + inc0;
    const Vec xt = sys_.project(ya);
    const Vec a0t = sys_.driftless() ? Vec(Vec::Zero(n_)) : sys_.A0(xt);
    const Vec inc1 = increment(xt, sys_.A(xt), a0t, db);
    const Vec yb = x_ + 0.5 * (inc0 + inc1);
    Mat tx_next;
    if (with_jacobian_) {
        const Mat d0 = increment_jacobian(frame_.da, frame_.da0, db);
        const Mat dxt = sys_.projection_jacobian(ya) * (identity(n_) + d0);
        const Mat d1 = increment_jacobian(sys_.dA(xt), sys_.driftless() ? Mat(Mat::Zero(n_, n_)) : sys_.dA0(xt), db);
        tx_next = sys_.projection_jacobian(yb) * (identity(n_) + 0.5 * (d0 + d1 * dxt)) * tx_;
    }
    if (with_xi_ && !sys_.driftless())
        s_ += augmented(tx_).partialPivLu().solve(Mat(xi_endomorphism(frame_) * xi_)) * dt_;
    x_ = sys_.project(yb);
    if (with_jacobian_) tx_ = tx_next;
    if (!x_.allFinite()) return;
    frame_ = evaluate_frame(sys_, x_);
    if (with_xi_) xi_ = tx_ * (p0_ - s_);
}

bool ExtrinsicStepper::left_region(double safe_radius) const {
    return !x_.allFinite() || x_.norm() > safe_radius;
}

Mat ExtrinsicStepper::augmented(const Mat& m) const {
    Mat out = m * p0_;
    if (nu0_.cols() > 0) out += sys_.normal_basis(x_) * nu0_.transpose();
    return out;
}

Vec ExtrinsicStepper::solve_tx(const Vec& u) const { return augmented(tx_).partialPivLu().solve(u); }

Vec ExtrinsicStepper::solve_xi(const Vec& u) const { return augmented(xi_).partialPivLu().solve(u); }

PathRecord simulate_extrinsic(const ExtrinsicSystem& sys, const Vec& x0, const SimulationOptions& opts,
                              std::uint64_t seed, bool with_jacobian, std::uint64_t path_index) {
    opts.validate();
    if (x0.size() != sys.ambient_dim())
        throw ConfigError("starting point has " + std::to_string(x0.size()) + " coordinates, system needs " +
                          std::to_string(sys.ambient_dim()));
    PathRecord path;
    path.T = opts.T;
    path.steps = opts.steps;
    path.dt = opts.dt();
    path.seed = seed;
    path.path_index = path_index;
    PathRng rng(seed, path_index);
    ExtrinsicStepper stepper(sys, path.dt, with_jacobian, false);
    stepper.reset(x0);
    path.times.push_back(0.0);
    path.X.push_back(stepper.x());
    if (with_jacobian) path.tx.push_back(stepper.tx());
    Vec db;
    for (int k = 0; k < opts.steps; ++k) {
        rng.increment(db, sys.noise_dim(), path.dt);
        path.dB.push_back(db);
        stepper.advance(db);
        path.times.push_back((k + 1) * path.dt);
        path.X.push_back(stepper.x());
        if (with_jacobian) {
            path.tx.push_back(stepper.tx());
            if (stepper.tx().cwiseAbs().maxCoeff() > opts.jacobian_bound) path.conditioning_warning = true;
        }
        if (stepper.left_region(opts.safe_radius)) {
            path.exploded = true;
            path.explosion_step = k + 1;
            break;
        }
    }
    return path;
}

std::vector<Mat> integrate_xi(const PathRecord& path, const ExtrinsicSystem& sys) {
    if (path.tx.size() != path.X.size()) throw ConfigError("Xi needs a path simulated with its Jacobian flow");
    const int n = sys.ambient_dim();
    const Mat p0 = sys.tangent_projector(path.X[0]);
    const Mat nu0 = sys.normal_basis(path.X[0]);
    Mat s = Mat::Zero(n, n);
    std::vector<Mat> xi;
    xi.reserve(path.X.size());
    xi.push_back(p0);
    for (std::size_t k = 0; k + 1 < path.X.size(); ++k) {
        if (!sys.driftless()) {
            const ExtrinsicFrame f = evaluate_frame(sys, path.X[k]);
            Mat aug = path.tx[k] * p0;
            if (nu0.cols() > 0) aug += sys.normal_basis(path.X[k]) * nu0.transpose();
            Eigen::PartialPivLU<Mat> lu(aug);
            if (!(std::abs(lu.determinant()) > 1e-300)) throw ConditioningError("TX is singular along the path");
            s += lu.solve(Mat(xi_endomorphism(f) * xi.back())) * path.dt;
        }
        xi.push_back(path.tx[k + 1] * (p0 - s));
    }
    return xi;
}

Vec ito_integral(const PathRecord& path, const std::function<Mat(int)>& integrand) {
    Vec sum;
    for (std::size_t k = 0; k < path.dB.size(); ++k) {
        const Vec term = integrand(static_cast<int>(k)) * path.dB[k];
        if (k == 0) sum = term;
        else sum += term;
    }
    return sum;
}

void write_path_csv(std::ostream& out, const PathRecord& path) {
    const Eigen::Index dim = path.X.empty() ? 0 : path.X[0].size();
    const bool frames = path.frame.size() == path.X.size();
    const bool theta = path.theta.size() == path.X.size();
    const bool tx = path.tx.size() == path.X.size();
    out << "t";
    for (Eigen::Index i = 0; i < dim; ++i) out << ",x" << (i + 1);
    out << ",radius";
    if (frames) out << ",frame_defect";
    if (theta) out << ",theta_norm";
    if (tx) out << ",tx_norm";
    out << '\n';
    const auto old = out.precision(17);
    for (std::size_t k = 0; k < path.X.size(); ++k) {
        out << path.times[k];
        for (Eigen::Index i = 0; i < dim; ++i) out << ',' << path.X[k](i);
        out << ',' << path.X[k].norm();
        if (frames) out << ',' << orthonormality_defect(path.frame[k]);
        if (theta) out << ',' << path.theta[k].norm();
        if (tx) out << ',' << path.tx[k].norm();
        out << '\n';
    }
    out.precision(old);
}

}  // namespace semigroup
