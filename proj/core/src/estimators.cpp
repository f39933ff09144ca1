#include "semigroup/estimators.hpp"

#include "semigroup/errors.hpp"
#include "semigroup/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace semigroup {

SimulationOptions EstimatorConfig::simulation() const {
    SimulationOptions opts;
    opts.T = T;
    opts.steps = steps;
    opts.safe_radius = safe_radius;
    return opts;
}

void EstimatorConfig::validate() const {
    simulation().validate();
    if (samples < 2) throw ConfigError("samples must be at least 2");
    if (workers < 0) throw ConfigError("workers must be non-negative");
    if (!(min_ess > 0.0)) throw ConfigError("min_ess must be positive");
}

RateGrid RateGrid::make(const RateProcess& rate, double T, int steps) {
    RateGrid g;
    g.steps = steps;
    g.dt = T / steps;
    g.h.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) g.h[k] = rate(k == steps ? T : k * g.dt);
    g.hdot.resize(steps);
    for (int k = 0; k < steps; ++k) g.hdot[k] = (g.h[k + 1] - g.h[k]) / g.dt;
    return g;
}

ConditioningMode parse_conditioning_mode(const std::string& text) {
    if (text == "exact-bridge") return ConditioningMode::ExactBridge;
    if (text == "kernel") return ConditioningMode::Kernel;
    throw ConfigError("unknown conditioning mode '" + text + "' (expected exact-bridge or kernel)");
}

// ---------------------------------------------------------------------------
// Gates

void check_martingale_gate(const ManifoldModel& model, const EstimatorConfig& cfg, bool curvature_only) {
    if (cfg.override_gate) return;
    const ModelBounds& b = model.bounds();
    if (!b.curvature_lower_bound) throw GateRefusal("curvature_lower_bound");
    if (curvature_only) return;
    if (!b.ricci_drift_bound) throw GateRefusal("ricci_drift_bound");
    if (!b.div_drift_bound) throw GateRefusal("div_drift_bound");
}

void check_martingale_gate(const ExtrinsicSystem& sys, const EstimatorConfig& cfg) {
    if (cfg.override_gate) return;
    if (!sys.martingale_bounds_declared()) throw GateRefusal("bounded extrinsic coefficients");
}

namespace {

void check_point(const Vec& x, int expected, const char* what) {
    if (x.size() != expected)
        throw ConfigError(std::string(what) + " has " + std::to_string(x.size()) + " coordinates, expected " +
                          std::to_string(expected));
    if (!x.allFinite()) throw ConfigError(std::string(what) + " must be finite");
}

bool trivial_theta(const ManifoldModel& model) { return model.is_flat_euclidean() && model.driftless(); }

}  // namespace

// ---------------------------------------------------------------------------
// Plain expectations

MCEstimate expectation(const ManifoldModel& model, const ScalarFunction& g, const Vec& x,
                       const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, model.ambient_dim(), "x");
    const double dt = cfg.T / cfg.steps;
    const int n = model.dim();
    auto fn = [&](std::size_t path, double* out) {
        PathRng rng(cfg.seed, path);
        IntrinsicStepper stepper(model, dt);
        stepper.reset(x);
        Vec db;
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(db, n, dt);
            stepper.advance(db);
            if (stepper.left_region(cfg.safe_radius)) return false;
        }
        out[0] = g(stepper.x());
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

MCEstimate expectation(const ExtrinsicSystem& sys, const ScalarFunction& g, const Vec& x,
                       const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, sys.ambient_dim(), "x");
    const double dt = cfg.T / cfg.steps;
    auto fn = [&](std::size_t path, double* out) {
        PathRng rng(cfg.seed, path);
        ExtrinsicStepper stepper(sys, dt, false, false);
        stepper.reset(x);
        Vec db;
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(db, sys.noise_dim(), dt);
            stepper.advance(db);
            if (stepper.left_region(cfg.safe_radius)) return false;
        }
        out[0] = g(stepper.x());
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

// ---------------------------------------------------------------------------
// Backward formula

MCEstimate bismut_backward_gradient(const ManifoldModel& model, const ScalarFunction& f, const Vec& x,
                                    const Vec& v, const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, model.ambient_dim(), "x");
    check_point(v, model.ambient_dim(), "v");
    const RateProcess rate = cfg.rate();
    rate.require_unit_endpoints(cfg.T, "backward gradient, l = (1 - h) v");
    check_martingale_gate(model, cfg, true);
    const RateGrid grid = RateGrid::make(rate, cfg.T, cfg.steps);
    const WeitzenbockEndomorphism q = weitzenbock_endomorphism(model, EndomorphismVariant::QGen);
    const bool trivial = trivial_theta(model);
    const int n = model.dim();
    auto fn = [&](std::size_t path, double* out) {
        PathRng rng(cfg.seed, path);
        IntrinsicStepper stepper(model, grid.dt, trivial ? nullptr : &q, DampedForm::Left);
        stepper.reset(x);
        const Vec v_frame = stepper.frame().transpose() * v;
        double integral = 0.0;
        Vec db;
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(db, n, grid.dt);
            const Vec w = trivial ? v_frame : Vec(stepper.damped().transpose() * v_frame);
            integral += grid.hdot[k] * w.dot(db);
            stepper.advance(db);
            if (stepper.left_region(cfg.safe_radius)) return false;
        }
        out[0] = 0.5 * f(stepper.x()) * integral;
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

MCEstimate bismut_backward_gradient(const ExtrinsicSystem& sys, const ScalarFunction& f, const Vec& x,
                                    const Vec& v, const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, sys.ambient_dim(), "x");
    check_point(v, sys.ambient_dim(), "v");
    const RateProcess rate = cfg.rate();
    rate.require_unit_endpoints(cfg.T, "backward gradient, l = (1 - h) v");
    check_martingale_gate(sys, cfg);
    const RateGrid grid = RateGrid::make(rate, cfg.T, cfg.steps);
    auto fn = [&](std::size_t path, double* out) {
        PathRng rng(cfg.seed, path);
        ExtrinsicStepper stepper(sys, grid.dt, true, false);
        stepper.reset(x);
        double integral = 0.0;
        Vec db;
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(db, sys.noise_dim(), grid.dt);
            // <TX l_dot, A dB>_g = (A* TX l_dot) . dB with l_dot = -hdot v
            integral += grid.hdot[k] * (stepper.frame().a_star * (stepper.tx() * v)).dot(db);
            stepper.advance(db);
            if (stepper.left_region(cfg.safe_radius)) return false;
        }
        out[0] = 0.5 * f(stepper.x()) * integral;
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

// ---------------------------------------------------------------------------
// Divergence formula

bool intrinsic_weight_path(const ManifoldModel& model, const WeitzenbockEndomorphism& theta, const Vec& x,
                           const EstimatorConfig& cfg, const RateGrid& grid, std::uint64_t path,
                           WeightSample& out) {
    const bool trivial = trivial_theta(model);
    const bool driftless = model.driftless();
    const int n = model.dim();
    PathRng rng(cfg.seed, path);
    IntrinsicStepper stepper(model, grid.dt, trivial ? nullptr : &theta, DampedForm::Right);
    stepper.reset(x);
    Vec integral = Vec::Zero(n);
    Vec db;
    for (int k = 0; k < grid.steps; ++k) {
        rng.increment(db, n, grid.dt);
        const double w = grid.hdot[k] - (driftless ? 0.0 : model.div_drift(stepper.x()) * grid.h[k]);
        if (trivial) integral += w * db;
        else integral += w * stepper.damped().partialPivLu().solve(db);
        stepper.advance(db);
        if (stepper.left_region(cfg.safe_radius)) return false;
    }
    out.x_T = stepper.x();
    out.weight = trivial ? Vec(integral) : Vec(stepper.frame() * (stepper.damped() * integral));
    return true;
}

namespace {

RateGrid divergence_grid(const EstimatorConfig& cfg) {
    const RateProcess rate = cfg.rate();
    rate.require_unit_endpoints(cfg.T, "divergence formula");
    return RateGrid::make(rate, cfg.T, cfg.steps);
}

}  // namespace

MCEstimate divergence_expectation(const ManifoldModel& model, const VectorField& V, const Vec& x,
                                  const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, model.ambient_dim(), "x");
    const RateGrid grid = divergence_grid(cfg);
    check_martingale_gate(model, cfg);
    const WeitzenbockEndomorphism theta = weitzenbock_endomorphism(model, EndomorphismVariant::ThetaGen);
    auto fn = [&](std::size_t path, double* out) {
        WeightSample s;
        if (!intrinsic_weight_path(model, theta, x, cfg, grid, path, s)) return false;
        out[0] = 0.5 * V(s.x_T).dot(s.weight);
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

MCEstimate ptvf_intrinsic(const ManifoldModel& model, const ScalarFunction& f, const VectorField& V,
                          const Vec& x, const EstimatorConfig& cfg, const ScalarFunction& div_V) {
    cfg.validate();
    check_point(x, model.ambient_dim(), "x");
    const RateGrid grid = divergence_grid(cfg);
    check_martingale_gate(model, cfg);
    const WeitzenbockEndomorphism theta = weitzenbock_endomorphism(model, EndomorphismVariant::ThetaGen);
    auto fn = [&](std::size_t path, double* out) {
        WeightSample s;
        if (!intrinsic_weight_path(model, theta, x, cfg, grid, path, s)) return false;
        const double fx = f(s.x_T);
        const double div = div_V ? div_V(s.x_T) : model.divergence(V, s.x_T);
        out[0] = -fx * div + 0.5 * fx * V(s.x_T).dot(s.weight);
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

namespace {

struct XiSample {
    Vec x_T;
    Vec weight;  // Xi_T int Xi^{-1}((hdot - tr h) A dB + 2 h A0^A dt)
};

bool extrinsic_weight_path(const ExtrinsicSystem& sys, const Vec& x, const EstimatorConfig& cfg,
                           const RateGrid& grid, std::uint64_t path, XiSample& out) {
    PathRng rng(cfg.seed, path);
    ExtrinsicStepper stepper(sys, grid.dt, true, true);
    stepper.reset(x);
    const bool driftless = sys.driftless();
    Vec integral = Vec::Zero(sys.ambient_dim());
    Vec db;
    for (int k = 0; k < grid.steps; ++k) {
        rng.increment(db, sys.noise_dim(), grid.dt);
        const ExtrinsicFrame& f = stepper.frame();
        Vec term;
        if (driftless) {
            term = grid.hdot[k] * (f.a * db);
        } else {
            const double tr = trace_adjoint_nabla_A0(f);
            term = (grid.hdot[k] - tr * grid.h[k]) * (f.a * db) + 2.0 * grid.h[k] * grid.dt * a0A_field(sys, f);
        }
        integral += stepper.solve_xi(term);
        stepper.advance(db);
        if (stepper.left_region(cfg.safe_radius)) return false;
    }
    out.x_T = stepper.x();
    out.weight = stepper.xi() * integral;
    return true;
}

}  // namespace

MCEstimate ptvf_extrinsic(const ExtrinsicSystem& sys, const ScalarFunction& f, const VectorField& V,
                          const Vec& x, const EstimatorConfig& cfg) {
    cfg.validate();
    check_point(x, sys.ambient_dim(), "x");
    const RateGrid grid = divergence_grid(cfg);
    check_martingale_gate(sys, cfg);
    auto fn = [&](std::size_t path, double* out) {
        XiSample s;
        if (!extrinsic_weight_path(sys, x, cfg, grid, path, s)) return false;
        const double fx = f(s.x_T);
        const ExtrinsicFrame frame = evaluate_frame(sys, s.x_T);
        out[0] = fx * hat_delta_vector(sys, V, s.x_T) + 0.5 * fx * frame.inner(V(s.x_T), s.weight);
        return true;
    };
    return summarize(collect_samples(cfg.samples, 1, cfg.workers, fn), cfg.seed);
}

// ---------------------------------------------------------------------------
// Forward log-gradient

namespace {

// Samples hold the weight (first `width` columns) followed by X_T.
LogGradientEstimate kernel_condition(const SampleMatrix& samples, std::size_t width, const Vec& y,
                                     const EstimatorConfig& cfg, int intrinsic_dim) {
    const std::size_t n = samples.samples;
    const std::size_t dim = static_cast<std::size_t>(y.size());
    double bandwidth = cfg.bandwidth;
    if (!(bandwidth > 0.0)) {
        const MCEstimate spread = summarize(samples, cfg.seed, width, dim);
        double sigma = 0.0;
        for (std::size_t i = 0; i < dim; ++i) sigma += spread.std_error[i] * std::sqrt(static_cast<double>(n));
        sigma /= static_cast<double>(dim);
        bandwidth = 1.06 * sigma * std::pow(static_cast<double>(n), -1.0 / (intrinsic_dim + 4));
    }
    std::vector<double> d2(n);
    double d2_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = samples(j, width + i) - y(static_cast<Eigen::Index>(i));
            s += d * d;
        }
        d2[j] = s;
        d2_min = std::min(d2_min, s);
    }
    std::vector<double> w(n), w2(n);
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = std::exp(-(d2[j] - d2_min) / (2.0 * bandwidth * bandwidth));
        w2[j] = w[j] * w[j];
    }
    const double sw = pairwise_sum(w.data(), n);
    const double sw2 = pairwise_sum(w2.data(), n);
    const double ess = sw * sw / sw2;
    if (!(ess >= cfg.min_ess)) throw InsufficientConditioningError(ess, cfg.min_ess);

    LogGradientEstimate result;
    result.mode = ConditioningMode::Kernel;
    result.bandwidth = bandwidth;
    result.effective_samples = ess;
    result.gradient.samples = n;
    result.gradient.seed = cfg.seed;
    std::vector<double> buf(n);
    for (std::size_t c = 0; c < width; ++c) {
        for (std::size_t j = 0; j < n; ++j) buf[j] = w[j] * samples(j, c);
        const double mean = pairwise_sum(buf.data(), n) / sw;
        for (std::size_t j = 0; j < n; ++j) {
            const double r = w[j] * (samples(j, c) - mean);
            buf[j] = r * r;
        }
        result.gradient.mean.push_back(mean);
        result.gradient.std_error.push_back(std::sqrt(pairwise_sum(buf.data(), n)) / sw);
    }
    return result;
}

LogGradientEstimate exact_bridge(int n, const Vec& x, const Vec& y, const EstimatorConfig& cfg) {
    const RateGrid grid = RateGrid::make(cfg.rate(), cfg.T, cfg.steps);
    const Vec target = y - x;
    auto fn = [&](std::size_t path, double* out) {
        PathRng rng(cfg.seed, path);
        std::vector<Vec> dw(cfg.steps);
        Vec w_T = Vec::Zero(n);
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(dw[k], n, grid.dt);
            w_T += dw[k];
        }
        // Bridge increments: dB_k = dW_k - (dt / T)(W_T - (y - x)).
        const Vec shift = (grid.dt / cfg.T) * (w_T - target);
        Vec integral = Vec::Zero(n);
        for (int k = 0; k < cfg.steps; ++k) integral += grid.hdot[k] * (dw[k] - shift);
        for (int i = 0; i < n; ++i) out[i] = -0.5 * integral(i);
        return true;
    };
    LogGradientEstimate result;
    result.mode = ConditioningMode::ExactBridge;
    result.gradient = summarize(collect_samples(cfg.samples, n, cfg.workers, fn), cfg.seed);
    result.effective_samples = static_cast<double>(cfg.samples);
    return result;
}

}  // namespace

LogGradientEstimate forward_log_gradient(const ManifoldModel& model, const Vec& x, const Vec& y,
                                         const EstimatorConfig& cfg, ConditioningMode mode) {
    cfg.validate();
    check_point(x, model.ambient_dim(), "x");
    check_point(y, model.ambient_dim(), "y");
    const RateGrid grid = divergence_grid(cfg);
    check_martingale_gate(model, cfg);
    if (mode == ConditioningMode::ExactBridge) {
        if (!trivial_theta(model))
            throw ConfigError("exact-bridge conditioning requires a flat driftless Euclidean model");
        return exact_bridge(model.dim(), x, y, cfg);
    }
    const WeitzenbockEndomorphism theta = weitzenbock_endomorphism(model, EndomorphismVariant::ThetaGen);
    const int N = model.ambient_dim();
    auto fn = [&](std::size_t path, double* out) {
        WeightSample s;
        if (!intrinsic_weight_path(model, theta, x, cfg, grid, path, s)) return false;
        for (int i = 0; i < N; ++i) {
            out[i] = -0.5 * s.weight(i);
            out[N + i] = s.x_T(i);
        }
        return true;
    };
    const SampleMatrix samples = collect_samples(cfg.samples, 2 * N, cfg.workers, fn);
    return kernel_condition(samples, N, y, cfg, model.dim());
}

LogGradientEstimate forward_log_gradient(const ExtrinsicSystem& sys, const Vec& x, const Vec& y,
                                         const EstimatorConfig& cfg, ConditioningMode mode) {
    cfg.validate();
    check_point(x, sys.ambient_dim(), "x");
    check_point(y, sys.ambient_dim(), "y");
    const RateGrid grid = divergence_grid(cfg);
    check_martingale_gate(sys, cfg);
    if (mode == ConditioningMode::ExactBridge) {
        const bool flat_identity = sys.constant_bundle_map() && sys.driftless() &&
                                   sys.ambient_dim() == sys.dim() && sys.noise_dim() == sys.dim() &&
                                   sys.A(x).isApprox(identity(sys.dim()));
        if (!flat_identity)
            throw ConfigError("exact-bridge conditioning requires the flat driftless identity system");
        return exact_bridge(sys.dim(), x, y, cfg);
    }
    const int N = sys.ambient_dim();
    auto fn = [&](std::size_t path, double* out) {
        XiSample s;
        if (!extrinsic_weight_path(sys, x, cfg, grid, path, s)) return false;
        for (int i = 0; i < N; ++i) {
            out[i] = -0.5 * s.weight(i);
            out[N + i] = s.x_T(i);
        }
        return true;
    };
    const SampleMatrix samples = collect_samples(cfg.samples, 2 * N, cfg.workers, fn);
    LogGradientEstimate result = kernel_condition(samples, N, y, cfg, sys.dim());
    // Deterministic term: the contorsion sum at y.
    const Vec c = contorsion_sum(sys, y);
    for (int i = 0; i < N; ++i) result.gradient.mean[i] += c(i);
    return result;
}

Vec lebesgue_log_density_correction(const ExtrinsicSystem& sys, const Vec& y) {
    if (sys.ambient_dim() != sys.dim()) throw ConfigError("the Lebesgue density correction needs a flat chart");
    const int n = sys.dim();
    const double h = fd_step(y);
    Vec out(n);
    for (int k = 0; k < n; ++k) {
        Vec e = Vec::Zero(n);
        e(k) = h;
        out(k) = 0.5 * (std::log(density_rho(sys, y + e)) - std::log(density_rho(sys, y - e))) / (2.0 * h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feynman-Kac commutation

FeynmanKacReport feynman_kac_div_check(const ManifoldModel& model, const OneForm& alpha, const Vec& x,
                                       const EstimatorConfig& cfg, const ScalarFunction& div_alpha,
                                       double stencil) {
    cfg.validate();
    if (!model.is_flat_euclidean())
        throw ConfigError("the Feynman-Kac divergence check is implemented for Euclidean models");
    check_point(x, model.ambient_dim(), "x");
    if (!(stencil > 0.0)) throw ConfigError("stencil must be positive");
    check_martingale_gate(model, cfg);
    const int n = model.dim();
    const double dt = cfg.T / cfg.steps;
    const WeitzenbockEndomorphism theta = weitzenbock_endomorphism(model, EndomorphismVariant::ThetaGen);
    const bool trivial = trivial_theta(model);
    const double eps = stencil * std::max(1.0, x.norm());

    auto div_of_alpha = [&](const Vec& p) {
        if (div_alpha) return div_alpha(p);
        if (alpha.jacobian) return alpha.jacobian(p).trace();
        double s = 0.0;
        const double h = fd_step(p);
        for (int i = 0; i < n; ++i) {
            Vec e = Vec::Zero(n);
            e(i) = h;
            s += (alpha(p + e)(i) - alpha(p - e)(i)) / (2.0 * h);
        }
        return s;
    };

    // Runs the stream of `path` from `start`; returns alpha(X_t) pulled back by
    // Theta_t, plus the Feynman-Kac weight when requested.
    auto run = [&](std::size_t path, const Vec& start, Vec& pulled, double* rhs) {
        PathRng rng(cfg.seed, path);
        IntrinsicStepper stepper(model, dt, trivial ? nullptr : &theta, DampedForm::Right);
        stepper.reset(start);
        double potential = 0.0;
        double div_prev = model.div_drift(stepper.x());
        Vec db;
        for (int k = 0; k < cfg.steps; ++k) {
            rng.increment(db, n, dt);
            stepper.advance(db);
            if (stepper.left_region(cfg.safe_radius)) return false;
            const double div_next = model.div_drift(stepper.x());
            potential += 0.5 * (div_prev + div_next) * dt;
            div_prev = div_next;
        }
        pulled = stepper.damped().transpose() * alpha(stepper.x());
        if (rhs) *rhs = div_of_alpha(stepper.x()) * std::exp(potential);
        return true;
    };

    auto fn = [&](std::size_t path, double* out) {
        double lhs = 0.0;
        Vec plus, minus;
        for (int i = 0; i < n; ++i) {
            Vec e = Vec::Zero(n);
            e(i) = eps;
            if (!run(path, x + e, plus, nullptr) || !run(path, x - e, minus, nullptr)) return false;
            lhs += (plus(i) - minus(i)) / (2.0 * eps);
        }
        Vec centre;
        double rhs = 0.0;
        if (!run(path, x, centre, &rhs)) return false;
        out[0] = lhs;
        out[1] = rhs;
        return true;
    };
    const SampleMatrix samples = collect_samples(cfg.samples, 2, cfg.workers, fn);
    FeynmanKacReport report;
    report.lhs = summarize(samples, cfg.seed, 0, 1);
    report.rhs = summarize(samples, cfg.seed, 1, 1);
    report.gap = report.lhs.value() - report.rhs.value();
    report.combined_se = std::hypot(report.lhs.se(), report.rhs.se());
    report.stencil = eps;
    report.noise_conflict = report.lhs.se() > std::abs(report.lhs.value());
    return report;
}

}  // namespace semigroup
