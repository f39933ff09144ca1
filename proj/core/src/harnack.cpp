#include "semigroup/harnack.hpp"

#include "semigroup/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace semigroup {

Vec DiffeoFamily::field(double s, const Vec& y) const {
    const Mat J = dF(s, y);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) throw DomainError("family '" + name + "' has a singular Jacobian at s = " + std::to_string(s));
    return lu.solve(Fdot(s, y));
}

VectorField DiffeoFamily::field_at(double s) const {
    DiffeoFamily copy = *this;
    return VectorField{[copy, s](const Vec& y) { return copy.field(s, y); }, {}};
}

DiffeoFamily DiffeoFamily::identity(int dim) {
    DiffeoFamily f;
    f.name = "identity";
    f.F = [](double, const Vec& y) { return y; };
    f.dF = [dim](double, const Vec&) { return semigroup::identity(dim); };
    f.Fdot = [dim](double, const Vec&) { return Vec(Vec::Zero(dim)); };
    f.constant_field = true;
    return f;
}

DiffeoFamily DiffeoFamily::translation(const Vec& r) {
    DiffeoFamily f;
    f.name = "translation";
    f.F = [r](double s, const Vec& y) { return Vec(y + s * r); };
    f.dF = [n = static_cast<int>(r.size())](double, const Vec&) { return semigroup::identity(n); };
    f.Fdot = [r](double, const Vec&) { return r; };
    f.constant_field = true;
    return f;
}

namespace {

std::vector<Vec> region_grid(const Region& region) {
    const int n = static_cast<int>(region.lo.size());
    if (region.hi.size() != n) throw ConfigError("region bounds have different dimensions");
    if (region.points_per_axis < 2) throw ConfigError("region needs at least 2 points per axis");
    std::vector<Vec> out;
    std::vector<int> idx(n, 0);
    while (true) {
        Vec p(n);
        for (int i = 0; i < n; ++i)
            p(i) = region.lo(i) + (region.hi(i) - region.lo(i)) * idx[i] / (region.points_per_axis - 1);
        out.push_back(p);
        int i = 0;
        while (i < n && ++idx[i] == region.points_per_axis) idx[i++] = 0;
        if (i == n) break;
    }
    return out;
}

}  // namespace

std::pair<double, double> resolve_sup_norms(const ManifoldModel& model, const VectorField& V,
                                            const FieldBounds& bounds) {
    double v_sup = bounds.v_sup.value_or(0.0);
    double div_sup = bounds.div_sup.value_or(0.0);
    if (bounds.v_sup && bounds.div_sup) return {v_sup, div_sup};
    if (!bounds.region) throw ConfigError("sup-norms of V and div V need either declared values or a region grid");
    for (const Vec& raw : region_grid(*bounds.region)) {
        const Vec y = model.project(raw);
        if (!bounds.v_sup) v_sup = std::max(v_sup, (model.tangent_projector(y) * V(y)).norm());
        if (!bounds.div_sup) div_sup = std::max(div_sup, std::abs(model.divergence(V, y)));
    }
    return {v_sup, div_sup};
}

AlphaMode parse_alpha_mode(const std::string& text) {
    if (text == "empirical") return AlphaMode::Empirical;
    if (text == "analytic") return AlphaMode::Analytic;
    throw ConfigError("unknown alpha mode '" + text + "' (expected empirical or analytic)");
}

std::string to_string(AlphaMode mode) { return mode == AlphaMode::Empirical ? "empirical" : "analytic"; }

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Holds: return "holds";
        case Verdict::ViolatedWithinNoise: return "violated-within-noise";
        case Verdict::Violated: return "violated";
    }
    return "holds";
}

HarnackForm parse_harnack_form(const std::string& text) {
    if (text == "power") return HarnackForm::Power;
    if (text == "l2") return HarnackForm::L2;
    throw ConfigError("unknown shift-Harnack form '" + text + "' (expected power or l2)");
}

std::string to_string(HarnackForm form) { return form == HarnackForm::Power ? "power" : "l2"; }

Verdict classify(double slack, double slack_se) {
    if (slack >= 0.0) return Verdict::Holds;
    if (-slack > 3.0 * slack_se) return Verdict::Violated;
    return Verdict::ViolatedWithinNoise;
}

std::vector<std::pair<double, double>> gauss_legendre_unit(int n) {
    if (n < 1) throw ConfigError("quadrature needs at least one node");
    std::vector<std::pair<double, double>> out(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / dp;
            z -= step;
            if (std::abs(step) < 1e-15) break;
        }
        // Map [-1, 1] to [0, 1], ascending.
        out[n - 1 - i] = {0.5 * (1.0 + z), 1.0 / ((1.0 - z * z) * dp * dp)};
    }
    return out;
}

namespace {

// Per-path columns shared by the checks.
struct PathColumns {
    SampleMatrix m;
    std::size_t n() const { return m.samples; }
    double mean(std::size_t c) const { return pairwise_sum(m.data.data() + c, m.samples, m.width) / m.samples; }
};

// Standard error of a smooth function of column means, from the per-path
// linearisation sum_c grad_c s_jc.
double delta_se(const PathColumns& cols, const std::vector<std::pair<std::size_t, double>>& grad) {
    std::vector<double> lin(cols.n(), 0.0);
    for (std::size_t j = 0; j < cols.n(); ++j)
        for (const auto& [c, g] : grad)
            if (g != 0.0) lin[j] += g * cols.m(j, c);
    return summarize_values(lin, 0).se();
}

MCEstimate point_estimate(double value, double se, const EstimatorConfig& cfg) {
    MCEstimate e;
    e.mean = {value};
    e.std_error = {se};
    e.samples = cfg.samples;
    e.seed = cfg.seed;
    return e;
}

void require_positive(double value, double f_lower) {
    if (!(value >= f_lower))
        throw DomainError("f = " + std::to_string(value) + " falls below its declared lower bound " +
                          std::to_string(f_lower));
}

void require_lower_bound(double f_lower) {
    if (!(f_lower > 0.0)) throw DomainError("f needs a declared positive lower bound, got " + std::to_string(f_lower));
}

// Each path: sample values of the divergence weight plus user columns.
template <class Fill>
PathColumns weight_columns(const ManifoldModel& model, const Vec& x, const EstimatorConfig& cfg, std::size_t width,
                           Fill fill) {
    cfg.validate();
    if (x.size() != model.ambient_dim()) throw ConfigError("x has the wrong dimension");
    const RateProcess rate = cfg.rate();
    rate.require_unit_endpoints(cfg.T, "Harnack divergence weight");
    check_martingale_gate(model, cfg);
    const RateGrid grid = RateGrid::make(rate, cfg.T, cfg.steps);
    const WeitzenbockEndomorphism theta = weitzenbock_endomorphism(model, EndomorphismVariant::ThetaGen);
    auto fn = [&](std::size_t path, double* out) {
        WeightSample s;
        if (!intrinsic_weight_path(model, theta, x, cfg, grid, path, s)) return false;
        fill(s, out);
        return true;
    };
    return PathColumns{collect_samples(cfg.samples, width, cfg.workers, fn)};
}

// Bound on E|int a_s Theta_s^{-1} dB|^2 from the declared bounds.
double analytic_psi_moment(const ManifoldModel& model, const EstimatorConfig& cfg) {
    const ModelBounds& b = model.bounds();
    if (!b.ricci_drift_bound || !b.div_drift_bound)
        throw ConfigError("analytic alpha constants need declared ricci_drift_bound and div_drift_bound");
    const double rho = std::abs(*b.ricci_drift_bound) + std::abs(*b.div_drift_bound);
    const double D = std::abs(*b.div_drift_bound);
    const RateGrid grid = RateGrid::make(cfg.rate(), cfg.T, cfg.steps);
    // E|int a_s Theta_s^{-1} dB|^2 <= 2 n int a_s^2 exp(2 rho s) ds with speed-2 noise.
    double integral = 0.0;
    for (int k = 0; k < grid.steps; ++k) {
        const double hmid = 0.5 * (grid.h[k] + grid.h[k + 1]);
        const double a = std::abs(grid.hdot[k]) + D * std::abs(hmid);
        integral += a * a * std::exp(2.0 * rho * (k + 0.5) * grid.dt) * grid.dt;
    }
    return 2.0 * model.dim() * integral;
}

}  // namespace

AlphaConstants alpha_constants(const ManifoldModel& model, const VectorField& V, const FieldBounds& bounds,
                               const Vec& x, double delta, AlphaMode mode, const EstimatorConfig& cfg) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    const auto [v_sup, div_sup] = resolve_sup_norms(model, V, bounds);
    AlphaConstants a;
    a.mode = mode;
    a.t = cfg.T;
    a.delta = delta;
    a.v_sup = v_sup;
    a.div_sup = div_sup;
    if (mode == AlphaMode::Analytic) {
        cfg.validate();
        const ModelBounds& b = model.bounds();
        const double sigma2 = analytic_psi_moment(model, cfg);
        const double rho = std::abs(*b.ricci_drift_bound) + std::abs(*b.div_drift_bound);
        const double growth = std::exp(2.0 * rho * cfg.T);  // |Theta_T|^2
        const double n = model.dim();
        a.c = std::log(2.0);
        // sigma2 / n bounds the quadratic variation of each component.
        a.C1_over_t = n * growth * sigma2 / 8.0;
        a.C2_over_sqrt_t = 0.5 * std::sqrt(growth * sigma2);
        a.alpha1 = div_sup + delta * a.c + a.C1_over_t * v_sup * v_sup / delta;
        a.alpha2 = div_sup + a.C2_over_sqrt_t * v_sup;
        return a;
    }
    const PathColumns cols = weight_columns(model, x, cfg, 2, [&](const WeightSample& s, double* out) {
        const double psi = s.weight.norm();
        out[0] = psi * psi;
        out[1] = std::exp(v_sup * psi / (2.0 * delta));
    });
    const double m2 = cols.mean(0);
    const double me = cols.mean(1);
    a.C2_over_sqrt_t = 0.5 * std::sqrt(m2);
    a.alpha2 = div_sup + a.C2_over_sqrt_t * v_sup;
    a.alpha1 = div_sup + delta * std::log(me);
    a.alpha2_se = delta_se(cols, {{0, m2 > 0.0 ? v_sup * 0.25 / std::sqrt(m2) : 0.0}});
    a.alpha1_se = delta_se(cols, {{1, delta / me}});
    return a;
}

HarnackReport entropy_gradient_check(const ManifoldModel& model, const ScalarFunction& f, double f_lower,
                                     const VectorField& V, const FieldBounds& bounds, const Vec& x, double delta,
                                     const EstimatorConfig& cfg) {
    require_lower_bound(f_lower);
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    const auto [v_sup, div_sup] = resolve_sup_norms(model, V, bounds);
    // Columns: ptvf sample, f, f log f, exp(|V| |Psi| / (2 delta)).
    const PathColumns cols = weight_columns(model, x, cfg, 4, [&](const WeightSample& s, double* out) {
        const double fx = f(s.x_T);
        require_positive(fx, f_lower);
        out[0] = -fx * model.divergence(V, s.x_T) + 0.5 * fx * V(s.x_T).dot(s.weight);
        out[1] = fx;
        out[2] = fx * std::log(fx);
        out[3] = std::exp(v_sup * s.weight.norm() / (2.0 * delta));
    });
    const double a = cols.mean(0), mf = cols.mean(1), mflogf = cols.mean(2), me = cols.mean(3);
    const double alpha1 = div_sup + delta * std::log(me);
    const double lhs = std::abs(a);
    const double rhs = delta * (mflogf - mf * std::log(mf)) + alpha1 * mf;
    const double sign = a >= 0.0 ? 1.0 : -1.0;
    const std::vector<std::pair<std::size_t, double>> g_rhs = {
        {1, -delta * (std::log(mf) + 1.0) + alpha1}, {2, delta}, {3, delta * mf / me}};
    auto g_slack = g_rhs;
    g_slack.push_back({0, -sign});

    HarnackReport r;
    r.form = "entropy";
    r.lhs = point_estimate(lhs, delta_se(cols, {{0, sign}}), cfg);
    r.rhs = point_estimate(rhs, delta_se(cols, g_rhs), cfg);
    r.slack = rhs - lhs;
    r.slack_se = delta_se(cols, g_slack);
    r.verdict = classify(r.slack, r.slack_se);
    r.nodes.push_back({0.0, 1.0, alpha1});
    return r;
}

HarnackReport l2_gradient_check(const ManifoldModel& model, const ScalarFunction& f, const VectorField& V,
                                const FieldBounds& bounds, const Vec& x, const EstimatorConfig& cfg) {
    const auto [v_sup, div_sup] = resolve_sup_norms(model, V, bounds);
    // Columns: ptvf sample, f^2, |Psi|^2.
    const PathColumns cols = weight_columns(model, x, cfg, 3, [&](const WeightSample& s, double* out) {
        const double fx = f(s.x_T);
        out[0] = -fx * model.divergence(V, s.x_T) + 0.5 * fx * V(s.x_T).dot(s.weight);
        out[1] = fx * fx;
        out[2] = s.weight.squaredNorm();
    });
    const double a = cols.mean(0), mf2 = cols.mean(1), m2 = cols.mean(2);
    const double alpha2 = div_sup + 0.5 * v_sup * std::sqrt(m2);
    const double lhs = a * a;
    const double rhs = alpha2 * alpha2 * mf2;
    const double d_alpha = m2 > 0.0 ? 0.25 * v_sup / std::sqrt(m2) : 0.0;
    const std::vector<std::pair<std::size_t, double>> g_rhs = {{1, alpha2 * alpha2},
                                                               {2, 2.0 * alpha2 * mf2 * d_alpha}};
    auto g_slack = g_rhs;
    g_slack.push_back({0, -2.0 * a});

    HarnackReport r;
    r.form = "l2-gradient";
    r.lhs = point_estimate(lhs, delta_se(cols, {{0, 2.0 * a}}), cfg);
    r.rhs = point_estimate(rhs, delta_se(cols, g_rhs), cfg);
    r.slack = rhs - lhs;
    r.slack_se = delta_se(cols, g_slack);
    r.verdict = classify(r.slack, r.slack_se);
    r.nodes.push_back({0.0, 1.0, alpha2});
    return r;
}

HarnackReport shift_harnack_verify(const ManifoldModel& model, const ScalarFunction& f, double f_lower,
                                   const DiffeoFamily& family, const FieldBounds& bounds, const Vec& x, double p,
                                   HarnackForm form, const EstimatorConfig& cfg) {
    if (!(p >= 1.0)) throw DomainError("p must be at least 1, got " + std::to_string(p));
    if (form == HarnackForm::Power) require_lower_bound(f_lower);
    const double inf = std::numeric_limits<double>::infinity();

    // Sup-norms of V_s and div V_s at the quadrature nodes.
    const auto quad = gauss_legendre_unit(16);
    std::vector<double> v_sup(quad.size()), div_sup(quad.size());
    for (std::size_t k = 0; k < quad.size(); ++k) {
        const double s = quad[k].first;
        if (family.constant_field) {
            v_sup[k] = family.field(s, x).norm();
            div_sup[k] = 0.0;
        } else {
            const auto sup = resolve_sup_norms(model, family.field_at(s), bounds);
            v_sup[k] = sup.first;
            div_sup[k] = sup.second;
        }
    }
    auto beta = [p](double s) { return 1.0 + (p - 1.0) * s; };
    const double beta_dot = p - 1.0;

    HarnackReport r;
    r.form = to_string(form);
    if (form == HarnackForm::Power) {
        // Columns: f, f^p o F_1, then exp(|V_s| |Psi| / (2 delta_s)) per node.
        const std::size_t width = 2 + quad.size();
        const PathColumns cols = weight_columns(model, x, cfg, width, [&](const WeightSample& s, double* out) {
            const double fx = f(s.x_T);
            require_positive(fx, f_lower);
            const double fF = f(model.project(family.F(1.0, s.x_T)));
            require_positive(fF, f_lower);
            out[0] = fx;
            out[1] = std::pow(fF, p);
            const double psi = s.weight.norm();
            for (std::size_t k = 0; k < quad.size(); ++k) {
                const double delta = beta_dot / beta(quad[k].first);
                out[2 + k] = delta > 0.0 ? std::exp(v_sup[k] * psi / (2.0 * delta)) : 1.0;
            }
        });
        const double mf = cols.mean(0), mg = cols.mean(1);
        double exponent = 0.0;
        std::vector<double> me(quad.size());
        for (std::size_t k = 0; k < quad.size(); ++k) {
            const auto [s, w] = quad[k];
            const double delta = beta_dot / beta(s);
            double alpha = div_sup[k];
            if (delta > 0.0) {
                me[k] = cols.mean(2 + k);
                alpha += delta * std::log(me[k]);
            } else if (v_sup[k] > 0.0) {
                alpha = inf;
            }
            r.nodes.push_back({s, w, alpha});
            exponent += w * p / beta(s) * alpha;
        }
        const double lhs = std::pow(mf, p);
        const double rhs = mg * std::exp(exponent);
        std::vector<std::pair<std::size_t, double>> g_rhs;
        if (std::isfinite(rhs)) {
            g_rhs.push_back({1, std::exp(exponent)});
            for (std::size_t k = 0; k < quad.size(); ++k) {
                const double delta = beta_dot / beta(quad[k].first);
                if (delta > 0.0) g_rhs.push_back({2 + k, rhs * quad[k].second * p / beta(quad[k].first) * delta / me[k]});
            }
        }
        const double g_lhs = p * std::pow(mf, p - 1.0);
        auto g_slack = g_rhs;
        g_slack.push_back({0, -g_lhs});
        r.lhs = point_estimate(lhs, delta_se(cols, {{0, g_lhs}}), cfg);
        r.rhs = point_estimate(rhs, std::isfinite(rhs) ? delta_se(cols, g_rhs) : 0.0, cfg);
        r.slack = rhs - lhs;
        r.slack_se = std::isfinite(rhs) ? delta_se(cols, g_slack) : 0.0;
    } else {
        // Columns: f, f o F_1, f^2, |Psi|^2.
        const PathColumns cols = weight_columns(model, x, cfg, 4, [&](const WeightSample& s, double* out) {
            const double fx = f(s.x_T);
            out[0] = fx;
            out[1] = f(model.project(family.F(1.0, s.x_T)));
            out[2] = fx * fx;
            out[3] = s.weight.squaredNorm();
        });
        const double mf = cols.mean(0), mg = cols.mean(1), mf2 = cols.mean(2), m2 = cols.mean(3);
        const double root = std::sqrt(m2);
        double integral = 0.0, d_integral = 0.0;  // d/dm2 of the integral
        for (std::size_t k = 0; k < quad.size(); ++k) {
            const auto [s, w] = quad[k];
            const double alpha = div_sup[k] + 0.5 * v_sup[k] * root;
            r.nodes.push_back({s, w, alpha});
            integral += w * alpha;
            if (root > 0.0) d_integral += w * 0.25 * v_sup[k] / root;
        }
        const double sq = std::sqrt(integral);
        const double rhs = mg + sq * std::sqrt(mf2);
        const double d_sq = integral > 0.0 ? 0.5 / sq * d_integral : 0.0;
        const double d_mf2 = mf2 > 0.0 ? 0.5 * sq / std::sqrt(mf2) : 0.0;
        const std::vector<std::pair<std::size_t, double>> g_rhs = {{1, 1.0}, {2, d_mf2}, {3, d_sq * std::sqrt(mf2)}};
        auto g_slack = g_rhs;
        g_slack.push_back({0, -1.0});
        r.lhs = point_estimate(mf, delta_se(cols, {{0, 1.0}}), cfg);
        r.rhs = point_estimate(rhs, delta_se(cols, g_rhs), cfg);
        r.slack = rhs - mf;
        r.slack_se = delta_se(cols, g_slack);
    }
    r.verdict = classify(r.slack, r.slack_se);
    return r;
}

}  // namespace semigroup
