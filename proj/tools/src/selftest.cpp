#include "cli.hpp"

#include <semigroup/errors.hpp>
#include <semigroup/linalg.hpp>

#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace semigroup::cli {

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Check {
    std::string name;
    std::function<Outcome()> run;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

// Monte Carlo agreement within k standard errors.
Outcome agree(double estimate, double se, double oracle, double k) {
    const double gap = std::abs(estimate - oracle);
    return {gap <= k * se, "estimate " + fmt(estimate) + " vs " + fmt(oracle) + ", |gap| = " + fmt(gap) +
                               ", " + fmt(k) + " se = " + fmt(k * se)};
}

Outcome bound(double value, double tol) { return {value <= tol, "max " + fmt(value) + " (tolerance " + fmt(tol) + ")"}; }

std::vector<Check> build_checks(const SelftestOptions& options) {
    const double k = options.quick ? 4.0 : 3.0;
    EstimatorConfig cfg;
    cfg.samples = options.quick ? 4000 : 20000;
    cfg.steps = 128;
    cfg.seed = 20241;
    std::vector<Check> checks;

    // Geometry validations; each identity is its own invariant.
    std::vector<std::shared_ptr<const ManifoldModel>> models = {
        EuclideanModel::flat(2), EuclideanModel::ornstein_uhlenbeck(2, 1.0), SphereModel::make(2), SphereModel::make(3)};
    if (options.inject_fault) models[2] = make_corrupted_model(SphereModel::make(2), 1e-2);
    for (const auto& model : models) {
        const std::string label = model->name() + "-" + std::to_string(model->dim());
        const ValidationReport report = check_model(*model);
        for (const ValidationCheck& c : report.checks)
            checks.push_back({c.identity + " [" + label + "]", [c] {
                                  return Outcome{c.passed(), "max error " + fmt(c.max_error) + " (tolerance " +
                                                                 fmt(c.tolerance) + ")"};
                              }});
    }

    checks.push_back({"transport isometry", [] {
        const auto sphere = SphereModel::make(2);
        SimulationOptions opts;
        opts.T = 1.0;
        opts.steps = 512;
        const PathRecord path = simulate_intrinsic(*sphere, sphere->base_point(), opts, 7);
        double worst = 0.0;
        for (std::size_t i = 0; i < path.frame.size(); ++i) {
            worst = std::max(worst, orthonormality_defect(path.frame[i]));
            worst = std::max(worst, (path.X[i].transpose() * path.frame[i]).cwiseAbs().maxCoeff());
        }
        return bound(worst, 1e-6);
    }});

    checks.push_back({"extrinsic torsion", [] {
        double worst = 0.0;
        const std::vector<std::shared_ptr<ExtrinsicSystem>> systems = {IdentitySystem::flat(2),
                                                                       std::make_shared<SphereProjectionSystem>(2)};
        for (const auto& sys : systems) {
            for (const Vec& raw : {make_vec({0.3, -0.2, 0.9}), make_vec({-0.5, 0.4, 0.2}), make_vec({0.1, 0.8, -0.3})}) {
                const Vec x = sys->project(raw.head(sys->ambient_dim()));
                const ExtrinsicFrame f = evaluate_frame(*sys, x);
                const Mat basis = tangent_basis(*sys, x);
                for (int i = 0; i < basis.cols(); ++i)
                    for (int j = 0; j < basis.cols(); ++j)
                        worst = std::max(worst, ljw_torsion(f, basis.col(i), basis.col(j)).norm());
                worst = std::max(worst, contorsion_sum(*sys, x).norm());
                worst = std::max(worst, a0A_field(*sys, f).norm());
            }
        }
        return bound(worst, 1e-6);
    }});

    checks.push_back({"divergence oracle", [cfg, k] {
        const auto model = EuclideanModel::flat(2);
        const MCEstimate e = divergence_expectation(*model, linear_field(identity(2)), make_vec({0.3, -0.4}), cfg);
        return agree(e.value(), e.se(), 2.0, k);
    }});

    checks.push_back({"sphere eigenfunction", [cfg, k] {
        auto c = cfg;
        c.T = 0.5;
        const auto sphere = SphereModel::make(2);
        const Vec x = make_vec({0.6, 0.0, 0.8});
        const MCEstimate e = expectation(*sphere, [](const Vec& p) { return p(2); }, x, c);
        return agree(e.value(), e.se(), std::exp(-2.0 * c.T) * 0.8, k);
    }});

    checks.push_back({"backward gradient", [cfg, k] {
        const auto model = EuclideanModel::flat(2);
        const MCEstimate e = bismut_backward_gradient(
            *model, [](const Vec& p) { return p(0) + 2.0 * p(1); }, make_vec({0.2, 0.1}), make_vec({1.0, 0.0}), cfg);
        return agree(e.value(), e.se(), 1.0, k);
    }});

    checks.push_back({"derivative-free OU", [cfg, k] {
        const auto model = EuclideanModel::ornstein_uhlenbeck(1, 1.0);
        const Vec x = make_vec({0.7});
        const MCEstimate e = ptvf_intrinsic(*model, [](const Vec& p) { return p(0) * p(0); },
                                            constant_field(make_vec({1.0})), x, cfg);
        return agree(e.value(), e.se(), 2.0 * std::exp(-cfg.T) * 0.7, k);
    }});

    checks.push_back({"exact bridge", [cfg, k] {
        const auto model = EuclideanModel::flat(2);
        auto c = cfg;
        c.h = RateProcess::power(c.T, 2.0);
        const Vec x = make_vec({0.0, 0.0}), y = make_vec({0.5, -1.0});
        const LogGradientEstimate e = forward_log_gradient(*model, x, y, c, ConditioningMode::ExactBridge);
        Outcome worst{true, ""};
        for (int i = 0; i < 2; ++i) {
            const Outcome o = agree(e.gradient.value(i), std::max(e.gradient.se(i), 1e-10), -(y(i) - x(i)) / (2.0 * c.T), k);
            if (!o.pass || i == 0) worst = o;
        }
        return worst;
    }});

    checks.push_back({"Feynman-Kac commutation", [cfg, k] {
        const auto model = EuclideanModel::ornstein_uhlenbeck(1, 1.0);
        auto c = cfg;
        c.samples = cfg.samples / 4;
        const OneForm alpha{[](const Vec& p) { return make_vec({std::sin(p(0))}); }, {}};
        const FeynmanKacReport r = feynman_kac_div_check(*model, alpha, make_vec({0.5}), c);
        return Outcome{r.within(k), "gap " + fmt(r.gap) + ", " + fmt(k) + " se = " + fmt(k * r.combined_se)};
    }});
    return checks;
}

}  // namespace

int selftest_command(const SelftestOptions& options, std::ostream& out, std::ostream& err) {
    if (options.inject_fault && *options.inject_fault != "connection") {
        err << "config error: unknown fault '" << *options.inject_fault << "'\n";
        return kConfigError;
    }
    std::vector<Check> checks;
    try {
        checks = build_checks(options);
    } catch (...) {
        return report_error(err);
    }
    std::string first_failure;
    for (const Check& c : checks) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        out << (o.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << ' ' << o.detail << '\n';
        if (!o.pass && first_failure.empty()) first_failure = c.name;
    }
    if (!first_failure.empty()) {
        err << "selftest failed: " << first_failure << '\n';
        return kSelftestFailure;
    }
    out << "all " << checks.size() << " invariants passed\n";
    return kOk;
}

}  // namespace semigroup::cli
