// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "cli.hpp"

#include <semigroup/errors.hpp>
#include <semigroup/estimators.hpp>
#include <semigroup/extrinsic.hpp>
#include <semigroup/harnack.hpp>
#include <semigroup/pathsim.hpp>
#include <semigroup/rng.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace semigroup;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << "[fail] ";
        }
        detail << what << "; ";
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5g", v);
    return buf;
}

EstimatorConfig config(std::size_t samples, int steps, double T, std::uint64_t seed) {
    EstimatorConfig c;
    c.samples = samples;
    c.steps = steps;
    c.T = T;
    c.seed = seed;
    return c;
}

// |estimate - oracle| <= 3 SE, recorded in the outcome.
void near_oracle(Outcome& o, const std::string& label, double est, double se, double oracle, double slack = 0.0) {
    const double gap = std::abs(est - oracle);
    o.require(gap <= 3.0 * se + slack, label + " " + fmt(est) + " vs " + fmt(oracle) + " (se " + fmt(se) + ")");
}

void agree(Outcome& o, const std::string& label, const MCEstimate& a, const MCEstimate& b) {
    const double se = std::hypot(a.se(), b.se());
    o.require(std::abs(a.value() - b.value()) <= 3.0 * se,
              label + " " + fmt(a.value()) + " vs " + fmt(b.value()) + " (se " + fmt(se) + ")");
}

double ou_mean(double x, double lambda, double T) { return x * std::exp(-lambda * T); }
double ou_var(double lambda, double T) { return (1.0 - std::exp(-2.0 * lambda * T)) / lambda; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

void divergence_flat(Outcome& o) {
    const auto flat = EuclideanModel::flat(2);
    auto cfg = config(100000, 512, 1.0, 1);
    cfg.workers = 4;
    const auto start = std::chrono::steady_clock::now();
    const MCEstimate e = divergence_expectation(*flat, linear_field(identity(2)), make_vec({0.0, 0.0}), cfg);
    const double elapsed = seconds_since(start);
    near_oracle(o, "E div V", e.value(), e.se(), 2.0);
    o.require(e.se() <= 0.05, "se " + fmt(e.se()) + " <= 0.05");
    o.require(elapsed <= 60.0, "runtime " + fmt(elapsed) + " s <= 60 s (4 workers)");
}

void ornstein_uhlenbeck(Outcome& o) {
    const double lambda = 1.0, T = 1.0;
    const auto ou = EuclideanModel::ornstein_uhlenbeck(2, lambda);
    const Vec x = make_vec({0.5, 0.3});
    const double m1 = ou_mean(x(0), lambda, T), m2 = ou_mean(x(1), lambda, T), var = ou_var(lambda, T);

    // V = (sin y1, y1 y2), div V = cos y1 + y1.
    const VectorField v{[](const Vec& p) { return make_vec({std::sin(p(0)), p(0) * p(1)}); }, {}};
    const MCEstimate div = divergence_expectation(*ou, v, x, config(100000, 256, T, 2));
    near_oracle(o, "divergence", div.value(), div.se(), std::cos(m1) * std::exp(-0.5 * var) + m1);

    // f = y1^2 + sin y2, V = (1, y1): V f = 2 y1 + y1 cos y2.
    const ScalarFunction f = [](const Vec& p) { return p(0) * p(0) + std::sin(p(1)); };
    const VectorField w{[](const Vec& p) { return make_vec({1.0, p(0)}); }, {}};
    const MCEstimate pt = ptvf_intrinsic(*ou, f, w, x, config(100000, 256, T, 3), [](const Vec&) { return 0.0; });
    near_oracle(o, "ptvf", pt.value(), pt.se(), 2.0 * m1 + m1 * std::cos(m2) * std::exp(-0.5 * var));

    const int n = 3;
    const auto ou3 = EuclideanModel::ornstein_uhlenbeck(n, lambda);
    SimulationOptions opts;
    opts.T = T;
    opts.steps = 512;
    const PathRecord path = simulate_intrinsic(*ou3, make_vec({0.2, -0.1, 0.4}), opts, 4);
    const auto theta = integrate_damped_transport(path, *ou3, weitzenbock_endomorphism(*ou3, EndomorphismVariant::ThetaGen));
    double worst = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double expected = std::exp(-(n - 1) * lambda * path.times[k]);
        worst = std::max(worst, (theta[k] - expected * identity(n)).norm() / (expected * std::sqrt(double(n))));
    }
    o.require(worst <= 1e-3, "Theta relative error " + fmt(worst) + " <= 1e-3");
}

void sphere_eigenfunction(Outcome& o) {
    const auto s = SphereModel::make(2);
    const Vec x = make_vec({0.6, 0.0, 0.8});
    const double T = 0.5;
    const MCEstimate ez = expectation(*s, [](const Vec& p) { return p(2); }, x, config(40000, 128, T, 5));
    near_oracle(o, "E z", ez.value(), ez.se(), std::exp(-2.0 * T) * x(2));

    const VectorField grad_z{[](const Vec& p) { return Vec(make_vec({0.0, 0.0, 1.0}) - p(2) * p); }, {}};
    const MCEstimate div = divergence_expectation(*s, grad_z, x, config(40000, 128, T, 6));
    near_oracle(o, "E div grad z", div.value(), div.se(), -2.0 * std::exp(-2.0 * T) * x(2));

    SimulationOptions opts;
    opts.T = 1.0;
    opts.steps = 512;
    double defect = 0.0, theta_err = 0.0;
    for (std::uint64_t path = 0; path < 8; ++path) {
        const PathRecord p = simulate_intrinsic(*s, x, opts, 7, path);
        for (std::size_t k = 0; k < p.X.size(); ++k) {
            defect = std::max(defect, orthonormality_defect(p.frame[k]));
            defect = std::max(defect, (p.X[k].transpose() * p.frame[k]).norm());
        }
        const auto theta = integrate_damped_transport(p, *s, weitzenbock_endomorphism(*s, EndomorphismVariant::ThetaGen));
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double expected = std::exp(-p.times[k]);
            theta_err = std::max(theta_err, (theta[k] - expected * identity(2)).norm() / (expected * std::sqrt(2.0)));
        }
    }
    o.require(defect <= 1e-6, "transport isometry defect " + fmt(defect) + " <= 1e-6");
    o.require(theta_err <= 1e-3, "Theta relative error " + fmt(theta_err) + " <= 1e-3");
}

// Direct Monte Carlo of (V f)(X_T) with the analytic gradient of f, on an
// independent seed, against the derivative-free estimate.
void derivative_free(Outcome& o) {
    const std::size_t samples = 40000;
    const int steps = 128;
    const double T = 1.0;

    const ScalarFunction f2 = [](const Vec& p) { return std::sin(p(0)) * p(1) + p(0) * p(0); };
    const auto grad_f2 = [](const Vec& p) { return make_vec({std::cos(p(0)) * p(1) + 2.0 * p(0), std::sin(p(0))}); };
    const VectorField v2{[](const Vec& p) { return make_vec({1.0 + 0.5 * p(1), -0.5 * p(0) + 0.3}); }, {}};
    const ScalarFunction vf2 = [&](const Vec& p) { return v2(p).dot(grad_f2(p)); };
    const Vec x2 = make_vec({0.3, -0.2});

    const ScalarFunction fs = [](const Vec& p) { return p(0) * p(2) + p(1); };
    const auto grad_fs = [](const Vec& p) { return make_vec({p(2), 1.0, p(0)}); };
    const VectorField vs{[](const Vec& p) { return Vec(make_vec({0.0, 0.0, 1.0}) - p(2) * p); }, {}};
    const ScalarFunction vfs = [&](const Vec& p) { return vs(p).dot(grad_fs(p)); };
    const Vec xs = make_vec({0.6, 0.0, 0.8});

    struct ModelCase {
        std::string name;
        std::shared_ptr<ManifoldModel> model;
        bool sphere;
    };
    const std::vector<ModelCase> models = {{"euclidean", EuclideanModel::flat(2), false},
                                           {"euclidean-ou", EuclideanModel::ornstein_uhlenbeck(2, 1.0), false},
                                           {"sphere", SphereModel::make(2), true}};
    for (const auto& c : models) {
        const auto& f = c.sphere ? fs : f2;
        const auto& v = c.sphere ? vs : v2;
        const auto& vf = c.sphere ? vfs : vf2;
        const Vec& x = c.sphere ? xs : x2;
        const MCEstimate pt = ptvf_intrinsic(*c.model, f, v, x, config(samples, steps, T, 11));
        const MCEstimate direct = expectation(*c.model, vf, x, config(samples, steps, T, 12));
        agree(o, c.name, pt, direct);
    }

    struct SystemCase {
        std::string name;
        std::shared_ptr<ExtrinsicSystem> sys;
        bool sphere;
    };
    const std::vector<SystemCase> systems = {{"identity", IdentitySystem::flat(2), false},
                                             {"identity-ou", IdentitySystem::ornstein_uhlenbeck(2, 1.0), false},
                                             {"scaled-diagonal", std::make_shared<ScaledDiagonalSystem>(), false},
                                             {"sphere-projection", std::make_shared<SphereProjectionSystem>(2), true}};
    for (const auto& c : systems) {
        const auto& f = c.sphere ? fs : f2;
        const auto& v = c.sphere ? vs : v2;
        const auto& vf = c.sphere ? vfs : vf2;
        const Vec& x = c.sphere ? xs : x2;
        const MCEstimate pt = ptvf_extrinsic(*c.sys, f, v, x, config(samples, steps, T, 13));
        const MCEstimate direct = expectation(*c.sys, vf, x, config(samples, steps, T, 14));
        agree(o, c.name, pt, direct);
    }
}

void extrinsic_intrinsic(Outcome& o) {
    const std::size_t samples = 40000;
    const ScalarFunction f2 = [](const Vec& p) { return std::cos(p(0)) * p(1); };
    const VectorField v2{[](const Vec& p) { return make_vec({1.0, p(0)}); }, {}};
    const Vec x2 = make_vec({0.2, 0.5});
    agree(o, "flat", ptvf_intrinsic(*EuclideanModel::flat(2), f2, v2, x2, config(samples, 64, 1.0, 21)),
          ptvf_extrinsic(*IdentitySystem::flat(2), f2, v2, x2, config(samples, 64, 1.0, 22)));

    const ScalarFunction fs = [](const Vec& p) { return p(0) * p(2) + p(1) * p(1); };
    const VectorField vs{[](const Vec& p) { return Vec(make_vec({0.0, 0.0, 1.0}) - p(2) * p); }, {}};
    const Vec xs = make_vec({0.6, 0.0, 0.8});
    const auto proj = std::make_shared<SphereProjectionSystem>(2);
    agree(o, "sphere", ptvf_intrinsic(*SphereModel::make(2), fs, vs, xs, config(samples, 128, 0.5, 23)),
          ptvf_extrinsic(*proj, fs, vs, xs, config(samples, 128, 0.5, 24)));

    double worst = 0.0;
    const auto flat = IdentitySystem::flat(2);
    for (const Vec& raw : {make_vec({0.0, 0.0, 1.0}), make_vec({0.3, -0.6, 0.4}), make_vec({-0.9, 0.1, -0.2}),
                           make_vec({0.5, 0.5, -0.7})}) {
        const Vec x = proj->project(raw);
        const ExtrinsicFrame fr = evaluate_frame(*proj, x);
        const Mat b = tangent_basis(*proj, x);
        worst = std::max(worst, ljw_torsion(fr, b.col(0), b.col(1)).norm());
        worst = std::max(worst, a0A_field(*proj, x).norm());
        worst = std::max(worst, contorsion_sum(*proj, x).norm());
        const Vec y = raw.head(2);
        const ExtrinsicFrame ff = evaluate_frame(*flat, y);
        worst = std::max(worst, ljw_torsion(ff, make_vec({1.0, 0.0}), make_vec({0.0, 1.0})).norm());
        worst = std::max(worst, a0A_field(*flat, y).norm());
        worst = std::max(worst, contorsion_sum(*flat, y).norm());
    }
    o.require(worst <= 1e-6, "torsion, A0^A, contorsion max " + fmt(worst) + " <= 1e-6");
}

void backward_bismut(Outcome& o) {
    const Vec a = make_vec({3.0, -1.0});
    const Vec v = make_vec({0.6, 0.8});
    const ScalarFunction f = [a](const Vec& p) { return a.dot(p); };
    const MCEstimate flat =
        bismut_backward_gradient(*EuclideanModel::flat(2), f, make_vec({0.1, 0.2}), v, config(100000, 64, 1.0, 31));
    near_oracle(o, "flat", flat.value(), flat.se(), a.dot(v));

    const double lambda = 0.8, T = 1.0;
    const MCEstimate ou = bismut_backward_gradient(*EuclideanModel::ornstein_uhlenbeck(2, lambda), f,
                                                   make_vec({0.1, 0.2}), v, config(100000, 128, T, 32));
    near_oracle(o, "ou", ou.value(), ou.se(), std::exp(-lambda * T) * a.dot(v));
}

void log_gradient(Outcome& o) {
    const auto flat = EuclideanModel::flat(2);
    auto cfg = config(20000, 64, 0.5, 41);
    cfg.h = RateProcess::power(0.5, 2.0);
    const Vec x = make_vec({0.0, 0.0}), y = make_vec({1.0, 0.0});
    const LogGradientEstimate bridge = forward_log_gradient(*flat, x, y, cfg, ConditioningMode::ExactBridge);
    for (int i = 0; i < 2; ++i)
        near_oracle(o, "bridge[" + std::to_string(i) + "]", bridge.gradient.value(i),
                    std::max(bridge.gradient.se(i), 1e-12), -(y(i) - x(i)) / (2.0 * cfg.T));

    const double lambda = 1.0, T = 1.0;
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, lambda);
    const LogGradientEstimate kernel = forward_log_gradient(*ou, make_vec({1.0}), make_vec({0.0}),
                                                            config(100000, 64, T, 42), ConditioningMode::Kernel);
    const double oracle = (ou_mean(1.0, lambda, T) - 0.0) / ou_var(lambda, T);
    near_oracle(o, "kernel (+10% bias allowance)", kernel.gradient.value(), kernel.gradient.se(), oracle,
                0.1 * std::abs(oracle));
    o.detail << "bandwidth " << fmt(kernel.bandwidth) << ", ess " << fmt(kernel.effective_samples) << "; ";
}

void feynman_kac(Outcome& o) {
    auto check = [&](const std::string& label, const FeynmanKacReport& r) {
        o.require(r.within(3.0) && !r.noise_conflict, label + " lhs " + fmt(r.lhs.value()) + " rhs " +
                                                          fmt(r.rhs.value()) + " gap " + fmt(r.gap) + " (se " +
                                                          fmt(r.combined_se) + ")");
    };
    const auto flat = EuclideanModel::flat(2);
    const OneForm quad{[](const Vec& p) { return make_vec({2 * p(0) + p(1), 6 * p(1) + p(0)}); }, {}};
    check("flat exact", feynman_kac_div_check(*flat, quad, make_vec({0.3, -0.2}), config(2000, 32, 1.0, 51)));
    const OneForm wave{[](const Vec& p) { return make_vec({std::sin(p(0)), p(0) * std::cos(p(1))}); }, {}};
    check("flat", feynman_kac_div_check(*flat, wave, make_vec({0.3, -0.2}), config(20000, 64, 1.0, 52)));

    const double lambda = 1.0;
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, lambda);
    const OneForm sine{[](const Vec& p) { return make_vec({std::sin(p(0))}); }, {}};
    const FeynmanKacReport r = feynman_kac_div_check(*ou, sine, make_vec({0.5}), config(20000, 64, 1.0, 53));
    check("ou", r);
    // Independent oracle for the right-hand side: e^{-lambda t} E cos X_t.
    near_oracle(o, "ou rhs", r.rhs.value(), r.rhs.se(),
                std::exp(-lambda) * std::cos(ou_mean(0.5, lambda, 1.0)) * std::exp(-0.5 * ou_var(lambda, 1.0)));
}

void shift_harnack(Outcome& o) {
    const ScalarFunction f = [](const Vec& p) { return std::exp(-p(0) * p(0) / 4.0) + 0.1; };
    const DiffeoFamily shift = DiffeoFamily::translation(make_vec({0.5}));
    const std::vector<std::pair<std::string, std::shared_ptr<ManifoldModel>>> models = {
        {"flat", EuclideanModel::flat(1)}, {"ou", EuclideanModel::ornstein_uhlenbeck(1, 1.0)}};
    int cases = 0, held = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& [name, model] : models)
        for (double p : {1.0, 2.0})
            for (double t : {0.25, 1.0})
                for (HarnackForm form : {HarnackForm::Power, HarnackForm::L2}) {
                    const HarnackReport r = shift_harnack_verify(*model, f, 0.1, shift, {}, make_vec({0.2}), p, form,
                                                                 config(20000, 64, t, 61));
                    ++cases;
                    const double z = r.slack_se > 0.0 ? r.slack / r.slack_se : (r.slack >= 0.0 ? 1e300 : -1e300);
                    worst = std::min(worst, z);
                    if (r.slack >= -3.0 * r.slack_se) {
                        ++held;
                    } else {
                        o.require(false, name + " p=" + fmt(p) + " t=" + fmt(t) + " " + to_string(form) + " slack " +
                                             fmt(r.slack) + " se " + fmt(r.slack_se));
                    }
                }
    o.detail << held << "/" << cases << " translation cases hold, min slack/se " << fmt(worst) << "; ";

    for (const auto& [name, model] : models)
        for (double p : {1.0, 2.0})
            for (HarnackForm form : {HarnackForm::Power, HarnackForm::L2}) {
                const HarnackReport r = shift_harnack_verify(*model, f, 0.1, DiffeoFamily::identity(1), {},
                                                             make_vec({0.2}), p, form, config(20000, 64, 1.0, 62));
                const double rel = r.slack_se / r.lhs.value();
                if (!(r.ratio() >= 1.0 - 3.0 * rel))
                    o.require(false, "null shift " + name + " p=" + fmt(p) + " " + to_string(form) + " ratio " +
                                         fmt(r.ratio()));
            }
    o.detail << "null shift ratios checked; ";
}

void determinism_convergence(Outcome& o) {
    using namespace semigroup::cli;
    // Byte-identical serialized results for identical configurations, and
    // worker-independent means.
    const json doc = json::parse(R"({
      "model": {"kind": "sphere", "dim": 2},
      "estimator": {"T": 0.5, "steps": 64, "samples": 4000, "seed": 9, "workers": 1},
      "experiments": [
        {"name": "ez", "estimator": "expectation", "f": "x3"},
        {"name": "div", "estimator": "divergence_expectation", "V": ["-x3*x1", "-x3*x2", "1 - x3*x3"]}
      ]})");
    const std::string a = results_json(parse_config(doc), run_experiments(parse_config(doc))).dump(2);
    const std::string b = results_json(parse_config(doc), run_experiments(parse_config(doc))).dump(2);
    o.require(a == b, "results.json byte-identical across runs");
    json doc4 = doc;
    doc4["estimator"]["workers"] = 4;
    const auto rows1 = run_experiments(parse_config(doc));
    const auto rows4 = run_experiments(parse_config(doc4));
    bool same = true;
    for (std::size_t i = 0; i < rows1.size(); ++i)
        same = same && rows1[i].mean == rows4[i].mean && rows1[i].std_error == rows4[i].std_error;
    o.require(same, "means identical for 1 and 4 workers");

    // SE scaling over a 16x sample sweep.
    const auto ou = EuclideanModel::ornstein_uhlenbeck(1, 1.0);
    const ScalarFunction id = [](const Vec& p) { return p(0); };
    const MCEstimate small = expectation(*ou, id, make_vec({1.0}), config(2000, 32, 1.0, 71));
    const MCEstimate large = expectation(*ou, id, make_vec({1.0}), config(32000, 32, 1.0, 71));
    const double ratio = small.se() / large.se();
    o.require(ratio >= 3.2 && ratio <= 4.8, "SE ratio over 16x samples " + fmt(ratio) + " in [3.2, 4.8]");

    // Weak error of the OU mean with common random numbers and antithetic
    // pairs: coarse increments are sums of the fine ones, the reference is the
    // finest grid, and each path is also run with negated increments.
    const double T = 1.0;
    const int levels = 5, coarsest = 4, finest = coarsest << (levels + 2);
    const std::size_t paths = 20000;
    std::vector<double> sum(levels, 0.0);
    std::vector<Vec> fine(finest);
    for (std::size_t path = 0; path < paths; ++path) {
        PathRng rng(81, path);
        for (auto& db : fine) rng.increment(db, 1, T / finest);
        auto terminal = [&](int steps, double sign) {
            const int block = finest / steps;
            IntrinsicStepper st(*ou, T / steps);
            st.reset(make_vec({1.0}));
            for (int k = 0; k < steps; ++k) {
                Vec db = Vec::Zero(1);
                for (int j = 0; j < block; ++j) db += fine[k * block + j];
                st.advance(sign * db);
            }
            return st.x()(0);
        };
        for (double sign : {1.0, -1.0}) {
            const double ref = terminal(finest, sign);
            for (int l = 0; l < levels; ++l) sum[l] += 0.5 * (terminal(coarsest << l, sign) - ref);
        }
    }
    std::ostringstream errs;
    bool halves = true;
    double prev = 0.0;
    for (int l = 0; l < levels; ++l) {
        const double err = std::abs(sum[l] / paths);
        errs << fmt(err) << (l + 1 < levels ? "," : "");
        if (l > 0) halves = halves && err <= prev / 1.6;
        prev = err;
    }
    const double order = std::log2(std::abs(sum[levels - 2]) / std::abs(sum[levels - 1]));
    o.require(halves, "weak error over dt halvings [" + errs.str() + "] halves each time (observed order " +
                          fmt(order) + ")");
}

}  // namespace

// Optional arguments restrict the run to the listed criterion ids.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    struct Criterion {
        int id;
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "divergence formula, flat R^2", divergence_flat},
        {2, "Ornstein-Uhlenbeck oracles", ornstein_uhlenbeck},
        {3, "sphere eigenfunction suite", sphere_eigenfunction},
        {4, "derivative-free consistency", derivative_free},
        {5, "extrinsic/intrinsic agreement", extrinsic_intrinsic},
        {6, "backward Bismut formula", backward_bismut},
        {7, "forward log-gradient", log_gradient},
        {8, "Feynman-Kac commutation", feynman_kac},
        {9, "shift-Harnack inequalities", shift_harnack},
        {10, "determinism and convergence", determinism_convergence},
    };
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++ran;
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail << "exception: " << e.what();
        }
        const double elapsed = seconds_since(start);
        std::printf("%s %2d %s (%.1f s): %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, elapsed, o.detail.str().c_str());
        std::fflush(stdout);
        failed += o.ok ? 0 : 1;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
