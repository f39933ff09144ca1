#include "cli.hpp"

#include <semigroup/errors.hpp>
#include <semigroup/expression.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace semigroup::cli {

namespace {

struct Compiled {
    int dim = 0;  // ambient dimension of points
    ScalarFunction f;
    VectorField V;
    ScalarFunction div_V;
    OneForm alpha;
};

Vec point(const std::vector<double>& values, int dim, const Vec& fallback, const std::string& key) {
    if (values.empty()) return fallback;
    if (static_cast<int>(values.size()) != dim)
        throw ConfigError(key + ": expected " + std::to_string(dim) + " coordinates");
    return to_vec(values);
}

Compiled compile(const Experiment& e, int dim, const std::string& path) {
    Compiled c;
    c.dim = dim;
    try {
        if (e.f) {
            const Expression f = Expression::parse(*e.f, dim);
            c.f = [f](const Vec& x) { return f(x); };
        }
        if (!e.V.empty()) {
            if (static_cast<int>(e.V.size()) != dim) throw ConfigError("needs " + std::to_string(dim) + " components");
            const ExpressionVector V(e.V, dim);
            c.V = VectorField{[V](const Vec& x) { return V(x); }, [V](const Vec& x) { return V.jacobian(x); }};
        }
        if (e.div_V) {
            const Expression d = Expression::parse(*e.div_V, dim);
            c.div_V = [d](const Vec& x) { return d(x); };
        }
        if (!e.alpha.empty()) {
            if (static_cast<int>(e.alpha.size()) != dim) throw ConfigError("needs " + std::to_string(dim) + " components");
            const ExpressionVector a(e.alpha, dim);
            c.alpha = OneForm{[a](const Vec& x) { return a(x); }, [a](const Vec& x) { return a.jacobian(x); }};
        }
    } catch (const ConfigError& err) {
        throw ConfigError(path + ": " + err.what());
    }
    return c;
}

template <class T>
const T& need(const T& value, bool present, const std::string& key) {
    if (!present) throw ConfigError(key + ": required key missing");
    return value;
}

void fill(ResultRow& row, const MCEstimate& est) {
    row.mean = est.mean;
    row.std_error = est.std_error;
    row.samples = est.samples;
    row.seed = est.seed;
}

json harnack_details(const HarnackReport& r) {
    json nodes = json::array();
    for (const auto& n : r.nodes) nodes.push_back({{"s", n.s}, {"weight", n.weight}, {"alpha", n.alpha}});
    return {{"form", r.form},
            {"lhs", r.lhs.value()},
            {"lhs_se", r.lhs.se()},
            {"rhs", r.rhs.value()},
            {"rhs_se", r.rhs.se()},
            {"slack", r.slack},
            {"slack_se", r.slack_se},
            {"verdict", to_string(r.verdict)},
            {"nodes", nodes}};
}

void fill(ResultRow& row, const HarnackReport& r, const EstimatorConfig& cfg) {
    row.mean = {r.slack};
    row.std_error = {r.slack_se};
    row.samples = cfg.samples;
    row.seed = cfg.seed;
    row.verdict = to_string(r.verdict);
    row.details = harnack_details(r);
}

DiffeoFamily make_family(const Experiment& e, int dim, const std::string& path) {
    if (e.family == "identity") return DiffeoFamily::identity(dim);
    if (e.family == "translation") {
        if (static_cast<int>(e.shift.size()) != dim)
            throw ConfigError(path + ".shift: expected " + std::to_string(dim) + " coordinates");
        return DiffeoFamily::translation(to_vec(e.shift));
    }
    throw ConfigError(path + ".family: unknown family '" + e.family + "'");
}

ResultRow run_model(const ManifoldModel& model, const Experiment& e, const EstimatorConfig& cfg,
                    const std::string& path) {
    const int N = model.ambient_dim();
    const Compiled c = compile(e, N, path);
    const Vec x = point(e.x, N, model.base_point(), path + ".x");
    ResultRow row;
    const std::string& name = e.estimator;
    if (name == "expectation") {
        fill(row, expectation(model, need(c.f, e.f.has_value(), path + ".f"), x, cfg));
    } else if (name == "bismut_backward_gradient") {
        fill(row, bismut_backward_gradient(model, need(c.f, e.f.has_value(), path + ".f"), x,
                                           point(need(e.v, !e.v.empty(), path + ".v"), N, x, path + ".v"), cfg));
    } else if (name == "divergence_expectation") {
        fill(row, divergence_expectation(model, need(c.V, !e.V.empty(), path + ".V"), x, cfg));
    } else if (name == "ptvf_intrinsic") {
        fill(row, ptvf_intrinsic(model, need(c.f, e.f.has_value(), path + ".f"), need(c.V, !e.V.empty(), path + ".V"),
                                 x, cfg, c.div_V));
    } else if (name == "forward_log_gradient") {
        const Vec y = point(need(e.y, !e.y.empty(), path + ".y"), N, x, path + ".y");
        const LogGradientEstimate est =
            forward_log_gradient(model, x, y, cfg, parse_conditioning_mode(e.mode.empty() ? "kernel" : e.mode));
        fill(row, est.gradient);
        row.details = {{"mode", e.mode.empty() ? "kernel" : e.mode},
                       {"bandwidth", est.bandwidth},
                       {"effective_samples", est.effective_samples}};
    } else if (name == "feynman_kac_div_check") {
        const FeynmanKacReport r = feynman_kac_div_check(model, need(c.alpha, !e.alpha.empty(), path + ".alpha"), x,
                                                         cfg, {}, e.stencil);
        row.mean = {r.gap};
        row.std_error = {r.combined_se};
        row.samples = cfg.samples;
        row.seed = cfg.seed;
        row.verdict = r.noise_conflict ? "noise-conflict" : (r.within(3.0) ? "within-3se" : "outside-3se");
        row.details = {{"lhs", r.lhs.value()}, {"lhs_se", r.lhs.se()}, {"rhs", r.rhs.value()},
                       {"rhs_se", r.rhs.se()}, {"stencil", r.stencil}};
    } else if (name == "alpha_constants") {
        const AlphaConstants a = alpha_constants(model, need(c.V, !e.V.empty(), path + ".V"), e.bounds, x, e.delta,
                                                 parse_alpha_mode(e.mode.empty() ? "empirical" : e.mode), cfg);
        row.mean = {a.alpha1, a.alpha2};
        row.std_error = {a.alpha1_se, a.alpha2_se};
        row.samples = a.mode == AlphaMode::Empirical ? cfg.samples : 0;
        row.seed = cfg.seed;
        row.details = {{"mode", to_string(a.mode)}, {"t", a.t},           {"delta", a.delta},
                       {"v_sup", a.v_sup},          {"div_sup", a.div_sup}, {"c", a.c},
                       {"C1_over_t", a.C1_over_t},   {"C2_over_sqrt_t", a.C2_over_sqrt_t}};
    } else if (name == "entropy_gradient_check") {
        fill(row,
             entropy_gradient_check(model, need(c.f, e.f.has_value(), path + ".f"), e.f_lower,
                                    need(c.V, !e.V.empty(), path + ".V"), e.bounds, x, e.delta, cfg),
             cfg);
    } else if (name == "l2_gradient_check") {
        fill(row,
             l2_gradient_check(model, need(c.f, e.f.has_value(), path + ".f"), need(c.V, !e.V.empty(), path + ".V"),
                               e.bounds, x, cfg),
             cfg);
    } else if (name == "shift_harnack_verify") {
        fill(row,
             shift_harnack_verify(model, need(c.f, e.f.has_value(), path + ".f"), e.f_lower,
                                  make_family(e, N, path), e.bounds, x, e.p, parse_harnack_form(e.form), cfg),
             cfg);
    } else {
        throw ConfigError(path + ".estimator: '" + name + "' needs an extrinsic system");
    }
    return row;
}

ResultRow run_system(const ExtrinsicSystem& sys, const Experiment& e, const EstimatorConfig& cfg,
                     const std::string& path) {
    const int N = sys.ambient_dim();
    const Compiled c = compile(e, N, path);
    const Vec x = point(e.x, N, sys.base_point(), path + ".x");
    ResultRow row;
    const std::string& name = e.estimator;
    if (name == "expectation") {
        fill(row, expectation(sys, need(c.f, e.f.has_value(), path + ".f"), x, cfg));
    } else if (name == "bismut_backward_gradient") {
        fill(row, bismut_backward_gradient(sys, need(c.f, e.f.has_value(), path + ".f"), x,
                                           point(need(e.v, !e.v.empty(), path + ".v"), N, x, path + ".v"), cfg));
    } else if (name == "ptvf_extrinsic") {
        fill(row, ptvf_extrinsic(sys, need(c.f, e.f.has_value(), path + ".f"), need(c.V, !e.V.empty(), path + ".V"),
                                 x, cfg));
    } else if (name == "forward_log_gradient") {
        const Vec y = point(need(e.y, !e.y.empty(), path + ".y"), N, x, path + ".y");
        const LogGradientEstimate est =
            forward_log_gradient(sys, x, y, cfg, parse_conditioning_mode(e.mode.empty() ? "kernel" : e.mode));
        fill(row, est.gradient);
        row.details = {{"mode", e.mode.empty() ? "kernel" : e.mode},
                       {"bandwidth", est.bandwidth},
                       {"effective_samples", est.effective_samples}};
    } else {
        throw ConfigError(path + ".estimator: '" + name + "' needs an intrinsic model");
    }
    return row;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ';';
        out += format_double(values[i]);
    }
    return out;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(number_or_null(v));
    return out;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector<ResultRow> run_experiments(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
        const Experiment& e = cfg.experiments[i];
        const std::string path = "experiments[" + std::to_string(i) + "]";
        const auto start = std::chrono::steady_clock::now();
        ResultRow row = cfg.model ? run_model(*cfg.model, e, cfg.estimator, path)
                                  : run_system(*cfg.system, e, cfg.estimator, path);
        const auto stop = std::chrono::steady_clock::now();
        row.name = e.name;
        row.estimator = e.estimator;
        row.inputs_digest = e.digest;
        if (cfg.output.timing) row.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

json results_json(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
    json out;
    out["config_digest"] = cfg.digest;
    out["subject"] = cfg.model ? cfg.model->name() : cfg.system->name();
    out["seed"] = cfg.estimator.seed;
    json list = json::array();
    for (const ResultRow& r : rows) {
        json row;
        row["name"] = r.name;
        row["estimator"] = r.estimator;
        row["inputs_digest"] = r.inputs_digest;
        row["mean"] = numbers(r.mean);
        row["std_error"] = numbers(r.std_error);
        row["samples"] = r.samples;
        row["seed"] = r.seed;
        row["runtime_ms"] = r.runtime_ms;
        row["verdict"] = r.verdict;
        row["details"] = r.details;
        list.push_back(row);
    }
    out["results"] = list;
    return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "name,mean,std_error,samples,seed,runtime_ms,verdict\n";
    for (const ResultRow& r : rows)
        out << csv_field(r.name) << ',' << join(r.mean) << ',' << join(r.std_error) << ',' << r.samples << ','
            << r.seed << ',' << format_double(r.runtime_ms) << ',' << csv_field(r.verdict) << '\n';
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + file.string() + "'");
    out << text;
}

// One CSV per path: paths/path_<i>.csv.
void dump_paths(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("output.dir: cannot create '" + dir.string() + "'");
    const Experiment& e = cfg.experiments.front();
    const SimulationOptions opts = cfg.estimator.simulation();
    for (std::size_t i = 0; i < cfg.output.path_count; ++i) {
        std::ostringstream out;
        if (cfg.model) {
            const Vec x = point(e.x, cfg.model->ambient_dim(), cfg.model->base_point(), "experiments[0].x");
            write_path_csv(out, simulate_intrinsic(*cfg.model, x, opts, cfg.estimator.seed, i));
        } else {
            const Vec x = point(e.x, cfg.system->ambient_dim(), cfg.system->base_point(), "experiments[0].x");
            write_path_csv(out, simulate_extrinsic(*cfg.system, x, opts, cfg.estimator.seed, false, i));
        }
        write_file(dir / ("path_" + std::to_string(i) + ".csv"), out.str());
    }
}

}  // namespace

int run_command(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_config(config_path);
        const std::vector<ResultRow> rows = run_experiments(cfg);
        const std::filesystem::path dir(cfg.output.dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw ConfigError("output.dir: cannot create '" + dir.string() + "'");
        write_file(dir / "results.json", results_json(cfg, rows).dump(2) + "\n");
        write_file(dir / "results.csv", results_csv(rows));
        if (cfg.output.path_count > 0) dump_paths(cfg, dir / "paths");
        for (const ResultRow& r : rows) {
            out << r.name << ": mean = " << join(r.mean) << ", se = " << join(r.std_error);
            if (!r.verdict.empty()) out << ", " << r.verdict;
            out << '\n';
        }
        out << "wrote " << (dir / "results.json").string() << " and results.csv\n";
        return kOk;
    } catch (...) {
        return report_error(err);
    }
}

int report_error(std::ostream& err) {
    try {
        throw;
    } catch (const GateRefusal& e) {
        err << "error: " << e.what() << '\n';
        return kGateRefusal;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const ValidationFailure& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalError;
    }
}

}  // namespace semigroup::cli
