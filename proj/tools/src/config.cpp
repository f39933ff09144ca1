#include "config.hpp"

#include <semigroup/errors.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace semigroup::cli {

namespace {

// Reads typed values out of a JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string where() const { return path_.empty() ? "<root>" : path_; }
    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_.contains(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) throw ConfigError(key_path(key) + ": required key missing");
        return node_.at(key);
    }

    template <class T>
    T get(const std::string& key) {
        const json& v = raw(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(key_path(key) + ": wrong type");
        }
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) throw ConfigError(key_path(key) + ": expected a number");
        return v.get<double>();
    }

    std::vector<double> numbers(const std::string& key) {
        if (!has(key)) return {};
        const json& v = node_.at(key);
        if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(key_path(key) + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key) {
        if (!has(key)) return {};
        const json& v = node_.at(key);
        std::vector<std::string> out;
        if (v.is_string()) return {v.get<std::string>()};
        if (!v.is_array()) throw ConfigError(key_path(key) + ": expected an array of expressions");
        for (const auto& e : v) {
            if (e.is_string()) out.push_back(e.get<std::string>());
            else if (e.is_number()) out.push_back(json(e.get<double>()).dump());
            else throw ConfigError(key_path(key) + ": expected an array of expressions");
        }
        return out;
    }

    std::optional<std::string> expression(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = node_.at(key);
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return json(v.get<double>()).dump();
        throw ConfigError(key_path(key) + ": expected an expression string");
    }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (!seen_.count(key)) throw ConfigError(key_path(key) + ": unknown key");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

ModelBounds parse_bounds(Section& parent, const std::string& key) {
    ModelBounds b;
    if (!parent.has(key)) return b;
    Section s(parent.raw(key), parent.key_path(key));
    if (s.has("curvature_lower_bound")) b.curvature_lower_bound = s.number("curvature_lower_bound", 0.0);
    if (s.has("ricci_drift_bound")) b.ricci_drift_bound = s.number("ricci_drift_bound", 0.0);
    if (s.has("div_drift_bound")) b.div_drift_bound = s.number("div_drift_bound", 0.0);
    s.finish();
    return b;
}

std::shared_ptr<ManifoldModel> parse_model(const json& node) {
    Section s(node, "model");
    const std::string kind = s.get<std::string>("kind");
    const int dim = s.get_or<int>("dim", 2);
    if (dim < 1 || dim + 1 > kMaxDim) throw ConfigError("model.dim: out of range");
    const double lambda = s.number("lambda", 1.0);
    std::vector<std::string> drift = s.strings("drift");
    const bool declared = s.has("bounds");
    const ModelBounds bounds = parse_bounds(s, "bounds");
    s.finish();
    std::shared_ptr<ManifoldModel> model;
    if (kind == "euclidean-custom") {
        if (static_cast<int>(drift.size()) != dim) throw ConfigError("model.drift: needs one expression per coordinate");
        model = EuclideanModel::custom(dim, drift, bounds);
        validate_model(*model);
    } else {
        if (!drift.empty()) throw ConfigError("model.drift: only allowed for euclidean-custom");
        model = builtin_model(kind, dim, lambda);
        if (declared) model->set_bounds(bounds);
    }
    return model;
}

std::shared_ptr<ExtrinsicSystem> parse_system(const json& node) {
    Section s(node, "system");
    const std::string kind = s.get<std::string>("kind");
    const int dim = s.get_or<int>("dim", 2);
    if (dim < 1 || dim + 1 > kMaxDim) throw ConfigError("system.dim: out of range");
    const double lambda = s.number("lambda", 1.0);
    std::shared_ptr<ExtrinsicSystem> sys;
    if (kind == "custom") {
        const int m = s.get_or<int>("noise_dim", dim);
        if (m < 1 || m > kMaxDim) throw ConfigError("system.noise_dim: out of range");
        std::vector<std::string> a = s.strings("a");
        std::vector<std::string> a0 = s.strings("a0");
        if (static_cast<int>(a.size()) != dim * m) throw ConfigError("system.a: needs dim x noise_dim expressions");
        if (a0.empty()) a0.assign(dim, "0");
        if (static_cast<int>(a0.size()) != dim) throw ConfigError("system.a0: needs dim expressions");
        const bool declared = s.get_or<bool>("bounds_declared", false);
        sys = std::make_shared<ExpressionSystem>(dim, m, a, a0, declared);
    } else if (kind == "scaled-diagonal") {
        const double kappa = s.number("kappa", 0.25);
        const std::vector<double> a0 = s.numbers("a0");
        sys = std::make_shared<ScaledDiagonalSystem>(kappa, a0.empty() ? Vec(Vec::Zero(2)) : to_vec(a0));
    } else if (kind == "sphere-projection") {
        sys = std::make_shared<SphereProjectionSystem>(dim, s.number("rotation", 0.0));
    } else {
        sys = builtin_system(kind, dim, lambda);
    }
    s.finish();
    return sys;
}

RateProcess parse_rate(const json& node, double T) {
    Section s(node, "estimator.h");
    const std::string kind = s.get<std::string>("kind");
    RateProcess rate = RateProcess::linear(T);
    if (kind == "linear") {
        rate = RateProcess::linear(s.number("horizon", T));
    } else if (kind == "power") {
        rate = RateProcess::power(s.number("horizon", T), s.number("p", 2.0));
    } else if (kind == "piecewise") {
        rate = RateProcess(s.numbers("knots"), s.numbers("values"));
    } else {
        throw ConfigError("estimator.h.kind: unknown rate process '" + kind + "'");
    }
    s.finish();
    return rate;
}

EstimatorConfig parse_estimator(const json& node) {
    Section s(node, "estimator");
    EstimatorConfig cfg;
    cfg.T = s.number("T", cfg.T);
    cfg.steps = s.get_or<int>("steps", cfg.steps);
    const long long samples = s.get_or<long long>("samples", static_cast<long long>(cfg.samples));
    if (samples < 2) throw ConfigError("estimator.samples: must be at least 2");
    cfg.samples = static_cast<std::size_t>(samples);
    cfg.seed = s.get_or<std::uint64_t>("seed", cfg.seed);
    cfg.workers = s.get_or<int>("workers", cfg.workers);
    cfg.safe_radius = s.number("safe_radius", cfg.safe_radius);
    cfg.bandwidth = s.number("bandwidth", cfg.bandwidth);
    cfg.min_ess = s.number("min_ess", cfg.min_ess);
    if (s.has("h")) cfg.h = parse_rate(s.raw("h"), cfg.T);
    s.finish();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("estimator: ") + e.what());
    }
    return cfg;
}

const std::set<std::string> kEstimators = {
    "expectation",         "bismut_backward_gradient", "divergence_expectation", "ptvf_intrinsic",
    "ptvf_extrinsic",      "forward_log_gradient",     "feynman_kac_div_check",  "alpha_constants",
    "entropy_gradient_check", "l2_gradient_check",     "shift_harnack_verify",
};

Experiment parse_experiment(const json& node, const std::string& path) {
    Section s(node, path);
    Experiment e;
    e.estimator = s.get<std::string>("estimator");
    if (!kEstimators.count(e.estimator)) throw ConfigError(s.key_path("estimator") + ": unknown estimator '" + e.estimator + "'");
    e.name = s.get_or<std::string>("name", e.estimator);
    e.x = s.numbers("x");
    e.y = s.numbers("y");
    e.v = s.numbers("v");
    e.f = s.expression("f");
    e.V = s.strings("V");
    e.div_V = s.expression("div_V");
    e.alpha = s.strings("alpha");
    e.mode = s.get_or<std::string>("mode", "");
    e.form = s.get_or<std::string>("form", e.form);
    e.family = s.get_or<std::string>("family", e.family);
    e.shift = s.numbers("shift");
    e.p = s.number("p", e.p);
    e.delta = s.number("delta", e.delta);
    e.f_lower = s.number("f_lower", e.f_lower);
    e.stencil = s.number("stencil", e.stencil);
    if (s.has("v_sup")) e.bounds.v_sup = s.number("v_sup", 0.0);
    if (s.has("div_sup")) e.bounds.div_sup = s.number("div_sup", 0.0);
    if (s.has("region")) {
        Section r(s.raw("region"), s.key_path("region"));
        Region region;
        region.lo = to_vec(r.numbers("lo"));
        region.hi = to_vec(r.numbers("hi"));
        region.points_per_axis = r.get_or<int>("points", region.points_per_axis);
        r.finish();
        e.bounds.region = region;
    }
    s.finish();
    return e;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool is_model_name(const std::string& name) {
    return name == "euclidean" || name == "euclidean-ou" || name == "sphere";
}

bool is_system_name(const std::string& name) {
    return name == "identity" || name == "identity-ou" || name == "scaled-diagonal" || name == "sphere-projection";
}

std::shared_ptr<ManifoldModel> builtin_model(const std::string& name, int dim, double lambda) {
    if (name == "euclidean") return EuclideanModel::flat(dim);
    if (name == "euclidean-ou") return EuclideanModel::ornstein_uhlenbeck(dim, lambda);
    if (name == "sphere") return SphereModel::make(dim);
    throw ConfigError("unknown model '" + name + "'");
}

std::shared_ptr<ExtrinsicSystem> builtin_system(const std::string& name, int dim, double lambda) {
    if (name == "identity") return IdentitySystem::flat(dim);
    if (name == "identity-ou") return IdentitySystem::ornstein_uhlenbeck(dim, lambda);
    if (name == "scaled-diagonal") return std::make_shared<ScaledDiagonalSystem>();
    if (name == "sphere-projection") return std::make_shared<SphereProjectionSystem>(dim);
    throw ConfigError("unknown system '" + name + "'");
}

ExperimentConfig parse_config(const json& doc) {
    Section root(doc, "");
    ExperimentConfig cfg;
    const bool has_model = root.has("model");
    const bool has_system = root.has("system");
    if (has_model == has_system) throw ConfigError("<root>: exactly one of 'model' and 'system' is required");
    if (has_model) cfg.model = parse_model(root.raw("model"));
    else cfg.system = parse_system(root.raw("system"));
    cfg.estimator = root.has("estimator") ? parse_estimator(root.raw("estimator")) : EstimatorConfig{};
    cfg.estimator.override_gate = root.get_or<bool>("override_gate", false);
    if (const char* env = std::getenv("SEMIGROUP_SEED")) {
        try {
            std::size_t used = 0;
            cfg.estimator.seed = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("SEMIGROUP_SEED: not an unsigned integer: '") + env + "'");
        }
    }
    const json& list = root.raw("experiments");
    if (!list.is_array() || list.empty()) throw ConfigError("experiments: expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i)
        cfg.experiments.push_back(parse_experiment(list[i], "experiments[" + std::to_string(i) + "]"));
    if (root.has("output")) {
        Section o(root.raw("output"), "output");
        cfg.output.dir = o.get_or<std::string>("dir", cfg.output.dir);
        cfg.output.timing = o.get_or<bool>("timing", false);
        cfg.output.path_count = o.get_or<std::size_t>("paths", 0);
        o.finish();
    }
    root.finish();
    // The digest covers the effective configuration, including an env seed.
    json canonical = doc;
    canonical["estimator"]["seed"] = cfg.estimator.seed;
    cfg.digest = fnv1a_hex(canonical.dump());
    const json subject = has_model ? canonical["model"] : canonical["system"];
    for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
        const json inputs = {subject, canonical["estimator"], list[i], cfg.estimator.override_gate};
        cfg.experiments[i].digest = fnv1a_hex(inputs.dump());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc);
}

}  // namespace semigroup::cli
