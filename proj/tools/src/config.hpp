#pragma once

#include <semigroup/estimators.hpp>
#include <semigroup/extrinsic.hpp>
#include <semigroup/harnack.hpp>
#include <semigroup/manifold.hpp>

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace semigroup::cli {

using nlohmann::json;

/// One estimator invocation. Expressions are kept as text and compiled
/// against the model dimension when the experiment runs.
struct Experiment {
    std::string name;
    std::string estimator;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> v;
    std::optional<std::string> f;
    std::vector<std::string> V;
    std::optional<std::string> div_V;
    std::vector<std::string> alpha;
    std::string mode;  // conditioning or alpha mode
    std::string form = "power";
    std::string family = "translation";
    std::vector<double> shift;
    double p = 1.0;
    double delta = 1.0;
    double f_lower = 0.0;
    double stencil = 1e-3;
    FieldBounds bounds;
    std::string digest;  // FNV-1a of the subject, estimator and this experiment
};

struct OutputOptions {
    std::string dir = ".";
    bool timing = false;
    std::size_t path_count = 0;
};

struct ExperimentConfig {
    std::shared_ptr<ManifoldModel> model;
    std::shared_ptr<ExtrinsicSystem> system;
    EstimatorConfig estimator;
    std::vector<Experiment> experiments;
    OutputOptions output;
    std::string digest;  // FNV-1a of the canonical config text
};

/// Schema-validated parse; ConfigError names the offending key path.
ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::string& path);

/// 64-bit FNV-1a, lower-case hex.
std::string fnv1a_hex(const std::string& text);

/// Built-in models and systems by name (ConfigError if unknown).
std::shared_ptr<ManifoldModel> builtin_model(const std::string& name, int dim = 2, double lambda = 1.0);
std::shared_ptr<ExtrinsicSystem> builtin_system(const std::string& name, int dim = 2, double lambda = 1.0);
bool is_model_name(const std::string& name);
bool is_system_name(const std::string& name);

}  // namespace semigroup::cli
