#pragma once

#include "config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace semigroup::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kGateRefusal = 2,
    kNumericalError = 3,
    kSelftestFailure = 4,
};

struct ResultRow {
    std::string name;
    std::string estimator;
    std::string inputs_digest;
    std::vector<double> mean;
    std::vector<double> std_error;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double runtime_ms = 0.0;
    std::string verdict;
    json details = json::object();
};

/// Runs every experiment of the config; throws the library errors.
std::vector<ResultRow> run_experiments(const ExperimentConfig& cfg);

json results_json(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);
/// Columns: name, mean, std_error, samples, seed, runtime_ms, verdict. Vector
/// means and errors are joined with ';'; floats use 17 significant digits.
std::string results_csv(const std::vector<ResultRow>& rows);
std::string format_double(double value);

/// `run <config>`: writes results.json and results.csv into output.dir.
int run_command(const std::string& config_path, std::ostream& out, std::ostream& err);

struct SelftestOptions {
    bool quick = false;
    /// Test hook: corrupts the connection of the sphere model.
    std::optional<std::string> inject_fault;
};

int selftest_command(const SelftestOptions& options, std::ostream& out, std::ostream& err);

/// `describe <name> [--at point]`: geometry dump as JSON.
int describe_command(const std::string& name, const std::vector<double>& at, std::ostream& out, std::ostream& err);
json describe_json(const std::string& name, const std::vector<double>& at);

/// Maps library exceptions to exit codes, printing the message.
int report_error(std::ostream& err);

int main_entry(int argc, char** argv);

}  // namespace semigroup::cli
