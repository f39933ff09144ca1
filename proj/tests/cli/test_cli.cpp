#include "cli.hpp"

#include <semigroup/errors.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace semigroup;
using namespace semigroup::cli;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(SEMIGROUP_TEST_TMPDIR) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json patched(json doc, const json& patch) {
    doc.merge_patch(patch);
    return doc;
}

json divergence_config(const fs::path& out_dir, int workers = 1) {
    const json doc = json::parse(R"({
      "model": {"kind": "euclidean", "dim": 2},
      "estimator": {"T": 1.0, "steps": 32, "samples": 2000, "seed": 5},
      "experiments": [
        {"name": "div", "estimator": "divergence_expectation", "V": ["x1", "x2"]},
        {"name": "mean", "estimator": "expectation", "f": "x1^2 + x2^2", "x": [0.5, 0.0]}
      ]
    })");
    return patched(doc, {{"estimator", {{"workers", workers}}}, {"output", {{"dir", out_dir.string()}}}});
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path file = dir / "config.json";
    std::ofstream(file) << doc.dump(2);
    return file;
}

int run(const json& doc, const fs::path& dir, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_command(write_config(dir, doc).string(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::string config_error(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

class SeedEnv {
public:
    explicit SeedEnv(const char* value) { setenv("SEMIGROUP_SEED", value, 1); }
    ~SeedEnv() { unsetenv("SEMIGROUP_SEED"); }
};

}  // namespace

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
    json doc = json::parse(R"({"model": {"kind": "euclidean"},
      "experiments": [{"estimator": "expectation", "f": "x1", "colour": "blue"}]})");
    EXPECT_NE(config_error(doc).find("experiments[0].colour: unknown key"), std::string::npos);
    EXPECT_NE(config_error(patched(doc, {{"model", {{"radius", 2}}}})).find("model.radius: unknown key"),
              std::string::npos);
    EXPECT_NE(config_error(patched(doc, {{"estimator", {{"h", {{"kind", "linear"}, {"slope", 1}}}}}}))
                  .find("estimator.h.slope: unknown key"),
              std::string::npos);
}

TEST(Config, StructuralErrors) {
    EXPECT_NE(config_error(json::parse(R"({"experiments": [{"estimator": "expectation"}]})"))
                  .find("exactly one of 'model' and 'system'"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "euclidean"}, "experiments": []})")).find("experiments"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "torus"}, "experiments": [{"estimator": "expectation"}]})"))
                  .find("torus"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "euclidean"},
                                           "experiments": [{"estimator": "guess"}]})"))
                  .find("experiments[0].estimator"),
              std::string::npos);
    EXPECT_NE(config_error(json::parse(R"({"model": {"kind": "euclidean"}, "estimator": {"samples": "many"},
                                           "experiments": [{"estimator": "expectation"}]})"))
                  .find("estimator.samples"),
              std::string::npos);
}

TEST(Config, DigestTracksEffectiveSeed) {
    const json doc = divergence_config("unused");
    const ExperimentConfig a = parse_config(doc);
    const ExperimentConfig b = parse_config(doc);
    EXPECT_EQ(a.digest, b.digest);
    EXPECT_EQ(a.digest.size(), 16u);
    EXPECT_NE(a.experiments[0].digest, a.experiments[1].digest);
    const ExperimentConfig other = parse_config(patched(doc, {{"estimator", {{"seed", 6}}}}));
    EXPECT_NE(a.digest, other.digest);
    {
        SeedEnv env("6");
        const ExperimentConfig from_env = parse_config(doc);
        EXPECT_EQ(from_env.estimator.seed, 6u);
        EXPECT_EQ(from_env.digest, other.digest);
    }
    {
        SeedEnv env("six");
        EXPECT_NE(config_error(doc).find("SEMIGROUP_SEED"), std::string::npos);
    }
    // FNV-1a 64 reference values.
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Output, CsvRoundTripsDoubles) {
    ResultRow row;
    row.name = "a,b";
    row.mean = {0.1, -1.0 / 3.0};
    row.std_error = {1e-300, 2.5};
    row.samples = 10;
    row.seed = 3;
    const std::string csv = results_csv({row});
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(header, "name,mean,std_error,samples,seed,runtime_ms,verdict");
    EXPECT_EQ(line.rfind("\"a,b\",", 0), 0u);
    const std::string means = line.substr(6, line.find(',', 6) - 6);
    const auto semi = means.find(';');
    EXPECT_EQ(std::stod(means.substr(0, semi)), 0.1);
    EXPECT_EQ(std::stod(means.substr(semi + 1)), -1.0 / 3.0);
    EXPECT_EQ(std::stod(format_double(1e-300)), 1e-300);
}

TEST(Run, ResultsAreByteIdenticalAcrossRuns) {
    const fs::path dir = scratch("repeat");
    const json doc = divergence_config(dir / "out");
    ASSERT_EQ(run(doc, dir), kOk);
    const std::string first_json = slurp(dir / "out" / "results.json");
    const std::string first_csv = slurp(dir / "out" / "results.csv");
    ASSERT_EQ(run(doc, dir), kOk);
    EXPECT_EQ(first_json, slurp(dir / "out" / "results.json"));
    EXPECT_EQ(first_csv, slurp(dir / "out" / "results.csv"));

    const json parsed = json::parse(first_json);
    EXPECT_EQ(parsed["seed"], 5);
    EXPECT_EQ(parsed["results"].size(), 2u);
    EXPECT_EQ(parsed["results"][0]["inputs_digest"].get<std::string>().size(), 16u);
    EXPECT_EQ(parsed["config_digest"], parse_config(doc).digest);
}

TEST(Run, MeansDoNotDependOnWorkers) {
    const fs::path dir = scratch("workers");
    ASSERT_EQ(run(divergence_config(dir / "one", 1), dir), kOk);
    ASSERT_EQ(run(divergence_config(dir / "three", 3), dir), kOk);
    const json a = json::parse(slurp(dir / "one" / "results.json"));
    const json b = json::parse(slurp(dir / "three" / "results.json"));
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(a["results"][i]["mean"], b["results"][i]["mean"]);
        EXPECT_EQ(a["results"][i]["std_error"], b["results"][i]["std_error"]);
    }
}

TEST(Run, PathDumpWritesOneFilePerPath) {
    const fs::path dir = scratch("paths");
    ASSERT_EQ(run(patched(divergence_config(dir / "out"), {{"output", {{"paths", 3}}}}), dir), kOk);
    for (int i = 0; i < 3; ++i) EXPECT_TRUE(fs::exists(dir / "out" / "paths" / ("path_" + std::to_string(i) + ".csv")));
}

TEST(Run, ExitCodes) {
    const fs::path dir = scratch("codes");
    std::string err;

    // 1: configuration error, including violated h endpoints.
    EXPECT_EQ(run(patched(divergence_config(dir), {{"estimator", {{"h", {{"kind", "piecewise"},
                                                                         {"knots", {0.0, 1.0}},
                                                                         {"values", {0.0, 0.5}}}}}}}),
                  dir, &err),
              kConfigError);
    EXPECT_NE(err.find("h constraint"), std::string::npos);
    std::ostringstream out, e;
    EXPECT_EQ(run_command((dir / "missing.json").string(), out, e), kConfigError);

    // 2: martingale gate.
    const json gated = json::parse(R"({"model": {"kind": "euclidean-custom", "dim": 1, "drift": ["-x1^3"]},
      "estimator": {"samples": 100, "steps": 16},
      "experiments": [{"estimator": "divergence_expectation", "V": ["1"]}]})");
    EXPECT_EQ(run(patched(gated, {{"output", {{"dir", (dir / "o").string()}}}}), dir, &err), kGateRefusal);
    EXPECT_NE(err.find("curvature_lower_bound"), std::string::npos);

    // 3: numerical failure (explosion) once the gate is overridden.
    const json explode = json::parse(R"({"model": {"kind": "euclidean-custom", "dim": 1, "drift": ["x1^3"]},
      "override_gate": true,
      "estimator": {"samples": 50, "steps": 32, "safe_radius": 10},
      "experiments": [{"estimator": "expectation", "f": "x1", "x": [3.0]}]})");
    EXPECT_EQ(run(patched(explode, {{"output", {{"dir", (dir / "o").string()}}}}), dir, &err), kNumericalError);
    EXPECT_NE(err.find("safe region"), std::string::npos);
}

TEST(Run, HarnackRowsCarryReports) {
    const fs::path dir = scratch("harnack");
    const json doc = json::parse(R"({"model": {"kind": "euclidean-ou", "dim": 1, "lambda": 1.0},
      "estimator": {"samples": 2000, "steps": 16, "seed": 2},
      "experiments": [
        {"name": "shift", "estimator": "shift_harnack_verify", "f": "exp(-x1^2/4) + 0.1", "f_lower": 0.1,
         "shift": [0.5], "p": 2, "form": "power"},
        {"name": "unit", "estimator": "shift_harnack_verify", "f": "exp(-x1^2/4) + 0.1", "f_lower": 0.1,
         "shift": [0.5], "p": 1, "form": "power"},
        {"name": "alpha", "estimator": "alpha_constants", "V": ["1"], "v_sup": 1, "div_sup": 0}
      ]})");
    ASSERT_EQ(run(patched(doc, {{"output", {{"dir", (dir / "out").string()}}}}), dir), kOk);
    const json r = json::parse(slurp(dir / "out" / "results.json"))["results"];
    EXPECT_EQ(r[0]["details"]["form"], "power");
    EXPECT_EQ(r[0]["details"]["nodes"].size(), 16u);
    EXPECT_EQ(r[0]["verdict"], "holds");
    // Infinite right-hand side is written as null.
    EXPECT_TRUE(r[1]["mean"][0].is_null());
    EXPECT_EQ(r[2]["mean"].size(), 2u);
}

TEST(Describe, GeometryOracles) {
    const json sd = describe_json("scaled-diagonal", {1.0, 0.0});
    EXPECT_NEAR(sd["rho"].get<double>(), 0.64, 1e-12);
    EXPECT_NEAR(sd["metric"][1][1].get<double>(), 0.64, 1e-12);
    EXPECT_GT(sd["torsion_max"].get<double>(), 0.3);
    const json sp = describe_json("sphere-projection", {});
    EXPECT_LT(sp["torsion_max"].get<double>(), 1e-6);
    const json s = describe_json("sphere", {0.0, 0.0, 1.0});
    // Ric = g on S^2.
    EXPECT_EQ(s["ricci"], s["metric"]);
    std::ostringstream out, err;
    EXPECT_EQ(describe_command("torus", {}, out, err), kConfigError);
    EXPECT_EQ(describe_command("identity", {1.0}, out, err), kConfigError);
}

TEST(Selftest, QuickPassesAndInjectedFaultFails) {
    std::ostringstream out, err;
    SelftestOptions opts;
    opts.quick = true;
    EXPECT_EQ(selftest_command(opts, out, err), kOk) << out.str() << err.str();
    opts.inject_fault = "connection";
    std::ostringstream out2, err2;
    EXPECT_EQ(selftest_command(opts, out2, err2), kSelftestFailure);
    EXPECT_NE((out2.str() + err2.str()).find("selftest failed: metric compatibility"), std::string::npos);
}
