#include "cli.hpp"

#include <semigroup/errors.hpp>

#include <iostream>

namespace semigroup::cli {

namespace {

json matrix(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector(const Vec& v) { return json(to_std(v)); }

Vec at_point(const std::vector<double>& at, int dim, const Vec& fallback) {
    if (at.empty()) return fallback;
    if (static_cast<int>(at.size()) != dim)
        throw ConfigError("--at: expected " + std::to_string(dim) + " coordinates");
    return to_vec(at);
}

json describe_model(const ManifoldModel& model, const std::vector<double>& at) {
    const Vec x = model.project(at_point(at, model.ambient_dim(), model.base_point()));
    const Vec u = model.point_to_chart(x);
    json christoffel = json::array();
    for (const Mat& g : model.chart_christoffel(u)) christoffel.push_back(matrix(g));
    return {{"name", model.name()},
            {"kind", "intrinsic"},
            {"dim", model.dim()},
            {"point", vector(x)},
            {"chart_point", vector(u)},
            {"metric", matrix(model.chart_metric(u))},
            {"christoffel", christoffel},
            {"ricci", matrix(model.chart_ricci(u))},
            {"drift", vector(model.drift(x))},
            {"div_drift", model.div_drift(x)}};
}

json describe_system(const ExtrinsicSystem& sys, const std::vector<double>& at) {
    const Vec x = sys.project(at_point(at, sys.ambient_dim(), sys.base_point()));
    const ExtrinsicFrame f = evaluate_frame(sys, x);
    const Mat basis = tangent_basis(sys, x);
    json torsion = json::array();
    double torsion_max = 0.0;
    for (int i = 0; i < basis.cols(); ++i)
        for (int j = i + 1; j < basis.cols(); ++j) {
            const Vec t = ljw_torsion(f, basis.col(i), basis.col(j));
            torsion_max = std::max(torsion_max, t.norm());
            torsion.push_back({{"i", i}, {"j", j}, {"value", vector(t)}});
        }
    return {{"name", sys.name()},
            {"kind", "extrinsic"},
            {"dim", sys.dim()},
            {"noise_dim", sys.noise_dim()},
            {"point", vector(x)},
            {"tangent_basis", matrix(basis)},
            {"metric", matrix(basis.transpose() * f.g * basis)},
            {"metric_ambient", matrix(f.g)},
            {"sigma_min", sigma_min(sys, x)},
            {"torsion", torsion},
            {"torsion_max", torsion_max},
            {"trace_adjoint_nabla_A0", trace_adjoint_nabla_A0(f)},
            {"a0A", vector(a0A_field(sys, f))},
            {"contorsion_sum", vector(contorsion_sum(sys, x))},
            {"rho", density_rho(sys, x)}};
}

}  // namespace

json describe_json(const std::string& name, const std::vector<double>& at) {
    if (is_model_name(name)) return describe_model(*builtin_model(name), at);
    if (is_system_name(name)) return describe_system(*builtin_system(name), at);
    throw ConfigError("unknown model or system '" + name +
                      "' (known: euclidean, euclidean-ou, sphere, identity, identity-ou, scaled-diagonal, "
                      "sphere-projection)");
}

int describe_command(const std::string& name, const std::vector<double>& at, std::ostream& out, std::ostream& err) {
    try {
        out << describe_json(name, at).dump(2) << '\n';
        return kOk;
    } catch (...) {
        return report_error(err);
    }
}

}  // namespace semigroup::cli
