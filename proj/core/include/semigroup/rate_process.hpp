#pragma once

#include <string>
#include <vector>

namespace semigroup {

/// Piecewise-linear scalar control h on [0, T], given by its values at
/// sorted knots. Its derivative is piecewise constant.
class RateProcess {
public:
    RateProcess(std::vector<double> knots, std::vector<double> values);

    /// h(t) = t / T.
    static RateProcess linear(double horizon);
    /// Piecewise-linear interpolant of h(t) = (t / T)^p on `pieces` equal intervals.
    static RateProcess power(double horizon, double p, int pieces = 64);

    double operator()(double t) const;
    /// Slope of the piece containing t (right-continuous; the last piece at T).
    double slope(double t) const;
    double horizon() const { return knots_.back(); }
    /// Integral of hdot^2 over [0, T].
    double energy() const;
    /// sup |h| over [0, T].
    double sup() const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

    /// Checks that the knots span [0, T] and that h(0) = 0 and h(T) = 1, as
    /// required both by the divergence formula and by l = (1 - h) v in the
    /// backward gradient formula. Throws ConfigError naming the violated
    /// constraint.
    void require_unit_endpoints(double horizon, const std::string& purpose) const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

}  // namespace semigroup
