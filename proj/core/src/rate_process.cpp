#include "semigroup/rate_process.hpp"

#include "semigroup/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace semigroup {

RateProcess::RateProcess(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() < 2 || knots_.size() != values_.size())
        throw ConfigError("h needs at least two knots and one value per knot");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i]))
            throw ConfigError("h knots and values must be finite");
        if (i > 0 && !(knots_[i] > knots_[i - 1])) throw ConfigError("h knots must be strictly increasing");
    }
}

RateProcess RateProcess::linear(double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("T must be positive");
    return RateProcess({0.0, horizon}, {0.0, 1.0});
}

RateProcess RateProcess::power(double horizon, double p, int pieces) {
    if (!(horizon > 0.0)) throw ConfigError("T must be positive");
    if (!(p > 0.0)) throw ConfigError("h power must be positive");
    if (pieces < 1) throw ConfigError("h needs at least one piece");
    std::vector<double> knots, values;
    for (int i = 0; i <= pieces; ++i) {
        const double s = static_cast<double>(i) / pieces;
        knots.push_back(s * horizon);
        values.push_back(std::pow(s, p));
    }
    knots.back() = horizon;
    return RateProcess(std::move(knots), std::move(values));
}

double RateProcess::operator()(double t) const {
    if (t <= knots_.front()) return values_.front();
    if (t >= knots_.back()) return values_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double w = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
    return (1.0 - w) * values_[i] + w * values_[i + 1];
}

double RateProcess::slope(double t) const {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin());
    i = std::clamp<std::size_t>(i, 1, knots_.size() - 1) - 1;
    return (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
}

double RateProcess::energy() const {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        const double d = values_[i + 1] - values_[i];
        e += d * d / (knots_[i + 1] - knots_[i]);
    }
    return e;
}

double RateProcess::sup() const {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
}

void RateProcess::require_unit_endpoints(double horizon, const std::string& purpose) const {
    const double tol = 1e-12 * std::max(1.0, horizon);
    std::ostringstream msg;
    if (std::abs(knots_.front()) > tol || std::abs(knots_.back() - horizon) > tol) {
        msg << "h constraint (" << purpose << "): knots must span [0, T] with T = " << horizon;
        throw ConfigError(msg.str());
    }
    if (std::abs(values_.front()) > 1e-12) {
        msg << "h constraint (" << purpose << "): h(0) = " << values_.front() << ", must be 0";
        throw ConfigError(msg.str());
    }
    if (std::abs(values_.back() - 1.0) > 1e-12) {
        msg << "h constraint (" << purpose << "): h(T) = " << values_.back() << ", must be 1";
        throw ConfigError(msg.str());
    }
}

}  // namespace semigroup
