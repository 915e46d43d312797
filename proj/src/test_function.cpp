#include "mclab/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mclab/errors.hpp"

namespace mclab {

TestFunction TestFunction::coordinate_projection(std::size_t axis, double bound) {
    if (!(bound > 0.0)) throw InvalidInput("coordinate projection: bound must be positive");
    return TestFunction(Kind{Coordinate{axis}}, bound, 1.0);
}

TestFunction TestFunction::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw InvalidInput("piecewise linear: need >= 2 knots");
    if (knots.front().first != 0.0 || knots.back().first != 1.0)
        throw InvalidInput("piecewise linear: knots must span [0, 1]");
    double fmax = 0.0, lip = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        fmax = std::max(fmax, std::abs(knots[i].second));
        if (i) {
            const double dx = knots[i].first - knots[i - 1].first;
            if (!(dx > 0.0)) throw InvalidInput("piecewise linear: knot abscissas must increase");
            lip = std::max(lip, std::abs(knots[i].second - knots[i - 1].second) / dx);
        }
    }
    return TestFunction(Kind{PiecewiseLinear{std::move(knots)}}, fmax, lip);
}

TestFunction TestFunction::indicator_smoothed(Point center, double radius, double ramp) {
    if (!(radius >= 0.0) || !(ramp > 0.0)) throw InvalidInput("indicator: need radius >= 0, ramp > 0");
    return TestFunction(Kind{Indicator{std::move(center), radius, ramp}}, 1.0, 1.0 / ramp);
}

double TestFunction::operator()(const MetricSpace& space, const Point& p) const {
    if (const auto* c = std::get_if<Coordinate>(&kind_)) {
        const auto& coords = p.as_coords();
        if (c->axis >= coords.size()) throw InvalidPoint("coordinate projection: axis out of range");
        return coords[c->axis];
    }
    if (const auto* pl = std::get_if<PiecewiseLinear>(&kind_)) {
        const double x = p.as_coords().at(0);
        const auto& kn = pl->knots;
        if (x <= kn.front().first) return kn.front().second;
        if (x >= kn.back().first) return kn.back().second;
        std::size_t hi = 1;
        while (kn[hi].first < x) ++hi;
        const double w = (x - kn[hi - 1].first) / (kn[hi].first - kn[hi - 1].first);
        return kn[hi - 1].second + w * (kn[hi].second - kn[hi - 1].second);
    }
    const auto& ind = std::get<Indicator>(kind_);
    const double d = space.distance(ind.center, p);
    if (d <= ind.radius) return 1.0;
    if (d >= ind.radius + ind.ramp) return 0.0;
    return (ind.radius + ind.ramp - d) / ind.ramp;
}

double TestFunction::delta_f(double alpha) const {
    if (!(alpha > 0.0)) throw InvalidInput("delta_f: alpha must be positive");
    if (lipschitz_ == 0.0) return std::numeric_limits<double>::infinity();
    return alpha / lipschitz_;
}

std::optional<std::size_t> TestFunction::projection_axis() const {
    if (const auto* c = std::get_if<Coordinate>(&kind_)) return c->axis;
    return std::nullopt;
}

const std::vector<std::pair<double, double>>* TestFunction::linear_knots() const {
    if (const auto* pl = std::get_if<PiecewiseLinear>(&kind_)) return &pl->knots;
    return nullptr;
}

}  // namespace mclab
