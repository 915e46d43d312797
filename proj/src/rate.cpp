#include "mclab/rate.hpp"

#include <algorithm>
#include <cmath>

namespace mclab {

RateFunction RateFunction::inverse_power(double alpha) {
    if (!(alpha > 0.0)) throw InvalidInput("inverse_power: exponent must be positive");
    return RateFunction(InversePower{alpha});
}

RateFunction RateFunction::constant(double level) {
    if (!(level > 0.0)) throw InvalidInput("constant rate: level must be positive");
    return RateFunction(Constant{level});
}

RateFunction RateFunction::tabulated(std::vector<double> x, std::vector<double> y) {
    if (x.size() < 2 || x.size() != y.size()) throw InvalidInput("tabulated rate: need matching knot lists, >= 2 knots");
    if (!(x.front() > 0.0)) throw InvalidInput("tabulated rate: knots must start above 0");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw InvalidInput("tabulated rate: knot abscissas must be strictly increasing");
    // (H1) on the knots; linear interpolation of positive values stays positive
    for (double v : y)
        if (!(v > 0.0)) throw InvalidInput("tabulated rate violates (H1): values must be positive");
    return RateFunction(Tabulated{std::move(x), std::move(y)});
}

double RateFunction::operator()(double x) const {
    if (!(x >= 0.0)) throw DomainError("rate: argument must be nonnegative");
    if (const auto* ip = std::get_if<InversePower>(&kind_)) {
        if (x == 0.0) return infinite();
        return std::pow(x, -ip->alpha);
    }
    if (const auto* c = std::get_if<Constant>(&kind_)) return c->level;
    const auto& tab = std::get<Tabulated>(kind_);
    if (x < tab.x.front() || x > tab.x.back()) throw DomainError("tabulated rate evaluated outside its domain");
    const auto it = std::upper_bound(tab.x.begin(), tab.x.end(), x);
    const std::size_t hi = std::min<std::size_t>(tab.x.size() - 1, static_cast<std::size_t>(it - tab.x.begin()));
    if (hi == 0) return tab.y.front();
    const std::size_t lo = hi - 1;
    const double w = (x - tab.x[lo]) / (tab.x[hi] - tab.x[lo]);
    return tab.y[lo] + w * (tab.y[hi] - tab.y[lo]);
}

bool RateFunction::satisfies_h2() const { return std::holds_alternative<InversePower>(kind_); }

double phi_min(const MetricSpace& space, const RateFunction& phi, const std::vector<Point>& points) {
    if (points.size() < 2) throw InvalidInput("phi_min: need at least 2 points");
    double best = RateFunction::infinite();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double d = space.distance(points[i], points[j]);
            if (d == 0.0) continue;  // coincident witnesses merge instantly, no finite rate to bound
            best = std::min(best, phi(d));
        }
    if (!(best < RateFunction::infinite()))
        throw InvalidInput("phi_min: witness cloud has no pair at positive distance");
    return best;
}

}  // namespace mclab
