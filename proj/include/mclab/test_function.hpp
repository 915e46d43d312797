#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mclab/geometry.hpp"

namespace mclab {

// Bounded test functions f with a cached bound f_max and an analytic
// continuity modulus delta_f: d(x,y) <= delta_f(alpha) implies
// |f(x) - f(y)| <= alpha. The modulus is alpha / L for Lipschitz constant L.

class TestFunction {
  public:
    // f(x) = x[axis]; `bound` is the sup of |x[axis]| over the working domain
    // (1 for [0,1]-boxes), cached as f_max.
    static TestFunction coordinate_projection(std::size_t axis, double bound = 1.0);
    // piecewise-linear on [0,1], knots (x ascending in [0,1], value)
    static TestFunction piecewise_linear(std::vector<std::pair<double, double>> knots);
    // 1 inside radius of center, 0 beyond radius + ramp, linear in between
    static TestFunction indicator_smoothed(Point center, double radius, double ramp);

    double operator()(const MetricSpace& space, const Point& p) const;
    double f_max() const { return f_max_; }
    // largest delta with d <= delta => |f(x)-f(y)| <= alpha
    double delta_f(double alpha) const;
    bool is_constant() const { return lipschitz_ == 0.0; }

    // shape probes for closed-form integration against simple measures
    std::optional<std::size_t> projection_axis() const;
    const std::vector<std::pair<double, double>>* linear_knots() const;

  private:
    struct Coordinate {
        std::size_t axis;
    };
    struct PiecewiseLinear {
        std::vector<std::pair<double, double>> knots;
    };
    struct Indicator {
        Point center;
        double radius, ramp;
    };
    using Kind = std::variant<Coordinate, PiecewiseLinear, Indicator>;

    TestFunction(Kind kind, double fmax, double lipschitz)
        : kind_(std::move(kind)), f_max_(fmax), lipschitz_(lipschitz) {}

    Kind kind_;
    double f_max_;
    double lipschitz_;
};

}  // namespace mclab
