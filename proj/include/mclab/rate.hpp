#pragma once

#include <limits>
#include <variant>
#include <vector>

#include "mclab/errors.hpp"
#include "mclab/geometry.hpp"

namespace mclab {

// Meeting-rate kernel phi. (H1): phi(x) > 0 for x > 0. (H2): phi(x) -> inf as
// x -> 0, which only the inverse-power kind provides; constant and tabulated
// kernels carry satisfies_h2() == false and are accepted only by the
// operations that explicitly allow non-Feller rates (the bounded-rate
// experiments).

class RateFunction {
  public:
    static RateFunction inverse_power(double alpha);  // phi(x) = x^{-alpha}, alpha > 0
    static RateFunction constant(double level);       // phi == level > 0, even at x = 0
    // piecewise-linear positive function on [x.front(), x.back()], x ascending > 0
    static RateFunction tabulated(std::vector<double> x, std::vector<double> y);

    // phi(x) for x > 0; +infinity at x = 0 when satisfies_h2(); Constant
    // returns its level at 0; Tabulated outside its knots -> DomainError.
    double operator()(double x) const;

    bool satisfies_h2() const;
    bool is_constant() const { return std::holds_alternative<Constant>(kind_); }

    static double infinite() { return std::numeric_limits<double>::infinity(); }

  private:
    struct InversePower {
        double alpha;
    };
    struct Constant {
        double level;
    };
    struct Tabulated {
        std::vector<double> x, y;
    };
    explicit RateFunction(std::variant<InversePower, Constant, Tabulated> kind) : kind_(std::move(kind)) {}
    std::variant<InversePower, Constant, Tabulated> kind_;
};

// min over unordered pairs of phi(d(x, y)) for a finite witness cloud (the
// implementable surrogate for phi_min of a compact set)
double phi_min(const MetricSpace& space, const RateFunction& phi, const std::vector<Point>& points);

}  // namespace mclab
