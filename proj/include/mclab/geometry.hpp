#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "mclab/errors.hpp"

namespace mclab {

// A point is either a coordinate vector (Euclidean / Interval spaces) or an
// index into a finite space. Coincidence detection is exact equality: the
// token construction's t_ij = 0 rule is an exact-coincidence rule, and
// continuous components produce almost-surely distinct samples.

struct Point {
    std::variant<std::vector<double>, std::size_t> value;

    static Point coords(std::vector<double> c) { return Point{std::move(c)}; }
    static Point scalar(double x) { return Point{std::vector<double>{x}}; }
    static Point finite_index(std::size_t i) { return Point{i}; }

    bool is_finite_index() const { return std::holds_alternative<std::size_t>(value); }
    const std::vector<double>& as_coords() const { return std::get<std::vector<double>>(value); }
    std::size_t as_index() const { return std::get<std::size_t>(value); }

    friend bool operator==(const Point& a, const Point& b) { return a.value == b.value; }
    friend bool operator!=(const Point& a, const Point& b) { return !(a == b); }

    // total order for canonical maps over supports
    friend bool operator<(const Point& a, const Point& b) { return a.value < b.value; }

    std::string repr() const;
};

class MetricSpace {
  public:
    struct Euclidean {
        std::size_t dim;
    };
    struct Interval {};  // [0,1] with |x - y|
    struct Finite {
        std::vector<std::vector<double>> matrix;
    };

    static MetricSpace euclidean(std::size_t dim);
    static MetricSpace interval();
    // checks zero diagonal, symmetry, and the triangle inequality for all triples
    static MetricSpace finite(std::vector<std::vector<double>> matrix);

    double distance(const Point& a, const Point& b) const;
    bool contains(const Point& p) const;
    std::size_t dimension() const;  // coordinate length; 0 for finite spaces
    bool is_finite() const { return std::holds_alternative<Finite>(kind_); }
    std::size_t finite_size() const { return std::get<Finite>(kind_).matrix.size(); }

  private:
    explicit MetricSpace(std::variant<Euclidean, Interval, Finite> kind) : kind_(std::move(kind)) {}
    std::variant<Euclidean, Interval, Finite> kind_;
};

}  // namespace mclab
