#include "mclab/geometry.hpp"

#include <cmath>
#include <sstream>

namespace mclab {

std::string Point::repr() const {
    std::ostringstream os;
    if (is_finite_index()) {
        os << '#' << as_index();
    } else {
        const auto& c = as_coords();
        os << '(';
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (i) os << ' ';
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", c[i]);
            os << buf;
        }
        os << ')';
    }
    return os.str();
}

MetricSpace MetricSpace::euclidean(std::size_t dim) {
    if (dim < 1) throw InvalidInput("euclidean space needs dimension >= 1");
    return MetricSpace(Euclidean{dim});
}

MetricSpace MetricSpace::interval() { return MetricSpace(Interval{}); }

MetricSpace MetricSpace::finite(std::vector<std::vector<double>> matrix) {
    const std::size_t n = matrix.size();
    if (n == 0) throw InvalidInput("finite space needs at least one point");
    for (const auto& row : matrix)
        if (row.size() != n) throw InvalidInput("finite distance matrix must be square");
    for (std::size_t i = 0; i < n; ++i) {
        if (matrix[i][i] != 0.0) throw InvalidInput("finite distance matrix must have zero diagonal");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(matrix[i][j] >= 0.0)) throw InvalidInput("finite distance matrix must be nonnegative");
            if (matrix[i][j] != matrix[j][i]) throw InvalidInput("finite distance matrix must be symmetric");
            if (i != j && matrix[i][j] == 0.0)
                throw InvalidInput("finite distance matrix: off-diagonal zero makes points coincide");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (matrix[i][j] > matrix[i][k] + matrix[k][j] + 1e-12)
                    throw InvalidInput("finite distance matrix violates the triangle inequality");
    return MetricSpace(Finite{std::move(matrix)});
}

double MetricSpace::distance(const Point& a, const Point& b) const {
    if (!contains(a) || !contains(b)) throw InvalidPoint("point does not belong to this space");
    if (const auto* fin = std::get_if<Finite>(&kind_)) {
        return fin->matrix[a.as_index()][b.as_index()];
    }
    const auto& ca = a.as_coords();
    const auto& cb = b.as_coords();
    if (ca == cb) return 0.0;  // exact-coincidence rule
    double s = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const double d = ca[i] - cb[i];
        s += d * d;
    }
    return std::sqrt(s);
}

bool MetricSpace::contains(const Point& p) const {
    if (const auto* fin = std::get_if<Finite>(&kind_)) {
        return p.is_finite_index() && p.as_index() < fin->matrix.size();
    }
    if (p.is_finite_index()) return false;
    const auto& c = p.as_coords();
    if (const auto* euc = std::get_if<Euclidean>(&kind_)) return c.size() == euc->dim;
    // Interval
    return c.size() == 1 && c[0] >= 0.0 && c[0] <= 1.0;
}

std::size_t MetricSpace::dimension() const {
    if (const auto* euc = std::get_if<Euclidean>(&kind_)) return euc->dim;
    if (std::holds_alternative<Interval>(kind_)) return 1;
    return 0;
}

}  // namespace mclab
