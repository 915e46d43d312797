#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mclab/geometry.hpp"
#include "mclab/rng.hpp"

namespace mclab {

struct Atom {
    Point location;
    double mass = 0.0;
};

enum class MeasureViolation {
    Ok,
    NonPositiveMass,
    MassSumViolation,
    DistinctnessViolation,
};

struct ValidationResult {
    MeasureViolation violation = MeasureViolation::Ok;
    std::string detail;
    bool ok() const { return violation == MeasureViolation::Ok; }
};

// Reports the first violated invariant: masses in (0,1], sum within 1e-9 of
// 1, locations pairwise distinct (exact coincidence is the zero-distance
// rule, so distinctness is exact inequality).
ValidationResult validate_atoms(const std::vector<Atom>& atoms);

class DiscreteMeasure {
  public:
    explicit DiscreteMeasure(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double mass(std::size_t i) const { return atoms_[i].mass; }
    const Point& location(std::size_t i) const { return atoms_[i].location; }

    // index of the atom at exactly this location, if any
    std::optional<std::size_t> find(const Point& location) const;

  private:
    std::vector<Atom> atoms_;
};

ValidationResult validate(const DiscreteMeasure& measure);

// half the l1 distance over the union support
double tv_distance(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

struct UniformBox {
    std::vector<double> lo, hi;  // axis-aligned, lo[i] < hi[i]
};

class InitialMeasure {
  public:
    struct Component;  // Atomic or UniformBox, used by Mixture

    static InitialMeasure atomic(DiscreteMeasure m);
    static InitialMeasure uniform_box(UniformBox box);
    // weights positive, sum to 1 within 1e-9
    static InitialMeasure mixture(std::vector<std::pair<double, InitialMeasure>> parts);

    Point sample(RandomStream& rng) const;

    bool is_atomic() const { return std::holds_alternative<DiscreteMeasure>(kind_); }
    const DiscreteMeasure& as_atomic() const { return std::get<DiscreteMeasure>(kind_); }
    const UniformBox* as_box() const { return std::get_if<UniformBox>(&kind_); }

    std::size_t dimension() const;  // coordinate length of sampled points (0 for finite-space atoms)

  private:
    struct Mixture {
        std::vector<double> weights;
        std::vector<std::variant<DiscreteMeasure, UniformBox>> parts;
    };
    using Kind = std::variant<DiscreteMeasure, UniformBox, Mixture>;
    explicit InitialMeasure(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

}  // namespace mclab
