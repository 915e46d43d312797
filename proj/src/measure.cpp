#include "mclab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "mclab/errors.hpp"

namespace mclab {

ValidationResult validate_atoms(const std::vector<Atom>& atoms) {
    if (atoms.empty()) return {MeasureViolation::MassSumViolation, "measure has no atoms"};
    double sum = 0.0;
    for (const auto& a : atoms) {
        if (!(a.mass > 0.0) || a.mass > 1.0 + 1e-9)
            return {MeasureViolation::NonPositiveMass, "atom mass outside (0, 1]"};
        sum += a.mass;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "atom masses sum to %.12g", sum);
        return {MeasureViolation::MassSumViolation, buf};
    }
    for (std::size_t i = 0; i < atoms.size(); ++i)
        for (std::size_t j = i + 1; j < atoms.size(); ++j)
            if (atoms[i].location == atoms[j].location)
                return {MeasureViolation::DistinctnessViolation, "duplicate atom locations"};
    return {};
}

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    const auto result = validate_atoms(atoms_);
    if (!result.ok()) throw InvalidInput("invalid discrete measure: " + result.detail);
}

std::optional<std::size_t> DiscreteMeasure::find(const Point& location) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        if (atoms_[i].location == location) return i;
    return std::nullopt;
}

ValidationResult validate(const DiscreteMeasure& measure) { return validate_atoms(measure.atoms()); }

double tv_distance(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
    std::map<Point, double> diff;
    for (const auto& a : m1.atoms()) diff[a.location] += a.mass;
    for (const auto& a : m2.atoms()) diff[a.location] -= a.mass;
    double l1 = 0.0;
    for (const auto& [loc, d] : diff) l1 += std::abs(d);
    return 0.5 * l1;
}

InitialMeasure InitialMeasure::atomic(DiscreteMeasure m) { return InitialMeasure(Kind{std::move(m)}); }

InitialMeasure InitialMeasure::uniform_box(UniformBox box) {
    if (box.lo.size() != box.hi.size() || box.lo.empty())
        throw InvalidInput("uniform box: lo/hi must be nonempty and match");
    for (std::size_t i = 0; i < box.lo.size(); ++i)
        if (!(box.lo[i] < box.hi[i])) throw InvalidInput("uniform box: need lo < hi on every axis");
    return InitialMeasure(Kind{std::move(box)});
}

InitialMeasure InitialMeasure::mixture(std::vector<std::pair<double, InitialMeasure>> parts) {
    if (parts.empty()) throw InvalidInput("mixture: no components");
    Mixture mix;
    double sum = 0.0;
    for (auto& [w, part] : parts) {
        if (!(w > 0.0)) throw InvalidInput("mixture: weights must be positive");
        sum += w;
        if (auto* dm = std::get_if<DiscreteMeasure>(&part.kind_)) {
            mix.weights.push_back(w);
            mix.parts.emplace_back(std::move(*dm));
        } else if (auto* ub = std::get_if<UniformBox>(&part.kind_)) {
            mix.weights.push_back(w);
            mix.parts.emplace_back(std::move(*ub));
        } else {
            throw InvalidInput("mixture: components must be atomic or uniform-box measures");
        }
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("mixture: weights must sum to 1");
    return InitialMeasure(Kind{std::move(mix)});
}

namespace {

Point sample_atomic(const DiscreteMeasure& m, RandomStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& a : m.atoms()) {
        acc += a.mass;
        if (u < acc) return a.location;
    }
    return m.atoms().back().location;
}

Point sample_box(const UniformBox& box, RandomStream& rng) {
    std::vector<double> c(box.lo.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = rng.uniform_in(box.lo[i], box.hi[i]);
    return Point::coords(std::move(c));
}

}  // namespace

Point InitialMeasure::sample(RandomStream& rng) const {
    if (const auto* dm = std::get_if<DiscreteMeasure>(&kind_)) return sample_atomic(*dm, rng);
    if (const auto* ub = std::get_if<UniformBox>(&kind_)) return sample_box(*ub, rng);
    const auto& mix = std::get<Mixture>(kind_);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = mix.parts.size() - 1;
    for (std::size_t k = 0; k < mix.parts.size(); ++k) {
        acc += mix.weights[k];
        if (u < acc) {
            pick = k;
            break;
        }
    }
    if (const auto* dm = std::get_if<DiscreteMeasure>(&mix.parts[pick])) return sample_atomic(*dm, rng);
    return sample_box(std::get<UniformBox>(mix.parts[pick]), rng);
}

std::size_t InitialMeasure::dimension() const {
    if (const auto* dm = std::get_if<DiscreteMeasure>(&kind_)) {
        const Point& p = dm->location(0);
        return p.is_finite_index() ? 0 : p.as_coords().size();
    }
    if (const auto* ub = std::get_if<UniformBox>(&kind_)) return ub->lo.size();
    const auto& mix = std::get<Mixture>(kind_);
    if (const auto* dm = std::get_if<DiscreteMeasure>(&mix.parts[0])) {
        const Point& p = dm->location(0);
        return p.is_finite_index() ? 0 : p.as_coords().size();
    }
    return std::get<UniformBox>(mix.parts[0]).lo.size();
}

}  // namespace mclab
