#include "mclab/model_config.hpp"

#include <fstream>
#include <sstream>

#include "mclab/errors.hpp"

namespace mclab {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

double require_number(const json& j, const std::string& field) {
    if (!j.is_number()) config_error(field, "expected a number");
    return j.get<double>();
}

Point parse_point(const json& j, const std::string& field, const MetricSpace& space) {
    if (j.is_number_unsigned() && space.is_finite()) return Point::finite_index(j.get<std::size_t>());
    if (j.is_array()) {
        std::vector<double> coords;
        for (const auto& c : j) coords.push_back(require_number(c, field));
        return Point::coords(std::move(coords));
    }
    if (j.is_number()) return Point::scalar(j.get<double>());
    config_error(field, "expected coordinates (array), a scalar, or a finite-space index");
}

MetricSpace parse_space(const json& j) {
    if (!j.is_object()) config_error("space", "expected an object");
    const std::string kind = j.value("kind", "");
    if (kind == "interval") return MetricSpace::interval();
    if (kind == "euclidean") {
        if (!j.contains("dim")) config_error("space.dim", "missing dimension");
        return MetricSpace::euclidean(j.at("dim").get<std::size_t>());
    }
    if (kind == "finite") {
        if (!j.contains("matrix")) config_error("space.matrix", "missing distance matrix");
        std::vector<std::vector<double>> matrix;
        for (const auto& row : j.at("matrix")) {
            matrix.emplace_back();
            for (const auto& v : row) matrix.back().push_back(require_number(v, "space.matrix"));
        }
        try {
            return MetricSpace::finite(std::move(matrix));
        } catch (const InvalidInput& e) {
            config_error("space.matrix", e.what());
        }
    }
    config_error("space.kind", "must be one of interval, euclidean, finite");
}

RateFunction parse_phi(const json& j) {
    if (!j.is_object()) config_error("phi", "expected an object");
    const std::string kind = j.value("kind", "");
    try {
        if (kind == "inverse_power") return RateFunction::inverse_power(require_number(j.at("alpha"), "phi.alpha"));
        if (kind == "constant") return RateFunction::constant(require_number(j.at("level"), "phi.level"));
        if (kind == "tabulated") {
            std::vector<double> x, y;
            for (const auto& v : j.at("x")) x.push_back(require_number(v, "phi.x"));
            for (const auto& v : j.at("y")) y.push_back(require_number(v, "phi.y"));
            return RateFunction::tabulated(std::move(x), std::move(y));
        }
    } catch (const json::exception& e) {
        config_error("phi", e.what());
    } catch (const InvalidInput& e) {
        config_error("phi", e.what());
    }
    config_error("phi.kind", "must be one of inverse_power, constant, tabulated");
}

DiscreteMeasure parse_atoms(const json& j, const std::string& field, const MetricSpace& space) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a nonempty atom array");
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& a = j[k];
        const std::string at = field + "[" + std::to_string(k) + "]";
        if (!a.is_object() || !a.contains("location") || !a.contains("mass"))
            config_error(at, "each atom needs location and mass");
        atoms.push_back({parse_point(a.at("location"), at + ".location", space),
                         require_number(a.at("mass"), at + ".mass")});
    }
    const auto check = validate_atoms(atoms);
    if (!check.ok()) config_error(field, check.detail);
    for (const auto& a : atoms)
        if (!space.contains(a.location)) config_error(field, "atom location outside the configured space");
    return DiscreteMeasure(std::move(atoms));
}

InitialMeasure parse_measure(const json& j, const MetricSpace& space, const std::string& field = "measure") {
    if (!j.is_object()) config_error(field, "expected an object");
    const std::string kind = j.value("kind", "");
    if (kind == "atomic") {
        if (!j.contains("atoms")) config_error(field + ".atoms", "missing atom list");
        return InitialMeasure::atomic(parse_atoms(j.at("atoms"), field + ".atoms", space));
    }
    if (kind == "uniform_box") {
        UniformBox box;
        if (!j.contains("lo") || !j.contains("hi")) config_error(field, "uniform_box needs lo and hi");
        for (const auto& v : j.at("lo")) box.lo.push_back(require_number(v, field + ".lo"));
        for (const auto& v : j.at("hi")) box.hi.push_back(require_number(v, field + ".hi"));
        try {
            return InitialMeasure::uniform_box(std::move(box));
        } catch (const InvalidInput& e) {
            config_error(field, e.what());
        }
    }
    if (kind == "mixture") {
        if (!j.contains("components")) config_error(field + ".components", "missing component list");
        std::vector<std::pair<double, InitialMeasure>> parts;
        for (std::size_t k = 0; k < j.at("components").size(); ++k) {
            const auto& c = j.at("components")[k];
            const std::string at = field + ".components[" + std::to_string(k) + "]";
            if (!c.contains("weight") || !c.contains("measure")) config_error(at, "needs weight and measure");
            parts.emplace_back(require_number(c.at("weight"), at + ".weight"),
                               parse_measure(c.at("measure"), space, at + ".measure"));
        }
        try {
            return InitialMeasure::mixture(std::move(parts));
        } catch (const InvalidInput& e) {
            config_error(field, e.what());
        }
    }
    config_error(field + ".kind", "must be one of atomic, uniform_box, mixture");
}

TestFunction parse_f(const json& j, const MetricSpace& space) {
    if (!j.is_object()) config_error("f", "expected an object");
    const std::string kind = j.value("kind", "");
    try {
        if (kind == "coordinate_projection")
            return TestFunction::coordinate_projection(j.value("axis", std::size_t{0}), j.value("bound", 1.0));
        if (kind == "piecewise_linear") {
            std::vector<std::pair<double, double>> knots;
            for (const auto& k : j.at("knots")) {
                if (!k.is_array() || k.size() != 2) config_error("f.knots", "each knot is [x, value]");
                knots.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            return TestFunction::piecewise_linear(std::move(knots));
        }
        if (kind == "indicator_smoothed")
            return TestFunction::indicator_smoothed(parse_point(j.at("center"), "f.center", space),
                                                    require_number(j.at("radius"), "f.radius"),
                                                    require_number(j.at("ramp"), "f.ramp"));
    } catch (const json::exception& e) {
        config_error("f", e.what());
    } catch (const InvalidInput& e) {
        config_error("f", e.what());
    }
    config_error("f.kind", "must be one of coordinate_projection, piecewise_linear, indicator_smoothed");
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root: expected a JSON object");

    ModelConfig cfg;
    cfg.raw = j;
    if (j.contains("space")) cfg.space = parse_space(j.at("space"));
    if (j.contains("phi")) cfg.phi = parse_phi(j.at("phi"));
    if (j.contains("measure")) cfg.measure = parse_measure(j.at("measure"), cfg.space);
    if (j.contains("f")) cfg.f = parse_f(j.at("f"), cfg.space);
    if (j.contains("t")) {
        cfg.t = require_number(j.at("t"), "t");
        if (cfg.t < 0.0) config_error("t", "time must be nonnegative");
    }
    if (j.contains("n_tokens")) {
        if (!j.at("n_tokens").is_number_unsigned()) config_error("n_tokens", "expected a positive integer");
        cfg.n_tokens = j.at("n_tokens").get<std::size_t>();
        if (cfg.n_tokens < 1) config_error("n_tokens", "expected a positive integer");
    }
    return cfg;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_config(buf.str());
}

void validate_experiment_name(const std::string& name) {
    static const char* known[] = {"bounded_phi_counterexample", "sparse_support", "kingman_sweep",
                                  "tv_convergence"};
    for (const char* k : known)
        if (name == k) return;
    throw ConfigError("experiment: unknown name '" + name +
                      "' (expected bounded_phi_counterexample, sparse_support, kingman_sweep, tv_convergence)");
}

}  // namespace mclab
