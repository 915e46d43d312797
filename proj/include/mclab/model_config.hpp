#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mclab/measure.hpp"
#include "mclab/rate.hpp"
#include "mclab/test_function.hpp"

namespace mclab {

// JSON model document: space, rate function, measure, optional test
// function, plus scalar knobs. Malformed JSON -> ParseError with position;
// semantic violations -> ConfigError naming the offending field.

struct ModelConfig {
    MetricSpace space = MetricSpace::interval();
    RateFunction phi = RateFunction::inverse_power(1.0);
    std::optional<InitialMeasure> measure;
    std::optional<TestFunction> f;
    double t = 1.0;
    std::size_t n_tokens = 256;
    nlohmann::json raw;
};

ModelConfig parse_model_config(const std::string& text);
ModelConfig load_model_config(const std::filesystem::path& path);

struct RunConfig {
    std::string command;          // verify | simulate | tokens | oracle | experiment
    std::string experiment_name;  // for command == experiment
    std::optional<ModelConfig> model;
    std::uint64_t seed = 0;
    std::size_t replicates = 10000;
    double sigma = 4.0;
    std::filesystem::path out_dir = ".";
    int threads = 0;
};

// referenced experiment names must exist
void validate_experiment_name(const std::string& name);

}  // namespace mclab
