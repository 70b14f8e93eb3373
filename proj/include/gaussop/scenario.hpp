#pragma once

#include "gaussop/fock_oracle.hpp"
#include "gaussop/qme.hpp"
#include "gaussop/state_factory.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gaussop {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class ComparisonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EngineChoice { closed_form, ode, oracle, both };

EngineChoice parse_engine(const std::string& name);
std::string engine_name(EngineChoice e);

struct InitialState {
    std::string kind;
    std::vector<GaussianParams> members;  // one member unless an ensemble
    bool ensemble = false;
    // set when the oracle can build the state by operator composition
    std::optional<std::pair<StateKind, FockStateSpec>> fock;
};

struct ScenarioConfig {
    std::string scenario;
    std::string label;
    Index modes = 1;
    bool imaginary_time = false;
    LindbladSpec lindblad;
    Eigen::VectorXd omega;  // thermal_equilibrium energies
    double tau0 = 1e-3;
    InitialState initial;
    std::vector<double> grid;
    EngineChoice engine = EngineChoice::closed_form;
    int nmax = 0;
    double edge_threshold = 1e-8;
    double tail_threshold = 1e-12;
    double tolerance = 1e-4;
    std::string output = ".";
};

ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

struct RunOutput {
    std::string csv;
    nlohmann::json summary;
    std::optional<double> max_deviation;
    bool comparison_passed = true;
};

RunOutput run_scenario(const ScenarioConfig& cfg);

struct ValidationOutput {
    std::string text;
    bool passed = true;
};

ValidationOutput validate_scenario(const ScenarioConfig& cfg);

std::string format_number(double v);

}  // namespace gaussop
