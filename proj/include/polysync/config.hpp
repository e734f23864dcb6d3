#pragma once

// Experiment configuration: a YAML document with nested sections, matrices as
// row-major nested lists. Errors carry the line and column of the offending node.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polysync/datagen.hpp"
#include "polysync/graphnet.hpp"
#include "polysync/simulate.hpp"

namespace polysync {

struct AgentConfig {
    std::string name;
    Mat a;
    Mat b;
    Mat c;
    double w_bar = 0.0; // process noise half-width (hypercube)
    double v_bar = 0.0; // measurement noise half-width
    Vec input_box;      // half-widths of the excitation input box, size p
    Vec data_x0;        // initial state of the data experiment; empty = 0.5 * ones

    [[nodiscard]] TrueSystem truth() const { return {a, b, c}; }
    friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

struct LeaderConfig {
    Mat s;
    Mat h;
    Vec x0; // empty: drawn from the simulation seed

    friend bool operator==(const LeaderConfig&, const LeaderConfig&) = default;
};

struct DataConfig {
    std::size_t rho = 20;
    std::uint64_t seed = 1;
    double restart_bound = 100.0;

    friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct SynthesisConfig {
    double margin = 1e-3;
    double observer_margin = 1e-3;
    NoiseMode noise_mode = NoiseMode::Verbatim;
    int iteration_cap = 600;
    std::optional<Mat> f; // observer gain; designed when absent

    friend bool operator==(const SynthesisConfig&, const SynthesisConfig&) = default;
};

struct SimulationConfig {
    std::size_t horizon = 300;
    std::uint64_t seed = 1;
    double init_range = 1.0;     // initial states uniform in [-r, r]
    std::size_t bound_agent = 0; // 1-based follower for the vertex bound; 0 = last
    std::size_t max_generators = 64;
    std::size_t tail_from = 200; // start of the steady-state window in reports

    friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct SweepConfig {
    Vec levels;
    std::size_t seeds = 20;

    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
    LeaderConfig leader;
    std::vector<AgentConfig> agents;
    std::vector<Edge> edges; // 0 = leader, 1..N = followers
    DataConfig data;
    SynthesisConfig synthesis;
    SimulationConfig simulation;
    SweepConfig sweep;

    [[nodiscard]] std::size_t n_followers() const noexcept { return agents.size(); }
    [[nodiscard]] Topology topology() const;
    [[nodiscard]] LeaderModel leader_model() const { return {leader.s, leader.h}; }
    [[nodiscard]] NoiseModel noise(std::size_t agent) const;
    // Sets every process and measurement half-width to level.
    void set_noise_level(double level);

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Shapes and ranges; throws Error(Config) naming the field.
void validate_config(const ExperimentConfig& cfg);

struct AssumptionCheck {
    std::string name;
    bool ok = false;
    std::string detail;
};

// Graph (spanning tree rooted at the leader) and leader (observable, simple
// unit poles). The data rank condition is checked after collection.
std::vector<AssumptionCheck> check_model_assumptions(const ExperimentConfig& cfg);

} // namespace polysync
