#pragma once

// The end-to-end protocol as a sequence of stages over one configuration:
// collect -> identify -> regulate -> synthesize -> simulate -> bound.
// Stages run in order; work inside a stage is per follower and runs in parallel.

#include <optional>
#include <string>
#include <vector>

#include "polysync/config.hpp"
#include "polysync/reach.hpp"
#include "polysync/regulator.hpp"
#include "polysync/represent.hpp"
#include "polysync/simulate.hpp"
#include "polysync/synthesis.hpp"

namespace polysync {

enum class Stage { Collect, Identify, Regulate, Synthesize, Simulate, Bound };

constexpr Stage kStages[] = {Stage::Collect, Stage::Identify, Stage::Regulate,
                             Stage::Synthesize, Stage::Simulate, Stage::Bound};

const char* stage_name(Stage s);
std::optional<Stage> parse_stage(const std::string& name);

struct AgentResult {
    AgentDataset data;
    NoiseModel noise;
    bool rank_ok = false;
    std::optional<ConsistencySet> cs;
    std::optional<ReconstructionError> reconstruction;
    std::optional<RegulatorFit> fit;
    std::optional<RegulatorSolution> oracle; // from the true matrices, for reporting
    std::optional<SynthesisResult> synthesis;
    std::optional<ExactBoundSeries> bound;
};

struct PipelineResult {
    ExperimentConfig config;
    std::vector<AssumptionCheck> assumptions;
    std::vector<AgentResult> agents;
    std::optional<ObserverDesign> observer;
    bool composite_stable = false;
    std::optional<SimSetup> setup;
    std::optional<SimResult> sim;
    std::optional<BoundSeries> vertex_bound; // vertex recursion for bound_agent()
    std::optional<Stage> completed;

    [[nodiscard]] std::size_t bound_agent() const; // 0-based
};

// Seeds of the data experiment of each follower.
std::uint64_t agent_data_seed(const ExperimentConfig& cfg, std::size_t agent);

// Runs one stage; every earlier stage must have completed. On failure the
// result keeps whatever the stage produced before throwing.
void run_stage(PipelineResult& r, Stage s);

// Validates the configuration and runs stages up to and including last.
PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage last = Stage::Bound);

// Steady-state and final tracking error over all followers.
struct TrackingSummary {
    double tail_max = 0.0;  // max_i |e_i(t)|_inf for t >= tail_from
    double final_max = 0.0; // max_i |e_i(T)|_inf
    std::size_t tail_from = 0;
};
TrackingSummary tracking_summary(const PipelineResult& r);

// First time step with |e_i(t)|_inf > r_i(t), if any.
std::optional<std::size_t> first_violation(std::span<const Vec> e, std::span<const double> r);

// Regulator fit quality over seeds at several noise levels.
struct SweepRow {
    double level = 0.0;
    Vec phi1; // per seed
    Vec phi2;
    double phi1_median = 0.0;
    double phi2_median = 0.0;
};

// For each level and seeds 1..cfg.sweep.seeds: collect, identify and fit every
// follower, then compare with the exact regulator solutions.
std::vector<SweepRow> noise_sweep(const ExperimentConfig& cfg);

double median(Vec v);

} // namespace polysync
