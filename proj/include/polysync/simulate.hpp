#pragma once

// Lock-step closed-loop simulation of the leader, the distributed observers
// and the followers under the data-driven protocol.

#include <optional>
#include <utility>
#include <vector>

#include "polysync/datagen.hpp"
#include "polysync/graphnet.hpp"
#include "polysync/regulator.hpp"

namespace polysync {

struct LeaderModel {
    Mat s; // n0 x n0
    Mat h; // q x n0

    // Observability of (S, H) and simple eigenvalues of S on the unit circle.
    void validate() const;
};

struct AgentController {
    Mat k;
    Mat pi;
    Mat gamma;
};

// Receives every read an agent makes while updating its observer. source 0 is
// the leader, source j + 1 is follower j.
class AccessAudit {
public:
    virtual ~AccessAudit() = default;
    virtual void on_read(std::size_t reader, std::size_t source) = 0;
};

struct AgentTrace {
    std::vector<Vec> x;     // T + 1
    std::vector<Vec> eta;   // T + 1
    std::vector<Vec> delta; // eta - x0, T + 1
    std::vector<Vec> xi;    // x - Pi eta, T + 1
    std::vector<Vec> y;     // T + 1
    std::vector<Vec> e;     // y - y0, T + 1
    std::vector<Vec> z;     // local disagreement, T
    std::vector<Vec> u;     // T
};

struct SimResult {
    std::size_t horizon = 0;
    std::vector<Vec> x0; // T + 1
    std::vector<Vec> y0; // T + 1
    std::vector<AgentTrace> agents;
};

struct SimSetup {
    LeaderModel leader;
    std::vector<TrueSystem> systems;
    std::vector<AgentController> controllers;
    Mat f;
    Topology topology;
    Vec x0_leader;
    std::vector<Vec> x0_agents;
    std::vector<Vec> eta0;
};

SimResult run_closed_loop(const SimSetup& setup, std::size_t horizon, AccessAudit* audit = nullptr);

// ||delta_i(t)||_2 per agent.
std::vector<Vec> observer_error_series(const SimResult& r);

// Least-squares slope of log(v) against t over the leading entries that stay
// above floor * max(v).
double log_linear_slope(std::span<const double> v, double floor = 1e-12);

// phi1 = max_i ||Pi_i^s - Pi_i*||_2, phi2 the same for Gamma.
std::pair<double, double> phi_metrics(std::span<const RegulatorFit> fits, std::span<const RegulatorSolution> oracles);

// max_i |e_i(t)|_inf for t >= from.
double max_tracking_error(const SimResult& r, std::size_t from);

} // namespace polysync
