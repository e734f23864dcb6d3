#include <cmath>
#include <set>
#include <tuple>

#include "doctest.h"
#include "example_systems.hpp"
#include "polysync/simulate.hpp"
#include "polysync/synthesis.hpp"
#include "test_util.hpp"

using namespace polysync;

namespace {

LeaderModel example_leader() { return {testing::leader_s(), testing::leader_h()}; }

// Exact regulators and deadbeat gains on the chain, with the given starts.
SimSetup exact_setup(const Vec& x0, double state_offset, double eta_offset, const Mat& f) {
    SimSetup st;
    st.leader = example_leader();
    st.systems = testing::example_followers();
    st.f = f;
    st.topology = chain_topology(6);
    st.x0_leader = x0;
    const auto regs = testing::example_regulators();
    const auto gains = testing::deadbeat_gains();
    for (std::size_t i = 0; i < 6; ++i) {
        st.controllers.push_back({gains[i], regs[i].pi, regs[i].gamma});
        Vec x = regs[i].pi * x0;
        for (double& v : x) v += state_offset * static_cast<double>(i + 1);
        st.x0_agents.push_back(x);
        st.eta0.push_back({x0[0] + eta_offset, x0[1] - eta_offset * static_cast<double>(i)});
    }
    return st;
}

Mat designed_f() { return design_f(chain_topology(6), testing::leader_s()).f; }

class RecordingAudit : public AccessAudit {
public:
    void on_read(std::size_t reader, std::size_t source) override { reads.insert({reader, source}); }
    std::set<std::pair<std::size_t, std::size_t>> reads;
};

} // namespace

TEST_CASE("leader model validation") {
    CHECK_NOTHROW(example_leader().validate());
    CHECK_THROWS_AS((LeaderModel{Mat{{0.5, 0}, {0, 1}}, Mat{{1, 1}}}.validate()), Error);
    CHECK_THROWS_AS((LeaderModel{testing::leader_s(), Mat{{0, 0}}}.validate()), Error);
}

TEST_CASE("zero initial error stays on the regulator manifold") {
    const SimResult r = run_closed_loop(exact_setup({0.3, -0.7}, 0.0, 0.0, designed_f()), 100);
    for (const AgentTrace& a : r.agents)
        for (const Vec& e : a.e) CHECK(norm_inf(e) < 1e-12);
}

TEST_CASE("series lengths") {
    const SimResult r = run_closed_loop(exact_setup({1, 0}, 0.1, 0.2, designed_f()), 17);
    CHECK(r.x0.size() == 18);
    CHECK(r.y0.size() == 18);
    for (const AgentTrace& a : r.agents) {
        CHECK(a.x.size() == 18);
        CHECK(a.e.size() == 18);
        CHECK(a.xi.size() == 18);
        CHECK(a.u.size() == 17);
        CHECK(a.z.size() == 17);
    }
}

TEST_CASE("exact regulators and Schur gains drive the error to zero") {
    const SimResult r = run_closed_loop(exact_setup({1, 0.5}, 0.4, 0.3, designed_f()), 60);
    CHECK(max_tracking_error(r, 0) > 0.1);
    CHECK(max_tracking_error(r, 40) < 1e-10);
}

TEST_CASE("error decomposition e = C xi + (C Pi - H) x0 + C Pi delta") {
    // Perturbed regulators so that every term is nonzero.
    SimSetup st = exact_setup({0.8, -0.2}, 0.3, 0.5, designed_f());
    for (auto& c : st.controllers) {
        c.pi(0, 0) += 0.05;
        c.gamma(0, 1) -= 0.03;
    }
    const SimResult r = run_closed_loop(st, 50);
    const Mat h = testing::leader_h();
    for (std::size_t i = 0; i < 6; ++i) {
        const Mat& c = st.systems[i].c;
        const Mat& pi = st.controllers[i].pi;
        for (std::size_t t = 0; t <= 50; ++t) {
            const AgentTrace& a = r.agents[i];
            const Vec rhs = add(add(c * a.xi[t], (c * pi - h) * r.x0[t]), c * (pi * a.delta[t]));
            CHECK(norm_inf(sub(rhs, a.e[t])) < 1e-10);
        }
    }
}

TEST_CASE("observer started at the leader state has zero error") {
    const SimResult r = run_closed_loop(exact_setup({0.6, 0.1}, 0.2, 0.0, designed_f()), 40);
    for (const AgentTrace& a : r.agents)
        for (const Vec& d : a.delta) CHECK(norm_inf(d) == 0.0);
}

TEST_CASE("F = 0 keeps the observer error norm constant") {
    const SimResult r = run_closed_loop(exact_setup({0.6, 0.1}, 0.0, 0.25, Mat(2, 2)), 80);
    for (const Vec& series : observer_error_series(r))
        for (double v : series) CHECK(v == doctest::Approx(series[0]).epsilon(1e-12));
}

TEST_CASE("designed F gives a decaying observer error") {
    const SimResult r = run_closed_loop(exact_setup({0.6, 0.1}, 0.0, 0.25, designed_f()), 80);
    Vec worst(81, 0.0);
    for (const Vec& series : observer_error_series(r))
        for (std::size_t t = 0; t < series.size(); ++t) worst[t] = std::max(worst[t], series[t]);
    CHECK(log_linear_slope(worst) < 0.0);
}

TEST_CASE("log-linear slope of a geometric sequence") {
    Vec v;
    for (int t = 0; t < 30; ++t) v.push_back(3.0 * std::pow(0.5, t));
    CHECK(log_linear_slope(v) == doctest::Approx(std::log(0.5)).epsilon(1e-10));
    CHECK(log_linear_slope(Vec(10, 2.0)) == doctest::Approx(0.0));
}

TEST_CASE("observer reads only neighbours and, when pinned, the leader") {
    const Topology t = topology_from_edges(4, std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 1.0}, {3, 4, 0.5}, {2, 4, 1.0}});
    SimSetup st;
    st.leader = example_leader();
    const Mat s = testing::leader_s();
    st.f = design_f(t, s).f;
    st.topology = t;
    st.x0_leader = {1.0, 0.0};
    for (std::size_t i = 0; i < 4; ++i) {
        st.systems.push_back(testing::example_followers()[1]);
        st.controllers.push_back({testing::deadbeat_gains()[1], testing::example_regulators()[1].pi,
                                  testing::example_regulators()[1].gamma});
        st.x0_agents.push_back({0.0, 0.0});
        st.eta0.push_back({0.1 * static_cast<double>(i), 0.0});
    }
    RecordingAudit audit;
    run_closed_loop(st, 5, &audit);
    for (const auto& [reader, source] : audit.reads) {
        if (source == 0)
            CHECK(t.pinning[reader] > 0.0);
        else
            CHECK(t.adjacency(reader, source - 1) > 0.0);
    }
    CHECK(audit.reads.count({0, 0}) == 1);
    CHECK(audit.reads.count({3, 2}) == 1);
    CHECK(audit.reads.count({3, 3}) == 1);
    CHECK(audit.reads.count({2, 0}) == 1);
}

TEST_CASE("simulation is deterministic") {
    const SimSetup st = exact_setup({0.9, -0.4}, 0.2, 0.3, designed_f());
    const SimResult a = run_closed_loop(st, 100);
    const SimResult b = run_closed_loop(st, 100);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(a.agents[i].x == b.agents[i].x);
        CHECK(a.agents[i].eta == b.agents[i].eta);
    }
}

TEST_CASE("unstable loop reports divergence") {
    SimSetup st = exact_setup({1, 0}, 0.5, 0.0, designed_f());
    st.controllers[0].k = Mat{{0.0}};
    CHECK_THROWS_AS(run_closed_loop(st, 2000), Error);
    try {
        run_closed_loop(st, 2000);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("shape errors are rejected") {
    SimSetup st = exact_setup({1, 0}, 0.0, 0.0, designed_f());
    st.eta0.pop_back();
    CHECK_THROWS_AS(run_closed_loop(st, 5), Error);
}

TEST_CASE("phi metrics") {
    const auto regs = testing::example_regulators();
    std::vector<RegulatorFit> fits;
    std::vector<RegulatorSolution> oracles;
    for (const auto& r : regs) {
        RegulatorFit f;
        f.pi = r.pi;
        f.gamma = r.gamma;
        fits.push_back(f);
        oracles.push_back({r.pi, r.gamma});
    }
    auto [p1, p2] = phi_metrics(fits, oracles);
    CHECK(p1 == 0.0);
    CHECK(p2 == 0.0);
    fits[3].pi(0, 0) += 0.01;
    fits[5].gamma(0, 1) -= 0.02;
    std::tie(p1, p2) = phi_metrics(fits, oracles);
    CHECK(p1 == doctest::Approx(0.01));
    CHECK(p2 == doctest::Approx(0.02));
    oracles.pop_back();
    CHECK_THROWS_AS(phi_metrics(fits, oracles), Error);
}
