#include "polysync/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <random>

#include <omp.h>

namespace polysync {

namespace {

// Exceptions cannot leave an OpenMP region; collect them per item and rethrow
// the one with the smallest index so failures are reported deterministically.
template <class Fn>
void for_each_agent(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string follower(std::size_t i) { return "follower " + std::to_string(i + 1); }

Vec data_initial_state(const AgentConfig& a) {
    return a.data_x0.empty() ? Vec(a.a.rows(), 0.5) : a.data_x0;
}

AgentDataset collect_agent(const ExperimentConfig& cfg, std::size_t i) {
    const AgentConfig& a = cfg.agents[i];
    CollectOptions opts;
    opts.restart_bound = cfg.data.restart_bound;
    return collect(a.truth(), cfg.noise(i), cfg.data.rho, box_polytope(a.input_box), data_initial_state(a),
                   agent_data_seed(cfg, i), opts);
}

void require_done(const PipelineResult& r, Stage s) {
    const auto idx = static_cast<int>(s);
    const int done = r.completed ? static_cast<int>(*r.completed) : -1;
    require(done >= idx - 1, ErrorKind::Precondition,
            std::string("stage ") + stage_name(s) + " needs the previous stages to have run");
}

void stage_collect(PipelineResult& r) {
    const ExperimentConfig& cfg = r.config;
    r.assumptions = check_model_assumptions(cfg);
    for (const AssumptionCheck& a : r.assumptions)
        require(a.ok, ErrorKind::Precondition, "assumption failed (" + a.name + "): " + a.detail);

    r.agents.assign(cfg.agents.size(), {});
    for_each_agent(cfg.agents.size(), [&](std::size_t i) {
        AgentResult& ar = r.agents[i];
        ar.noise = cfg.noise(i);
        ar.data = collect_agent(cfg, i);
        ar.rank_ok = rank_ok(ar.data);
    });
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const AgentConfig& a = cfg.agents[i];
        const std::size_t need = a.a.rows() + a.b.cols();
        const bool ok = r.agents[i].rank_ok;
        r.assumptions.push_back({"data rank " + a.name, ok,
                                 ok ? "[U; X] has full row rank " + std::to_string(need)
                                    : "[U; X] is not full row rank " + std::to_string(need) + " with rho = " +
                                          std::to_string(cfg.data.rho) + "; collect more samples"});
    }
    for (const AssumptionCheck& a : r.assumptions)
        require(a.ok, ErrorKind::Precondition, "assumption failed (" + a.name + "): " + a.detail);
}

void stage_identify(PipelineResult& r) {
    for_each_agent(r.agents.size(), [&](std::size_t i) {
        AgentResult& ar = r.agents[i];
        ar.cs = build_consistency_set(ar.data, ar.noise, r.config.synthesis.noise_mode);
        if (ar.data.w && ar.data.v) ar.reconstruction = reconstruction_error(*ar.cs, r.config.agents[i].truth(), ar.data);
    });
}

void stage_regulate(PipelineResult& r) {
    const Mat& s = r.config.leader.s;
    const Mat& h = r.config.leader.h;
    for_each_agent(r.agents.size(), [&](std::size_t i) {
        AgentResult& ar = r.agents[i];
        ar.fit = solve_fit(*ar.cs, s, h);
        try {
            ar.oracle = exact_regulator(r.config.agents[i].truth(), s, h);
        } catch (const Error&) {
            ar.oracle.reset();
        }
    });
}

void stage_synthesize(PipelineResult& r) {
    const ExperimentConfig& cfg = r.config;
    SynthesisOptions opts;
    opts.margin = cfg.synthesis.margin;
    opts.mode = cfg.synthesis.noise_mode;
    opts.solver.iteration_cap = cfg.synthesis.iteration_cap;
    for_each_agent(r.agents.size(), [&](std::size_t i) {
        try {
            r.agents[i].synthesis = synthesize_k(r.agents[i].data, r.agents[i].noise, opts);
        } catch (const Error& e) {
            throw Error(e.kind(), follower(i) + ": " + e.what());
        }
    });
    const Topology t = cfg.topology();
    r.observer = cfg.synthesis.f ? check_f(t, cfg.leader.s, *cfg.synthesis.f, cfg.synthesis.observer_margin)
                                 : design_f(t, cfg.leader.s, cfg.synthesis.observer_margin);
    std::vector<MatrixPolytope> loops;
    for (const AgentResult& ar : r.agents) loops.push_back(closed_loop_polytope(*ar.cs, ar.synthesis->k));
    r.composite_stable = verify_composite_stability(t, cfg.leader.s, r.observer->f, loops);
    require(r.composite_stable, ErrorKind::SynthesisFailure, "the composite closed loop is not Schur stable at every vertex");
}

void stage_simulate(PipelineResult& r) {
    const ExperimentConfig& cfg = r.config;
    const SimulationConfig& sc = cfg.simulation;
    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> u(-sc.init_range, sc.init_range);
    auto draw = [&](std::size_t n) {
        Vec v(n);
        for (double& x : v) x = u(rng);
        return v;
    };
    SimSetup st;
    st.leader = cfg.leader_model();
    st.f = r.observer->f;
    st.topology = cfg.topology();
    st.x0_leader = cfg.leader.x0.empty() ? draw(cfg.leader.s.rows()) : cfg.leader.x0;
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const AgentResult& ar = r.agents[i];
        st.systems.push_back(cfg.agents[i].truth());
        st.controllers.push_back({ar.synthesis->k, ar.fit->pi, ar.fit->gamma});
        st.x0_agents.push_back(draw(cfg.agents[i].a.rows()));
        st.eta0.push_back(draw(cfg.leader.s.rows()));
    }
    r.setup = st;
    r.sim = run_closed_loop(st, sc.horizon);
}

void stage_bound(PipelineResult& r) {
    const ExperimentConfig& cfg = r.config;
    const SimSetup& st = *r.setup;
    const SimResult& sim = *r.sim;
    const Vec deg = in_degrees(st.topology);
    const VPolytope px0 = leader_state_polytope(st.leader, st.x0_leader);
    const std::size_t horizon = cfg.simulation.horizon;
    auto scale = [&](std::size_t i) { return 1.0 / (1.0 + deg[i] + st.topology.pinning[i]); };

    for_each_agent(r.agents.size(), [&](std::size_t i) {
        AgentResult& ar = r.agents[i];
        ExactReachInputs in;
        in.sets = exact_sets(ar.data, ar.noise, ar.synthesis->k, cfg.leader.s, cfg.leader.h, ar.fit->pi, ar.fit->gamma);
        in.pi = ar.fit->pi;
        in.f = st.f;
        in.coupling_scale = scale(i);
        in.px0 = px0;
        in.xi0 = sim.agents[i].xi[0];
        in.delta = sim.agents[i].delta;
        in.z = sim.agents[i].z;
        in.horizon = horizon;
        in.max_generators = cfg.simulation.max_generators;
        ar.bound = compute_exact_bounds(in);
    });

    const std::size_t b = r.bound_agent();
    const AgentResult& ar = r.agents[b];
    ReachInputs in;
    in.closed_loop = closed_loop_polytope(*ar.cs, ar.synthesis->k);
    in.c_poly = ar.cs->c_poly;
    in.delta1 = ar.fit->delta1_poly;
    in.delta2 = ar.fit->delta2_poly;
    in.pi = ar.fit->pi;
    in.f = st.f;
    in.coupling_scale = scale(b);
    in.lyapunov_p = ar.synthesis->lyapunov_p;
    in.px0 = px0;
    in.xi0 = sim.agents[b].xi[0];
    in.delta = sim.agents[b].delta;
    in.z = sim.agents[b].z;
    in.horizon = horizon;
    r.vertex_bound = compute_bounds(in);
}

} // namespace

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::Collect: return "collect";
    case Stage::Identify: return "identify";
    case Stage::Regulate: return "regulate";
    case Stage::Synthesize: return "synthesize";
    case Stage::Simulate: return "simulate";
    case Stage::Bound: return "bound";
    }
    return "unknown";
}

std::optional<Stage> parse_stage(const std::string& name) {
    for (Stage s : kStages)
        if (name == stage_name(s)) return s;
    return std::nullopt;
}

std::size_t PipelineResult::bound_agent() const {
    const std::size_t b = config.simulation.bound_agent;
    return b == 0 ? config.agents.size() - 1 : b - 1;
}

std::uint64_t agent_data_seed(const ExperimentConfig& cfg, std::size_t agent) { return cfg.data.seed * 100 + agent; }

void run_stage(PipelineResult& r, Stage s) {
    require_done(r, s);
    switch (s) {
    case Stage::Collect: stage_collect(r); break;
    case Stage::Identify: stage_identify(r); break;
    case Stage::Regulate: stage_regulate(r); break;
    case Stage::Synthesize: stage_synthesize(r); break;
    case Stage::Simulate: stage_simulate(r); break;
    case Stage::Bound: stage_bound(r); break;
    }
    r.completed = s;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, Stage last) {
    validate_config(cfg);
    PipelineResult r;
    r.config = cfg;
    for (Stage s : kStages) {
        run_stage(r, s);
        if (s == last) break;
    }
    return r;
}

TrackingSummary tracking_summary(const PipelineResult& r) {
    TrackingSummary out;
    require(r.sim.has_value(), ErrorKind::Precondition, "tracking summary needs a simulation");
    const SimResult& sim = *r.sim;
    out.tail_from = std::min(r.config.simulation.tail_from, sim.horizon);
    out.tail_max = max_tracking_error(sim, out.tail_from);
    out.final_max = max_tracking_error(sim, sim.horizon);
    return out;
}

std::optional<std::size_t> first_violation(std::span<const Vec> e, std::span<const double> r) {
    require(e.size() <= r.size(), ErrorKind::Shape, "first_violation: bound series shorter than the trajectory");
    for (std::size_t t = 0; t < e.size(); ++t)
        if (norm_inf(e[t]) > r[t]) return t;
    return std::nullopt;
}

double median(Vec v) {
    require(!v.empty(), ErrorKind::InvalidInput, "median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<SweepRow> noise_sweep(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const std::size_t n = cfg.agents.size();
    std::vector<RegulatorSolution> oracles;
    for (const AgentConfig& a : cfg.agents) oracles.push_back(exact_regulator(a.truth(), cfg.leader.s, cfg.leader.h));

    std::vector<SweepRow> rows;
    for (double level : cfg.sweep.levels) {
        SweepRow row;
        row.level = level;
        row.phi1.assign(cfg.sweep.seeds, 0.0);
        row.phi2.assign(cfg.sweep.seeds, 0.0);
        ExperimentConfig c = cfg;
        c.set_noise_level(level);
        // Items are (seed, agent) pairs so the parallel loop stays busy.
        std::vector<RegulatorFit> fits(cfg.sweep.seeds * n);
        for_each_agent(fits.size(), [&](std::size_t item) {
            ExperimentConfig local = c;
            local.data.seed = item / n + 1;
            const std::size_t i = item % n;
            const AgentDataset d = collect_agent(local, i);
            require(rank_ok(d), ErrorKind::Precondition, follower(i) + ": data rank condition failed in the sweep");
            fits[item] = solve_fit(build_consistency_set(d, local.noise(i), cfg.synthesis.noise_mode), cfg.leader.s,
                                   cfg.leader.h);
        });
        for (std::size_t k = 0; k < cfg.sweep.seeds; ++k) {
            const std::span<const RegulatorFit> seed_fits(fits.data() + k * n, n);
            std::tie(row.phi1[k], row.phi2[k]) = phi_metrics(seed_fits, oracles);
        }
        row.phi1_median = median(row.phi1);
        row.phi2_median = median(row.phi2);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace polysync
