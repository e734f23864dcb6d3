// polysync: data-driven output synchronization from the command line.
//
//   polysync collect     --config C --out DIR
//   polysync synthesize  --config C --out DIR --noise-level 0.01
//   polysync repro-paper --config configs/paper_example.yaml --out DIR
//   polysync verify      DIR
//
// Exit codes: 0 ok, 2 assumption violated, 3 synthesis failed,
// 4 verification failed, 1 anything else.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "polysync/bundle.hpp"
#include "polysync/pipeline.hpp"

using namespace polysync;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::Precondition: return 2;
    case ErrorKind::SynthesisFailure:
    case ErrorKind::ObserverDesignFailure:
    case ErrorKind::NoSolution: return 3;
    case ErrorKind::Verification:
    case ErrorKind::Integrity:
    case ErrorKind::CertificateMismatch: return 4;
    default: return 1;
    }
}

struct Overrides {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> noise_level;
    std::optional<std::size_t> horizon;
    std::optional<double> margin;
};

ExperimentConfig load(const Overrides& o) {
    ExperimentConfig cfg = load_config(o.config);
    if (o.seed) cfg.data.seed = cfg.simulation.seed = *o.seed;
    if (o.noise_level) cfg.set_noise_level(*o.noise_level);
    if (o.horizon) {
        cfg.simulation.horizon = *o.horizon;
        cfg.simulation.tail_from = std::min(cfg.simulation.tail_from, *o.horizon);
    }
    if (o.margin) cfg.synthesis.margin = *o.margin;
    validate_config(cfg);
    return cfg;
}

void print_collect(const PipelineResult& r) {
    std::printf("%-12s %3s %3s %5s %9s %s\n", "follower", "n", "p", "rho", "restarts", "rank");
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const AgentResult& a = r.agents[i];
        std::printf("%-12s %3zu %3zu %5zu %9zu %s\n", r.config.agents[i].name.c_str(), a.data.x.rows(), a.data.u.rows(),
                    a.data.rho, a.data.restarts, a.rank_ok ? "ok" : "FAIL");
    }
}

void print_stage(const PipelineResult& r, Stage s) {
    switch (s) {
    case Stage::Collect: print_collect(r); break;
    case Stage::Identify:
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            const AgentResult& a = r.agents[i];
            std::printf("%-12s %zu vertices of [B A]", r.config.agents[i].name.c_str(), a.cs->z_poly.size());
            if (a.reconstruction) std::printf(", reconstruction error %.2e", std::max(a.reconstruction->z, a.reconstruction->c));
            std::printf("\n");
        }
        break;
    case Stage::Regulate:
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            const AgentResult& a = r.agents[i];
            std::printf("%-12s bound1 %.3e  bound2 %.3e", r.config.agents[i].name.c_str(), a.fit->bound1, a.fit->bound2);
            if (a.oracle)
                std::printf("  |Pi - Pi*| %.2e  |Gamma - Gamma*| %.2e", norm_two(a.fit->pi - a.oracle->pi),
                            norm_two(a.fit->gamma - a.oracle->gamma));
            std::printf("\n");
        }
        break;
    case Stage::Synthesize:
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            const SynthesisResult& s = *r.agents[i].synthesis;
            std::printf("%-12s worst vertex radius %.4f over %zu vertices, lyapunov decrease %.3e\n",
                        r.config.agents[i].name.c_str(), s.worst_vertex_radius, s.vertex_radii.size(), s.lyapunov_decrease);
        }
        std::printf("observer: composite radius %.3e%s\n", r.observer->composite_radius,
                    r.composite_stable ? ", composite closed loop Schur at every vertex" : "");
        break;
    case Stage::Simulate: {
        const TrackingSummary ts = tracking_summary(r);
        std::printf("max |e_i(t)| for t >= %zu: %.3e, at T: %.3e\n", ts.tail_from, ts.tail_max, ts.final_max);
        break;
    }
    case Stage::Bound:
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            const ExactBoundSeries& b = *r.agents[i].bound;
            const auto v = first_violation(r.sim->agents[i].e, b.r);
            std::printf("%-12s r(T) %.3e  asymptotic %.3e  containment %s\n", r.config.agents[i].name.c_str(),
                        b.r.back(), b.asymptotic, v ? ("FAIL at t=" + std::to_string(*v)).c_str() : "ok");
        }
        if (r.vertex_bound)
            std::printf("vertex recursion (follower %zu): r(T) %.3e  asymptotic %.3e\n", r.bound_agent() + 1,
                        r.vertex_bound->r.back(), r.vertex_bound->asymptotic.value);
        break;
    }
}

void print_sweep(const std::vector<SweepRow>& rows) {
    std::printf("%-8s %6s %12s %12s\n", "level", "seeds", "phi1 median", "phi2 median");
    for (const SweepRow& s : rows)
        std::printf("%-8g %6zu %12.4e %12.4e\n", s.level, s.phi1.size(), s.phi1_median, s.phi2_median);
}

// Runs the stages up to last, writing the bundle after every stage so a
// failure leaves the completed artifacts behind with a stage marker.
int run(const Overrides& o, Stage last, bool sweep) {
    const ExperimentConfig cfg = load(o);
    PipelineResult r;
    r.config = cfg;
    for (Stage s : kStages) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            run_stage(r, s);
        } catch (const Error& e) {
            write_bundle(r, o.out, {}, StageFailure{s, e.what()});
            if (s == Stage::Collect && !r.agents.empty()) print_collect(r);
            std::fprintf(stderr, "error in stage %s: %s\n", stage_name(s), e.what());
            return exit_code(e.kind());
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("== %s (%.2fs)\n", stage_name(s), dt);
        print_stage(r, s);
        if (s == last) break;
    }
    write_bundle(r, o.out);
    if (sweep && !cfg.sweep.levels.empty()) {
        std::printf("== noise sweep (%zu seeds per level)\n", cfg.sweep.seeds);
        std::fflush(stdout);
        const std::vector<SweepRow> rows = noise_sweep(cfg);
        print_sweep(rows);
        write_bundle(r, o.out, rows);
    }
    std::printf("bundle written to %s\n", o.out.c_str());
    return 0;
}

int verify(const std::string& dir) {
    const VerifyReport rep = verify_bundle(dir);
    for (const VerifyCheck& c : rep.checks)
        std::printf("%-4s %-28s %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.detail.c_str());
    std::printf("%s\n", rep.ok() ? "all checks passed" : "verification failed");
    return rep.ok() ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed output synchronization controllers from noisy data"};
    app.require_subcommand(1);
    Overrides o;

    struct Command {
        const char* name;
        const char* help;
        Stage last;
        bool sweep;
    };
    const Command commands[] = {
        {"collect", "Run the data experiments and check the rank condition", Stage::Collect, false},
        {"identify", "Build the data-consistent system sets", Stage::Identify, false},
        {"regulate", "Fit the regulator equations over the consistency set", Stage::Regulate, false},
        {"synthesize", "Synthesize feedback gains K and the observer gain F", Stage::Synthesize, false},
        {"simulate", "Simulate the closed loop with the synthesized protocol", Stage::Simulate, false},
        {"bound", "Compute tracking error bounds along the simulation", Stage::Bound, false},
        {"repro-paper", "Full pipeline plus the noise sweep of the regulator fit", Stage::Bound, true},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", o.config, "YAML experiment configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Output bundle directory")->capture_default_str();
        sub->add_option("--seed", o.seed, "Seed for the data experiments and the initial states");
        sub->add_option("--noise-level", o.noise_level, "Set every noise half-width to this value")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--horizon", o.horizon, "Simulation horizon")->check(CLI::PositiveNumber);
        sub->add_option("--margin", o.margin, "Required Schur margin of the synthesized gains")->check(CLI::Range(0.0, 1.0));
        subs.emplace_back(sub, &c);
    }
    std::string bundle;
    CLI::App* ver = app.add_subcommand("verify", "Re-check a bundle without re-solving");
    ver->add_option("bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);
    try {
        if (ver->parsed()) return verify(bundle);
        for (const auto& [sub, cmd] : subs)
            if (sub->parsed()) return run(o, cmd->last, cmd->sweep);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
