#include "polysync/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace polysync {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

Topology ExperimentConfig::topology() const { return topology_from_edges(agents.size(), edges); }

NoiseModel ExperimentConfig::noise(std::size_t agent) const {
    const AgentConfig& a = agents.at(agent);
    return box_noise(a.a.rows(), a.c.rows(), a.w_bar, a.v_bar);
}

void ExperimentConfig::set_noise_level(double level) {
    require(level >= 0.0 && std::isfinite(level), ErrorKind::Config, "noise level must be finite and nonnegative");
    for (AgentConfig& a : agents) a.w_bar = a.v_bar = level;
}

namespace {

// Section checks shared by the parser (which knows node positions) and
// validate_config (which only knows field paths). Empty string = fine.

std::string shape(const Mat& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

std::string leader_problem(const LeaderConfig& l) {
    if (l.s.empty() || !l.s.is_square()) return "S must be a nonempty square matrix, got " + shape(l.s);
    if (l.h.empty() || l.h.cols() != l.s.rows())
        return "H must have " + std::to_string(l.s.rows()) + " columns, got " + shape(l.h);
    if (!l.x0.empty() && l.x0.size() != l.s.rows())
        return "x0 must have " + std::to_string(l.s.rows()) + " entries, got " + std::to_string(l.x0.size());
    return {};
}

std::string agent_problem(const AgentConfig& a, std::size_t q) {
    if (a.a.empty() || !a.a.is_square()) return "A must be a nonempty square matrix, got " + shape(a.a);
    const std::size_t n = a.a.rows();
    if (a.b.rows() != n || a.b.cols() == 0) return "B must have " + std::to_string(n) + " rows, got " + shape(a.b);
    if (a.c.cols() != n) return "C must have " + std::to_string(n) + " columns, got " + shape(a.c);
    if (a.c.rows() != q)
        return "C must have " + std::to_string(q) + " rows (the leader output dimension), got " + shape(a.c);
    if (!(a.w_bar >= 0.0) || !(a.v_bar >= 0.0) || !std::isfinite(a.w_bar) || !std::isfinite(a.v_bar))
        return "noise half-widths must be finite and nonnegative";
    if (a.input_box.size() != a.b.cols())
        return "input_box must have " + std::to_string(a.b.cols()) + " entries, got " + std::to_string(a.input_box.size());
    for (double h : a.input_box)
        if (!(h > 0.0)) return "input_box half-widths must be positive";
    if (!a.data_x0.empty() && a.data_x0.size() != n)
        return "data_x0 must have " + std::to_string(n) + " entries, got " + std::to_string(a.data_x0.size());
    return {};
}

std::string edge_problem(const Edge& e, std::size_t n_followers) {
    if (e.to == 0) return "edges cannot point into the leader (node 0)";
    if (e.from > n_followers || e.to > n_followers)
        return "edge endpoint out of range 0.." + std::to_string(n_followers);
    if (e.from == e.to) return "self loops are not allowed";
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) return "edge weight must be positive";
    return {};
}

std::string data_problem(const DataConfig& d) {
    if (d.rho == 0) return "rho must be positive";
    if (!(d.restart_bound >= 0.0)) return "restart_bound must be nonnegative";
    return {};
}

std::string synthesis_problem(const SynthesisConfig& s, std::size_t n0) {
    if (!(s.margin >= 0.0 && s.margin < 1.0)) return "margin must lie in [0, 1)";
    if (!(s.observer_margin >= 0.0 && s.observer_margin < 1.0)) return "observer_margin must lie in [0, 1)";
    if (s.iteration_cap <= 0) return "iteration_cap must be positive";
    if (s.f && (s.f->rows() != n0 || s.f->cols() != n0))
        return "F must be " + std::to_string(n0) + "x" + std::to_string(n0) + ", got " + shape(*s.f);
    return {};
}

std::string simulation_problem(const SimulationConfig& s, std::size_t n_followers) {
    if (s.horizon == 0) return "horizon must be positive";
    if (!(s.init_range >= 0.0)) return "init_range must be nonnegative";
    if (s.bound_agent > n_followers) return "bound_agent must be 0 (last) or 1.." + std::to_string(n_followers);
    if (s.max_generators == 0) return "max_generators must be positive";
    return {};
}

std::string sweep_problem(const SweepConfig& s) {
    for (double l : s.levels)
        if (!(l >= 0.0) || !std::isfinite(l)) return "sweep levels must be finite and nonnegative";
    if (!s.levels.empty() && s.seeds == 0) return "sweep seeds must be positive";
    return {};
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void error(const YAML::Node& n, const std::string& msg) const {
        std::string where = source_;
        const YAML::Mark m = n.Mark();
        if (!m.is_null()) where += ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
        fail(ErrorKind::Config, where + ": " + msg);
    }

    void check(const YAML::Node& n, const std::string& problem) const {
        if (!problem.empty()) error(n, problem);
    }

    void expect_map(const YAML::Node& n, const std::string& what, const std::set<std::string>& keys) const {
        if (!n.IsMap()) error(n, what + " must be a mapping");
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (!keys.contains(key)) error(kv.first, "unknown key '" + key + "' in " + what);
        }
    }

    YAML::Node required(const YAML::Node& map, const std::string& key, const std::string& what) const {
        const YAML::Node n = map[key];
        if (!n) error(map, what + " is missing required key '" + key + "'");
        return n;
    }

    double number(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) error(n, what + " must be a number");
        const std::string& s = n.Scalar();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') error(n, what + " must be a number, got '" + s + "'");
        return v;
    }

    std::uint64_t count(const YAML::Node& n, const std::string& what) const {
        const double v = number(n, what);
        if (v < 0 || v != std::floor(v) || v > 9.0e15) error(n, what + " must be a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }

    Vec vec(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) error(n, what + " must be a list of numbers");
        Vec v;
        for (const auto& e : n) v.push_back(number(e, what));
        return v;
    }

    Mat mat(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence() || n.size() == 0) error(n, what + " must be a nonempty list of rows");
        std::vector<double> data;
        std::size_t cols = 0;
        for (std::size_t r = 0; r < n.size(); ++r) {
            const Vec row = vec(n[r], what + " row " + std::to_string(r + 1));
            if (r == 0) cols = row.size();
            if (row.size() != cols || cols == 0)
                error(n[r], what + " row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                                " entries, expected " + std::to_string(cols));
            data.insert(data.end(), row.begin(), row.end());
        }
        return Mat(n.size(), cols, std::move(data));
    }

    template <class T, class F>
    void optional(const YAML::Node& map, const std::string& key, T& out, F&& read) const {
        if (const YAML::Node n = map[key]) out = read(n);
    }

private:
    std::string source_;
};

LeaderConfig read_leader(const Reader& rd, const YAML::Node& n) {
    rd.expect_map(n, "leader", {"S", "H", "x0"});
    LeaderConfig l;
    l.s = rd.mat(rd.required(n, "S", "leader"), "leader.S");
    l.h = rd.mat(rd.required(n, "H", "leader"), "leader.H");
    rd.optional(n, "x0", l.x0, [&](const YAML::Node& v) { return rd.vec(v, "leader.x0"); });
    rd.check(n, leader_problem(l));
    return l;
}

AgentConfig read_agent(const Reader& rd, const YAML::Node& n, std::size_t index, std::size_t q) {
    const std::string what = "agents[" + std::to_string(index + 1) + "]";
    rd.expect_map(n, what, {"name", "A", "B", "C", "noise", "input_box", "data_x0"});
    AgentConfig a;
    a.name = n["name"] ? n["name"].as<std::string>() : "follower" + std::to_string(index + 1);
    a.a = rd.mat(rd.required(n, "A", what), what + ".A");
    a.b = rd.mat(rd.required(n, "B", what), what + ".B");
    a.c = rd.mat(rd.required(n, "C", what), what + ".C");
    if (const YAML::Node noise = n["noise"]) {
        rd.expect_map(noise, what + ".noise", {"w", "v"});
        rd.optional(noise, "w", a.w_bar, [&](const YAML::Node& v) { return rd.number(v, what + ".noise.w"); });
        rd.optional(noise, "v", a.v_bar, [&](const YAML::Node& v) { return rd.number(v, what + ".noise.v"); });
    }
    a.input_box = Vec(a.b.cols(), 1.0);
    rd.optional(n, "input_box", a.input_box, [&](const YAML::Node& v) { return rd.vec(v, what + ".input_box"); });
    rd.optional(n, "data_x0", a.data_x0, [&](const YAML::Node& v) { return rd.vec(v, what + ".data_x0"); });
    rd.check(n, agent_problem(a, q));
    return a;
}

NoiseMode read_mode(const Reader& rd, const YAML::Node& n) {
    const std::string s = n.IsScalar() ? n.Scalar() : "";
    if (s == "verbatim") return NoiseMode::Verbatim;
    if (s == "scaled") return NoiseMode::Scaled;
    rd.error(n, "noise_mode must be 'verbatim' or 'scaled'");
}

const char* mode_name(NoiseMode m) { return m == NoiseMode::Scaled ? "scaled" : "verbatim"; }

ExperimentConfig read_config(const Reader& rd, const YAML::Node& root) {
    rd.expect_map(root, "configuration", {"leader", "agents", "topology", "data", "synthesis", "simulation", "sweep"});
    ExperimentConfig cfg;
    cfg.leader = read_leader(rd, rd.required(root, "leader", "configuration"));

    const YAML::Node agents = rd.required(root, "agents", "configuration");
    if (!agents.IsSequence() || agents.size() == 0) rd.error(agents, "agents must be a nonempty list");
    for (std::size_t i = 0; i < agents.size(); ++i)
        cfg.agents.push_back(read_agent(rd, agents[i], i, cfg.leader.h.rows()));

    const YAML::Node topo = rd.required(root, "topology", "configuration");
    rd.expect_map(topo, "topology", {"edges"});
    const YAML::Node edges = rd.required(topo, "edges", "topology");
    if (!edges.IsSequence()) rd.error(edges, "topology.edges must be a list of [from, to, weight]");
    for (const auto& e : edges) {
        const Vec v = rd.vec(e, "edge");
        if (v.size() != 2 && v.size() != 3) rd.error(e, "an edge is [from, to] or [from, to, weight]");
        for (std::size_t k = 0; k < 2; ++k)
            if (v[k] < 0 || v[k] != std::floor(v[k])) rd.error(e, "edge endpoints must be nonnegative integers");
        const Edge edge{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), v.size() == 3 ? v[2] : 1.0};
        rd.check(e, edge_problem(edge, cfg.agents.size()));
        cfg.edges.push_back(edge);
    }

    if (const YAML::Node d = root["data"]) {
        rd.expect_map(d, "data", {"rho", "seed", "restart_bound"});
        rd.optional(d, "rho", cfg.data.rho, [&](const YAML::Node& v) { return rd.count(v, "data.rho"); });
        rd.optional(d, "seed", cfg.data.seed, [&](const YAML::Node& v) { return rd.count(v, "data.seed"); });
        rd.optional(d, "restart_bound", cfg.data.restart_bound,
                    [&](const YAML::Node& v) { return rd.number(v, "data.restart_bound"); });
        rd.check(d, data_problem(cfg.data));
    }
    if (const YAML::Node s = root["synthesis"]) {
        rd.expect_map(s, "synthesis", {"margin", "observer_margin", "noise_mode", "iteration_cap", "F"});
        SynthesisConfig& sc = cfg.synthesis;
        rd.optional(s, "margin", sc.margin, [&](const YAML::Node& v) { return rd.number(v, "synthesis.margin"); });
        rd.optional(s, "observer_margin", sc.observer_margin,
                    [&](const YAML::Node& v) { return rd.number(v, "synthesis.observer_margin"); });
        rd.optional(s, "noise_mode", sc.noise_mode, [&](const YAML::Node& v) { return read_mode(rd, v); });
        rd.optional(s, "iteration_cap", sc.iteration_cap,
                    [&](const YAML::Node& v) { return static_cast<int>(rd.count(v, "synthesis.iteration_cap")); });
        if (const YAML::Node f = s["F"]) sc.f = rd.mat(f, "synthesis.F");
        rd.check(s, synthesis_problem(sc, cfg.leader.s.rows()));
    }
    if (const YAML::Node s = root["simulation"]) {
        rd.expect_map(s, "simulation", {"horizon", "seed", "init_range", "bound_agent", "max_generators", "tail_from"});
        SimulationConfig& sc = cfg.simulation;
        rd.optional(s, "horizon", sc.horizon, [&](const YAML::Node& v) { return rd.count(v, "simulation.horizon"); });
        rd.optional(s, "seed", sc.seed, [&](const YAML::Node& v) { return rd.count(v, "simulation.seed"); });
        rd.optional(s, "init_range", sc.init_range,
                    [&](const YAML::Node& v) { return rd.number(v, "simulation.init_range"); });
        rd.optional(s, "bound_agent", sc.bound_agent,
                    [&](const YAML::Node& v) { return rd.count(v, "simulation.bound_agent"); });
        rd.optional(s, "max_generators", sc.max_generators,
                    [&](const YAML::Node& v) { return rd.count(v, "simulation.max_generators"); });
        rd.optional(s, "tail_from", sc.tail_from, [&](const YAML::Node& v) { return rd.count(v, "simulation.tail_from"); });
        rd.check(s, simulation_problem(sc, cfg.agents.size()));
    }
    if (const YAML::Node s = root["sweep"]) {
        rd.expect_map(s, "sweep", {"levels", "seeds"});
        rd.optional(s, "levels", cfg.sweep.levels, [&](const YAML::Node& v) { return rd.vec(v, "sweep.levels"); });
        rd.optional(s, "seeds", cfg.sweep.seeds, [&](const YAML::Node& v) { return rd.count(v, "sweep.seeds"); });
        rd.check(s, sweep_problem(cfg.sweep));
    }
    return cfg;
}

void emit_number(YAML::Emitter& out, double v) { out << format_double(v); }

void emit_vec(YAML::Emitter& out, std::span<const double> v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) emit_number(out, x);
    out << YAML::EndSeq;
}

void emit_mat(YAML::Emitter& out, const Mat& m) {
    out << YAML::Flow << YAML::BeginSeq;
    for (std::size_t r = 0; r < m.rows(); ++r) emit_vec(out, m.row_vec(r));
    out << YAML::EndSeq;
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(ErrorKind::Config, source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                                    ": " + e.msg);
    }
    return read_config(Reader(source), root);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Config, "cannot read configuration file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string dump_config(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "leader" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "S" << YAML::Value;
    emit_mat(out, cfg.leader.s);
    out << YAML::Key << "H" << YAML::Value;
    emit_mat(out, cfg.leader.h);
    if (!cfg.leader.x0.empty()) {
        out << YAML::Key << "x0" << YAML::Value;
        emit_vec(out, cfg.leader.x0);
    }
    out << YAML::EndMap;

    out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
    for (const AgentConfig& a : cfg.agents) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << a.name;
        out << YAML::Key << "A" << YAML::Value;
        emit_mat(out, a.a);
        out << YAML::Key << "B" << YAML::Value;
        emit_mat(out, a.b);
        out << YAML::Key << "C" << YAML::Value;
        emit_mat(out, a.c);
        out << YAML::Key << "noise" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "w" << YAML::Value;
        emit_number(out, a.w_bar);
        out << YAML::Key << "v" << YAML::Value;
        emit_number(out, a.v_bar);
        out << YAML::EndMap;
        out << YAML::Key << "input_box" << YAML::Value;
        emit_vec(out, a.input_box);
        if (!a.data_x0.empty()) {
            out << YAML::Key << "data_x0" << YAML::Value;
            emit_vec(out, a.data_x0);
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap << YAML::Key << "edges" << YAML::Value
        << YAML::BeginSeq;
    for (const Edge& e : cfg.edges) {
        out << YAML::Flow << YAML::BeginSeq << e.from << e.to;
        emit_number(out, e.weight);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rho" << YAML::Value << cfg.data.rho;
    out << YAML::Key << "seed" << YAML::Value << cfg.data.seed;
    out << YAML::Key << "restart_bound" << YAML::Value;
    emit_number(out, cfg.data.restart_bound);
    out << YAML::EndMap;

    const SynthesisConfig& sc = cfg.synthesis;
    out << YAML::Key << "synthesis" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "margin" << YAML::Value;
    emit_number(out, sc.margin);
    out << YAML::Key << "observer_margin" << YAML::Value;
    emit_number(out, sc.observer_margin);
    out << YAML::Key << "noise_mode" << YAML::Value << mode_name(sc.noise_mode);
    out << YAML::Key << "iteration_cap" << YAML::Value << sc.iteration_cap;
    if (sc.f) {
        out << YAML::Key << "F" << YAML::Value;
        emit_mat(out, *sc.f);
    }
    out << YAML::EndMap;

    const SimulationConfig& sim = cfg.simulation;
    out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << sim.horizon;
    out << YAML::Key << "seed" << YAML::Value << sim.seed;
    out << YAML::Key << "init_range" << YAML::Value;
    emit_number(out, sim.init_range);
    out << YAML::Key << "bound_agent" << YAML::Value << sim.bound_agent;
    out << YAML::Key << "max_generators" << YAML::Value << sim.max_generators;
    out << YAML::Key << "tail_from" << YAML::Value << sim.tail_from;
    out << YAML::EndMap;

    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "levels" << YAML::Value;
    emit_vec(out, cfg.sweep.levels);
    out << YAML::Key << "seeds" << YAML::Value << cfg.sweep.seeds;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::Config, "cannot write " + path);
    out << dump_config(cfg);
}

void validate_config(const ExperimentConfig& cfg) {
    auto check = [](const std::string& where, const std::string& problem) {
        if (!problem.empty()) fail(ErrorKind::Config, where + ": " + problem);
    };
    check("leader", leader_problem(cfg.leader));
    require(!cfg.agents.empty(), ErrorKind::Config, "agents: at least one follower is required");
    for (std::size_t i = 0; i < cfg.agents.size(); ++i)
        check("agents[" + std::to_string(i + 1) + "]", agent_problem(cfg.agents[i], cfg.leader.h.rows()));
    for (const Edge& e : cfg.edges) check("topology.edges", edge_problem(e, cfg.agents.size()));
    check("data", data_problem(cfg.data));
    check("synthesis", synthesis_problem(cfg.synthesis, cfg.leader.s.rows()));
    check("simulation", simulation_problem(cfg.simulation, cfg.agents.size()));
    check("sweep", sweep_problem(cfg.sweep));
}

std::vector<AssumptionCheck> check_model_assumptions(const ExperimentConfig& cfg) {
    std::vector<AssumptionCheck> out;
    const Topology t = cfg.topology();
    const bool tree = has_spanning_tree(t);
    out.push_back({"graph", tree, tree ? "spanning tree rooted at the leader" : "some follower is not reachable from the leader"});
    try {
        cfg.leader_model().validate();
        out.push_back({"leader", true, "(S, H) observable, simple eigenvalues on the unit circle"});
    } catch (const Error& e) {
        out.push_back({"leader", false, e.what()});
    }
    return out;
}

} // namespace polysync
