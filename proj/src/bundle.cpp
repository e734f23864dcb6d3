#include "polysync/bundle.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "polysync/kernels.hpp"

namespace polysync {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "polysync-bundle/1";
constexpr double kEqTol = 1e-8;

const char* const kArtifacts[] = {"config.yaml", "fits.json",  "gains.json",  "trajectory.csv",
                                  "bounds.csv",  "sweep.csv",  "report.json", "manifest.json"};

// JSON has no infinities; non-finite values travel as strings.
json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

json to_json(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

json to_json(const Mat& m) {
    json a = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) a.push_back(to_json(m.row_vec(r)));
    return a;
}

double read_num(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (!s.empty() && *end == '\0') return v;
    }
    fail(ErrorKind::Integrity, what + ": expected a number");
}

Mat read_mat(const json& j, const std::string& what) {
    require(j.is_array(), ErrorKind::Integrity, what + ": expected a matrix");
    if (j.empty()) return Mat();
    const std::size_t cols = j[0].size();
    Mat m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        require(j[r].is_array() && j[r].size() == cols, ErrorKind::Integrity, what + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = read_num(j[r][c], what);
    }
    return m;
}

const json& field(const json& j, const std::string& key, const std::string& what) {
    require(j.is_object() && j.contains(key), ErrorKind::Integrity, what + ": missing '" + key + "'");
    return j.at(key);
}

std::string dataset_path(std::size_t i) { return "datasets/follower" + std::to_string(i + 1) + ".json"; }

// Plain comma-separated table with a header row.
class Csv {
public:
    void header(std::vector<std::string> cols) { cols_ = std::move(cols); }
    void row(const Vec& v) { rows_.push_back(v); }
    [[nodiscard]] std::string str() const {
        std::string out;
        for (std::size_t c = 0; c < cols_.size(); ++c) out += (c ? "," : "") + cols_[c];
        out += "\n";
        for (const Vec& r : rows_) {
            for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + format_double(r[c]);
            out += "\n";
        }
        return out;
    }

private:
    std::vector<std::string> cols_;
    std::vector<Vec> rows_;
};

struct Table {
    std::map<std::string, Vec> columns;

    const Vec& col(const std::string& name, const std::string& file) const {
        const auto it = columns.find(name);
        require(it != columns.end(), ErrorKind::Integrity, file + ": missing column " + name);
        return it->second;
    }
};

Table parse_csv(const std::string& text, const std::string& file) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Integrity, file + ": empty");
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    Table t;
    for (const auto& n : names) t.columns[n];
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            require(c < names.size(), ErrorKind::Integrity, file + ":" + std::to_string(line_no) + ": too many cells");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            require(!cell.empty() && *end == '\0', ErrorKind::Integrity,
                    file + ":" + std::to_string(line_no) + ": not a number '" + cell + "'");
            t.columns[names[c++]].push_back(v);
        }
        require(c == names.size(), ErrorKind::Integrity, file + ":" + std::to_string(line_no) + ": too few cells");
    }
    return t;
}

std::string output_name(const std::string& base, std::size_t k, std::size_t q) {
    return q == 1 ? base : base + "_" + std::to_string(k + 1);
}

std::string trajectory_csv(const PipelineResult& r) {
    const SimResult& sim = *r.sim;
    const std::size_t q = r.config.leader.h.rows();
    const std::size_t n = sim.agents.size();
    std::vector<std::string> cols{"t"};
    for (std::size_t k = 0; k < q; ++k) cols.push_back(output_name("y0", k, q));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < q; ++k) cols.push_back(output_name("y" + std::to_string(i + 1), k, q));
    for (std::size_t i = 0; i < n; ++i) cols.push_back("e" + std::to_string(i + 1));
    for (std::size_t i = 0; i < n; ++i) cols.push_back("delta" + std::to_string(i + 1));
    Csv csv;
    csv.header(cols);
    for (std::size_t t = 0; t <= sim.horizon; ++t) {
        Vec row{static_cast<double>(t)};
        row.insert(row.end(), sim.y0[t].begin(), sim.y0[t].end());
        for (const AgentTrace& a : sim.agents) row.insert(row.end(), a.y[t].begin(), a.y[t].end());
        for (const AgentTrace& a : sim.agents) row.push_back(norm_inf(a.e[t]));
        for (const AgentTrace& a : sim.agents) row.push_back(norm2(a.delta[t]));
        csv.row(row);
    }
    return csv.str();
}

std::string bounds_csv(const PipelineResult& r) {
    const std::size_t n = r.agents.size();
    const std::size_t b = r.bound_agent();
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 0; i < n; ++i) cols.push_back("r" + std::to_string(i + 1));
    cols.push_back("r" + std::to_string(b + 1) + "_vertex");
    Csv csv;
    csv.header(cols);
    for (std::size_t t = 0; t <= r.config.simulation.horizon; ++t) {
        Vec row{static_cast<double>(t)};
        for (const AgentResult& a : r.agents) row.push_back(a.bound->r[t]);
        row.push_back(r.vertex_bound->r[t]);
        csv.row(row);
    }
    return csv.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    Csv csv;
    csv.header({"level", "seeds", "phi1_median", "phi2_median", "phi1_min", "phi1_max", "phi2_min", "phi2_max"});
    for (const SweepRow& s : rows) {
        const auto [p1lo, p1hi] = std::minmax_element(s.phi1.begin(), s.phi1.end());
        const auto [p2lo, p2hi] = std::minmax_element(s.phi2.begin(), s.phi2.end());
        csv.row({s.level, static_cast<double>(s.phi1.size()), s.phi1_median, s.phi2_median, *p1lo, *p1hi, *p2lo, *p2hi});
    }
    return csv.str();
}

json dataset_json(const AgentResult& a, const std::string& name) {
    return {{"name", name},        {"rho", a.data.rho},     {"seed", a.data.seed},      {"restarts", a.data.restarts},
            {"rank_ok", a.rank_ok}, {"X", to_json(a.data.x)}, {"X_plus", to_json(a.data.x_plus)},
            {"U", to_json(a.data.u)}, {"Y", to_json(a.data.y)}};
}

json fits_json(const PipelineResult& r) {
    json arr = json::array();
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const RegulatorFit& f = *r.agents[i].fit;
        arr.push_back({{"name", r.config.agents[i].name}, {"Pi", to_json(f.pi)}, {"Gamma", to_json(f.gamma)},
                       {"bound1", num(f.bound1)}, {"bound2", num(f.bound2)}, {"objective", num(f.objective)},
                       {"degenerate", f.degenerate}});
    }
    return {{"followers", arr}};
}

json gains_json(const PipelineResult& r) {
    json arr = json::array();
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const SynthesisResult& s = *r.agents[i].synthesis;
        arr.push_back({{"name", r.config.agents[i].name},
                       {"K", to_json(s.k)},
                       {"M", to_json(s.m_decision)},
                       {"P", to_json(s.lyapunov_p)},
                       {"vertex_radii", to_json(s.vertex_radii)},
                       {"worst_vertex_radius", num(s.worst_vertex_radius)},
                       {"lyapunov_decrease", num(s.lyapunov_decrease)},
                       {"lmi_margin", num(s.margin)}});
    }
    const ObserverDesign& od = *r.observer;
    json obs{{"F", to_json(od.f)}, {"composite_radius", num(od.composite_radius)}};
    obs["alpha"] = od.alpha ? num(*od.alpha) : json(nullptr);
    return {{"followers", arr}, {"observer", obs}, {"composite_stable", r.composite_stable}};
}

json violation_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const PipelineResult& r, const std::vector<SweepRow>& sweep, const std::optional<StageFailure>& failure) {
    json rep;
    rep["completed_stage"] = r.completed ? json(stage_name(*r.completed)) : json(nullptr);
    rep["failed_stage"] = failure ? json{{"stage", stage_name(failure->stage)}, {"error", failure->message}} : json(nullptr);
    json as = json::array();
    for (const AssumptionCheck& a : r.assumptions) as.push_back({{"name", a.name}, {"ok", a.ok}, {"detail", a.detail}});
    rep["assumptions"] = as;

    json fol = json::array();
    for (std::size_t i = 0; i < r.agents.size(); ++i) {
        const AgentResult& a = r.agents[i];
        json f{{"name", r.config.agents[i].name}, {"rank_ok", a.rank_ok}, {"restarts", a.data.restarts}};
        if (a.reconstruction) f["reconstruction"] = {{"z", num(a.reconstruction->z)}, {"c", num(a.reconstruction->c)}};
        if (a.fit) {
            json g{{"bound1", num(a.fit->bound1)}, {"bound2", num(a.fit->bound2)}, {"objective", num(a.fit->objective)}};
            if (a.oracle) {
                g["pi_error"] = num(norm_two(a.fit->pi - a.oracle->pi));
                g["gamma_error"] = num(norm_two(a.fit->gamma - a.oracle->gamma));
            }
            f["regulator"] = g;
        }
        if (a.synthesis)
            f["synthesis"] = {{"vertices", a.synthesis->vertex_radii.size()},
                              {"worst_vertex_radius", num(a.synthesis->worst_vertex_radius)},
                              {"lyapunov_decrease", num(a.synthesis->lyapunov_decrease)},
                              {"lmi_margin", num(a.synthesis->margin)}};
        if (a.bound && r.sim) {
            const auto v = first_violation(r.sim->agents[i].e, a.bound->r);
            f["bound"] = {{"containment", !v.has_value()},
                          {"first_violation", violation_json(v)},
                          {"r_final", num(a.bound->r.back())},
                          {"asymptotic", num(a.bound->asymptotic)}};
        }
        fol.push_back(f);
    }
    rep["followers"] = fol;

    if (r.observer)
        rep["observer"] = {{"composite_radius", num(r.observer->composite_radius)},
                           {"alpha", r.observer->alpha ? num(*r.observer->alpha) : json(nullptr)},
                           {"composite_stable", r.composite_stable}};
    if (r.sim) {
        const TrackingSummary ts = tracking_summary(r);
        const std::vector<Vec> delta = observer_error_series(*r.sim);
        Vec total(r.sim->horizon + 1, 0.0);
        for (const Vec& d : delta)
            for (std::size_t t = 0; t < total.size(); ++t) total[t] = std::hypot(total[t], d[t]);
        rep["tracking"] = {{"tail_from", ts.tail_from}, {"tail_max", num(ts.tail_max)}, {"final_max", num(ts.final_max)},
                           {"observer_error_slope", num(log_linear_slope(total))}};
    }
    if (r.vertex_bound && r.sim) {
        const std::size_t b = r.bound_agent();
        const BoundSeries& vb = *r.vertex_bound;
        const auto v = first_violation(r.sim->agents[b].e, vb.r);
        rep["vertex_bound"] = {{"follower", b + 1},
                               {"containment", !v.has_value()},
                               {"first_violation", violation_json(v)},
                               {"over_approximated", vb.xi.over_approximated},
                               {"beta", num(vb.asymptotic.beta)},
                               {"mu", num(vb.asymptotic.mu)},
                               {"vertex_radius", num(vb.asymptotic.vertex_radius)},
                               {"asymptotic", num(vb.asymptotic.value)}};
    }
    if (!sweep.empty()) {
        json sw = json::array();
        for (const SweepRow& s : sweep)
            sw.push_back({{"level", s.level}, {"seeds", s.phi1.size()}, {"phi1_median", num(s.phi1_median)},
                          {"phi2_median", num(s.phi2_median)}});
        rep["sweep"] = sw;
    }
    return rep;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), ErrorKind::Integrity, "missing bundle file " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    require(out.good(), ErrorKind::InvalidInput, "cannot write " + p.string());
    out << bytes;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Integrity, what + ": " + e.what());
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_bundle(const PipelineResult& r, const std::string& dir, const std::vector<SweepRow>& sweep,
                  const std::optional<StageFailure>& failure) {
    const fs::path root(dir);
    fs::create_directories(root);
    for (const char* name : kArtifacts) fs::remove(root / name);
    fs::remove_all(root / "datasets");

    std::map<std::string, std::string> files;
    files["config.yaml"] = dump_config(r.config);
    for (std::size_t i = 0; i < r.agents.size(); ++i)
        if (r.agents[i].data.rho > 0)
            files[dataset_path(i)] = dataset_json(r.agents[i], r.config.agents[i].name).dump(1) + "\n";
    const bool fitted = !r.agents.empty() && r.agents.front().fit && r.agents.back().fit;
    if (fitted) files["fits.json"] = fits_json(r).dump(1) + "\n";
    if (r.observer) files["gains.json"] = gains_json(r).dump(1) + "\n";
    if (r.sim) files["trajectory.csv"] = trajectory_csv(r);
    if (r.vertex_bound) files["bounds.csv"] = bounds_csv(r);
    if (!sweep.empty()) files["sweep.csv"] = sweep_csv(sweep);
    files["report.json"] = report_json(r, sweep, failure).dump(1) + "\n";

    json manifest{{"format", kFormat}, {"completed_stage", r.completed ? json(stage_name(*r.completed)) : json(nullptr)},
                  {"followers", r.config.agents.size()}};
    json entries = json::object();
    for (const auto& [name, bytes] : files) {
        write_file(root / name, bytes);
        entries[name] = {{"bytes", bytes.size()}, {"fnv1a64", fnv1a_hex(bytes)}};
    }
    manifest["files"] = entries;
    write_file(root / "manifest.json", manifest.dump(1) + "\n");
}

bool VerifyReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

VerifyReport verify_bundle(const std::string& dir) {
    const fs::path root(dir);
    VerifyReport rep;
    auto add = [&](std::string name, bool pass, std::string detail) {
        rep.checks.push_back({std::move(name), pass, std::move(detail)});
    };

    const json manifest = parse_json(read_file(root / "manifest.json"), "manifest.json");
    require(manifest.value("format", "") == kFormat, ErrorKind::Integrity, "manifest.json: unknown bundle format");
    const json& files = field(manifest, "files", "manifest.json");
    std::map<std::string, std::string> content;
    std::string tampered;
    for (const auto& [name, meta] : files.items()) {
        content[name] = read_file(root / name);
        if (fnv1a_hex(content[name]) != meta.value("fnv1a64", "")) tampered += (tampered.empty() ? "" : ", ") + name;
    }
    add("integrity", tampered.empty(), tampered.empty() ? std::to_string(files.size()) + " files match the manifest"
                                                        : "modified since written: " + tampered);
    auto has = [&](const std::string& name) { return content.contains(name); };
    auto get = [&](const std::string& name) -> const std::string& {
        require(has(name), ErrorKind::Integrity, "bundle has no " + name);
        return content.at(name);
    };

    ExperimentConfig cfg;
    try {
        cfg = parse_config(get("config.yaml"), "config.yaml");
        validate_config(cfg);
    } catch (const Error& e) {
        fail(ErrorKind::Integrity, e.what());
    }
    const std::size_t n = cfg.agents.size();

    std::vector<AgentDataset> data(n);
    std::vector<ConsistencySet> cs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string path = dataset_path(i);
        const json j = parse_json(get(path), path);
        AgentDataset& d = data[i];
        d.x = read_mat(field(j, "X", path), path);
        d.x_plus = read_mat(field(j, "X_plus", path), path);
        d.u = read_mat(field(j, "U", path), path);
        d.y = read_mat(field(j, "Y", path), path);
        d.rho = d.x.cols();
        try {
            d.validate();
        } catch (const Error& e) {
            fail(ErrorKind::Integrity, path + ": " + e.what());
        }
        const bool rank = rank_ok(d);
        add("data rank " + cfg.agents[i].name, rank, rank ? "[U; X] full row rank" : "[U; X] rank deficient");
        if (rank) cs[i] = build_consistency_set(d, cfg.noise(i), cfg.synthesis.noise_mode);
    }
    auto usable = [&](std::size_t i) { return cs[i].rho > 0; };

    if (has("fits.json")) {
        const json fits = parse_json(get("fits.json"), "fits.json");
        const json& arr = field(fits, "followers", "fits.json");
        require(arr.size() == n, ErrorKind::Integrity, "fits.json: wrong number of followers");
        for (std::size_t i = 0; i < n && usable(i); ++i) {
            const Mat pi = read_mat(field(arr[i], "Pi", "fits.json"), "fits.json Pi");
            const Mat gamma = read_mat(field(arr[i], "Gamma", "fits.json"), "fits.json Gamma");
            const double stored = read_num(field(arr[i], "objective", "fits.json"), "fits.json objective");
            const double again = fit_objective(cs[i], cfg.leader.s, cfg.leader.h, pi, gamma);
            const bool pass = std::abs(again - stored) <= 1e-9 * (1.0 + std::abs(stored));
            add("regulator " + cfg.agents[i].name, pass, "objective " + fmt(again) + " (stored " + fmt(stored) + ")");
        }
    }

    std::vector<Mat> gains(n);
    if (has("gains.json")) {
        const json g = parse_json(get("gains.json"), "gains.json");
        const json& arr = field(g, "followers", "gains.json");
        require(arr.size() == n, ErrorKind::Integrity, "gains.json: wrong number of followers");
        std::vector<MatrixPolytope> loops;
        for (std::size_t i = 0; i < n && usable(i); ++i) {
            const std::string& name = cfg.agents[i].name;
            const Mat k = read_mat(field(arr[i], "K", "gains.json"), "gains.json K");
            const Mat m = read_mat(field(arr[i], "M", "gains.json"), "gains.json M");
            const Mat p = read_mat(field(arr[i], "P", "gains.json"), "gains.json P");
            require(k.rows() == data[i].u.rows() && k.cols() == data[i].x.rows(), ErrorKind::Integrity,
                    "gains.json: K of " + name + " has the wrong shape");
            require(m.rows() == data[i].rho && m.cols() == data[i].x.rows(), ErrorKind::Integrity,
                    "gains.json: M of " + name + " has the wrong shape");
            gains[i] = k;

            const sdp::Check chk = sdp::check_solution(gain_lmi(data[i], cs[i]), m.values());
            add("lmi " + name, chk.margin > 0.0 && chk.eq_residual <= kEqTol,
                "margin " + fmt(chk.margin) + ", equality residual " + fmt(chk.eq_residual));

            const Mat xm = data[i].x * m;
            const Mat k_from_m = data[i].u * m * inverse(xm);
            const double gap = max_abs(k_from_m - k);
            add("gain " + name, gap <= 1e-7 * (1.0 + max_abs(k)), "|K - U M (X M)^-1| = " + fmt(gap));

            const MatrixPolytope loop = closed_loop_polytope(cs[i], k);
            const Vec radii = kernels::spectral_radii_omp(loop.vertices());
            const double worst = *std::max_element(radii.begin(), radii.end());
            add("schur " + name, worst < 1.0,
                "max spectral radius " + fmt(worst) + " over " + std::to_string(radii.size()) + " vertices");

            bool lyap_ok = p.rows() == k.cols() && p.is_square();
            double dec = 0.0;
            if (lyap_ok) {
                dec = lyapunov_decrease(loop, p);
                lyap_ok = dec < 0.0 && min_sym_eig(symmetrize(p)) > 0.0;
            }
            add("lyapunov " + name, lyap_ok, "max eig of Q' P Q - P: " + fmt(dec));
            loops.push_back(loop);
        }
        const json& obs = field(g, "observer", "gains.json");
        const Mat f = read_mat(field(obs, "F", "gains.json observer"), "gains.json F");
        const Topology t = cfg.topology();
        require(f.rows() == cfg.leader.s.rows() && f.is_square(), ErrorKind::Integrity, "gains.json: F has the wrong shape");
        const double rad = spectral_radius(observer_composite(t, cfg.leader.s, f));
        add("observer", rad < 1.0, "composite spectral radius " + fmt(rad));
        if (loops.size() == n) {
            const bool stable = verify_composite_stability(t, cfg.leader.s, f, loops);
            add("composite closed loop", stable, stable ? "Schur at every vertex" : "not Schur at some vertex");
        }
    }

    if (has("trajectory.csv") && has("bounds.csv")) {
        const Table traj = parse_csv(get("trajectory.csv"), "trajectory.csv");
        const Table bnd = parse_csv(get("bounds.csv"), "bounds.csv");
        for (std::size_t i = 0; i < n; ++i) {
            const std::string id = std::to_string(i + 1);
            const Vec& e = traj.col("e" + id, "trajectory.csv");
            const Vec& r = bnd.col("r" + id, "bounds.csv");
            require(r.size() >= e.size(), ErrorKind::Integrity, "bounds.csv: fewer rows than trajectory.csv");
            std::optional<std::size_t> bad;
            for (std::size_t t = 0; t < e.size() && !bad; ++t)
                if (e[t] > r[t]) bad = t;
            add("containment " + cfg.agents[i].name, !bad,
                bad ? "|e| = " + fmt(e[*bad]) + " exceeds r = " + fmt(r[*bad]) + " at t = " + std::to_string(*bad)
                    : "|e(t)| <= r(t) for all " + std::to_string(e.size()) + " steps");
        }
    }
    return rep;
}

} // namespace polysync
