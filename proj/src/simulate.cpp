#include "polysync/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polysync {

namespace {

bool simple_unit_poles(const Mat& s, double tol) {
    const Spectrum sp = eigenvalues(s);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        if (std::abs(std::abs(sp.eigenvalues[i]) - 1.0) > tol) return false;
        for (std::size_t j = i + 1; j < sp.size(); ++j)
            if (std::abs(sp.eigenvalues[i] - sp.eigenvalues[j]) <= tol) return false;
    }
    return true;
}

bool finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_setup(const SimSetup& s) {
    s.leader.validate();
    s.topology.validate();
    const std::size_t n_agents = s.topology.n_followers, n0 = s.leader.s.rows();
    require(s.systems.size() == n_agents && s.controllers.size() == n_agents && s.x0_agents.size() == n_agents &&
                s.eta0.size() == n_agents,
            ErrorKind::Shape, "simulation: one system, controller and initial state per follower");
    require(s.f.rows() == n0 && s.f.cols() == n0, ErrorKind::Shape, "simulation: F must be n0 x n0");
    require(s.x0_leader.size() == n0, ErrorKind::Shape, "simulation: leader state has the wrong length");
    for (std::size_t i = 0; i < n_agents; ++i) {
        const TrueSystem& sys = s.systems[i];
        const AgentController& c = s.controllers[i];
        sys.validate();
        require(sys.q() == s.leader.h.rows(), ErrorKind::Shape, "simulation: follower output size differs from the leader");
        require(c.k.rows() == sys.p() && c.k.cols() == sys.n(), ErrorKind::Shape, "simulation: K must be p x n");
        require(c.pi.rows() == sys.n() && c.pi.cols() == n0, ErrorKind::Shape, "simulation: Pi must be n x n0");
        require(c.gamma.rows() == sys.p() && c.gamma.cols() == n0, ErrorKind::Shape, "simulation: Gamma must be p x n0");
        require(s.x0_agents[i].size() == sys.n() && s.eta0[i].size() == n0, ErrorKind::Shape,
                "simulation: initial state has the wrong length");
    }
}

// Local disagreement z_i = sum_j a_ij (eta_i - eta_j) + g_i (eta_i - x0), built
// only from what follower i is allowed to hear.
Vec disagreement(const Topology& t, std::size_t i, const std::vector<Vec>& eta, const Vec& x0, AccessAudit* audit) {
    Vec z(x0.size(), 0.0);
    for (std::size_t j = 0; j < t.n_followers; ++j) {
        const double a = t.adjacency(i, j);
        if (a == 0.0) continue;
        if (audit) audit->on_read(i, j + 1);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += a * (eta[i][k] - eta[j][k]);
    }
    if (t.pinning[i] > 0.0) {
        if (audit) audit->on_read(i, 0);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += t.pinning[i] * (eta[i][k] - x0[k]);
    }
    return z;
}

} // namespace

void LeaderModel::validate() const {
    require(s.is_square() && s.rows() >= 1, ErrorKind::Shape, "leader: S must be square");
    require(h.cols() == s.rows() && h.rows() >= 1, ErrorKind::Shape, "leader: H must have n0 columns");
    Mat obs = h;
    Mat power = h;
    for (std::size_t k = 1; k < s.rows(); ++k) {
        power = power * s;
        obs = vstack(obs, power);
    }
    require(rank(obs, 1e-9) == s.rows(), ErrorKind::Precondition, "leader: (S, H) is not observable");
    require(simple_unit_poles(s, 1e-9), ErrorKind::Precondition,
            "leader: S must have simple eigenvalues on the unit circle");
}

SimResult run_closed_loop(const SimSetup& setup, std::size_t horizon, AccessAudit* audit) {
    check_setup(setup);
    const std::size_t n_agents = setup.topology.n_followers;
    const Vec deg = in_degrees(setup.topology);
    const Mat& s = setup.leader.s;

    SimResult r;
    r.horizon = horizon;
    r.agents.resize(n_agents);
    Vec x0 = setup.x0_leader;
    std::vector<Vec> x = setup.x0_agents, eta = setup.eta0;

    auto record = [&](std::size_t t) {
        r.x0.push_back(x0);
        const Vec y0 = setup.leader.h * x0;
        r.y0.push_back(y0);
        for (std::size_t i = 0; i < n_agents; ++i) {
            const TrueSystem& sys = setup.systems[i];
            AgentTrace& tr = r.agents[i];
            tr.x.push_back(x[i]);
            tr.eta.push_back(eta[i]);
            tr.delta.push_back(sub(eta[i], x0));
            tr.xi.push_back(sub(x[i], setup.controllers[i].pi * eta[i]));
            const Vec y = sys.c * x[i];
            tr.y.push_back(y);
            tr.e.push_back(sub(y, y0));
            if (!finite(x[i]) || !finite(eta[i]))
                fail(ErrorKind::Divergence, "simulation: non-finite state of follower " + std::to_string(i + 1) +
                                                " at step " + std::to_string(t));
        }
    };

    record(0);
    std::vector<Vec> x_next(n_agents), eta_next(n_agents), z(n_agents), u(n_agents);
    for (std::size_t t = 0; t < horizon; ++t) {
        // Reads come from the previous broadcast only; writes go to the next buffers.
        for (std::size_t i = 0; i < n_agents; ++i) z[i] = disagreement(setup.topology, i, eta, x0, audit);
        const auto n = static_cast<std::ptrdiff_t>(n_agents);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const AgentController& c = setup.controllers[i];
            const TrueSystem& sys = setup.systems[i];
            const double gain = 1.0 / (1.0 + deg[i] + setup.topology.pinning[i]);
            eta_next[i] = sub(s * eta[i], scale(setup.f * z[i], gain));
            u[i] = add(c.k * sub(x[i], c.pi * eta[i]), c.gamma * eta[i]);
            x_next[i] = add(sys.a * x[i], sys.b * u[i]);
        }
        for (std::size_t i = 0; i < n_agents; ++i) {
            r.agents[i].z.push_back(z[i]);
            r.agents[i].u.push_back(u[i]);
        }
        x.swap(x_next);
        eta.swap(eta_next);
        x0 = s * x0;
        record(t + 1);
    }
    return r;
}

std::vector<Vec> observer_error_series(const SimResult& r) {
    std::vector<Vec> out;
    for (const AgentTrace& tr : r.agents) {
        Vec v;
        for (const Vec& d : tr.delta) v.push_back(norm2(d));
        out.push_back(std::move(v));
    }
    return out;
}

double log_linear_slope(std::span<const double> v, double floor) {
    double top = 0.0;
    for (double x : v) top = std::max(top, x);
    std::size_t len = 0;
    while (len < v.size() && v[len] > floor * top) ++len;
    require(len >= 2, ErrorKind::InvalidInput, "log_linear_slope: fewer than two usable points");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t t = 0; t < len; ++t) {
        const double ly = std::log(v[t]), tt = static_cast<double>(t);
        st += tt;
        sy += ly;
        stt += tt * tt;
        sty += tt * ly;
    }
    const double m = static_cast<double>(len);
    return (m * sty - st * sy) / (m * stt - st * st);
}

std::pair<double, double> phi_metrics(std::span<const RegulatorFit> fits, std::span<const RegulatorSolution> oracles) {
    require(fits.size() == oracles.size(), ErrorKind::Shape, "phi_metrics: list lengths differ");
    double phi1 = 0.0, phi2 = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        phi1 = std::max(phi1, norm_two(oracles[i].pi - fits[i].pi));
        phi2 = std::max(phi2, norm_two(oracles[i].gamma - fits[i].gamma));
    }
    return {phi1, phi2};
}

double max_tracking_error(const SimResult& r, std::size_t from) {
    double m = 0.0;
    for (const AgentTrace& tr : r.agents)
        for (std::size_t t = from; t < tr.e.size(); ++t) m = std::max(m, norm_inf(tr.e[t]));
    return m;
}

} // namespace polysync
