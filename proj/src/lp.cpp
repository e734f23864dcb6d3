#include "polysync/lp.hpp"

#include <cmath>
#include <limits>

namespace polysync::lp {

namespace {

constexpr double kPivotTol = 1e-11;

class Tableau {
public:
    Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_(m + 1, n + 1), basis_(m) {}

    double& at(std::size_t i, std::size_t j) { return t_(i, j); }
    double rhs(std::size_t i) const { return t_(i, n_); }
    double& cost(std::size_t j) { return t_(m_, j); }
    std::size_t& basis(std::size_t i) { return basis_[i]; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

    void pivot(std::size_t r, std::size_t c) {
        const double p = t_(r, c);
        for (std::size_t j = 0; j <= n_; ++j) t_(r, j) /= p;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double f = t_(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) t_(i, j) -= f * t_(r, j);
        }
        basis_[r] = c;
    }

    // Runs simplex iterations over columns [0, active). Returns Optimal, Unbounded or IterationLimit.
    Status run(std::size_t active, int cap, int& used) {
        while (used < cap) {
            std::size_t enter = active;
            for (std::size_t j = 0; j < active; ++j)
                if (t_(m_, j) < -kPivotTol) {
                    enter = j;
                    break;
                }
            if (enter == active) return Status::Optimal;
            std::size_t leave = m_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = t_(i, enter);
                if (a <= kPivotTol) continue;
                const double ratio = t_(i, n_) / a;
                if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && leave < m_ && basis_[i] < basis_[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m_) return Status::Unbounded;
            pivot(leave, enter);
            ++used;
        }
        return Status::IterationLimit;
    }

private:
    std::size_t m_, n_;
    Mat t_;
    std::vector<std::size_t> basis_;
};

} // namespace

Result minimize(const Mat& a, const Vec& b, const Vec& c, int iteration_cap) {
    const std::size_t m = a.rows(), n = a.cols();
    if (b.size() != m || c.size() != n) fail(ErrorKind::Shape, "lp::minimize: inconsistent problem dimensions");

    // Phase I: artificial variables n..n+m-1 on every row, rows flipped so b >= 0.
    Tableau tab(m, n + m);
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * a(i, j);
        tab.at(i, n + i) = 1.0;
        tab.at(i, n + m) = sign * b[i];
        tab.basis(i) = n + i;
    }
    for (std::size_t j = 0; j <= n + m; ++j) {
        if (j >= n && j < n + m) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += tab.at(i, j);
        tab.at(m, j) = -s;
    }

    int used = 0;
    Status st = tab.run(n + m, iteration_cap, used);
    if (st == Status::IterationLimit) return Result{Status::IterationLimit, {}, 0.0};

    double bscale = 1.0;
    for (double v : b) bscale = std::max(bscale, std::abs(v));
    if (-tab.at(m, n + m) > 1e-9 * bscale) return Result{Status::Infeasible, {}, 0.0};

    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
        if (tab.basis(i) < n) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(tab.at(i, j)) > kPivotTol) {
                tab.pivot(i, j);
                break;
            }
    }

    // Phase II objective. Artificial columns stay in the tableau but are never entered.
    for (std::size_t j = 0; j <= n + m; ++j) tab.at(m, j) = j < n ? c[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bj = tab.basis(i);
        const double cb = bj < n ? c[bj] : 0.0;
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= n + m; ++j) tab.at(m, j) -= cb * tab.at(i, j);
    }

    st = tab.run(n, iteration_cap, used);
    if (st != Status::Optimal) return Result{st, {}, 0.0};

    Result r{Status::Optimal, Vec(n, 0.0), 0.0};
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis(i) < n) r.x[tab.basis(i)] = tab.rhs(i);
    for (std::size_t j = 0; j < n; ++j) r.objective += c[j] * r.x[j];
    return r;
}

} // namespace polysync::lp
