#include "polysync/sdpcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysync/kernels.hpp"

namespace polysync::sdp {

namespace {

constexpr std::size_t kMaxBlockSize = 64;
constexpr std::size_t kMaxDim = 512;
constexpr double kEqTol = 1e-8;
constexpr double kSymTol = 1e-12;
constexpr double kCenteringTol = 1e-8; // on lambda^2 / 2

// The problem after equality elimination and rescaling: variables x = (s, t),
// y = y0 + N s, and every block carries -I on t.
struct Reduced {
    Vec y0;
    Mat basis; // dim x r
    std::vector<kernels::AffineBlock> blocks;
    double scale = 1.0;
    std::size_t r = 0;
    double degree = 0.0; // barrier parameter, sum of block sizes plus the box terms
};

Mat null_space(const LmiProblem& p) {
    const std::size_t m = p.dim;
    if (p.equalities.empty()) return Mat::identity(m);
    Mat a(p.equalities.size(), m);
    for (std::size_t i = 0; i < p.equalities.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) a(i, j) = p.equalities[i].a[j];
    const SymEig e = sym_eig(a.transpose() * a);
    const double top = std::max(e.values.back(), 1.0);
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < m; ++k)
        if (e.values[k] <= 1e-12 * top) keep.push_back(k);
    Mat n(m, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) n.set_col(c, e.vectors.col(keep[c]));
    return n;
}

Reduced reduce(const LmiProblem& p) {
    Reduced red;
    const std::size_t m = p.dim;
    red.y0.assign(m, 0.0);
    if (!p.equalities.empty()) {
        Mat a(p.equalities.size(), m);
        Mat b(p.equalities.size(), 1);
        for (std::size_t i = 0; i < p.equalities.size(); ++i) {
            for (std::size_t j = 0; j < m; ++j) a(i, j) = p.equalities[i].a[j];
            b(i, 0) = p.equalities[i].b;
        }
        red.y0 = solve_least_squares(a, b).col(0);
    }
    red.basis = null_space(p);
    red.r = red.basis.cols();

    double scale = 0.0;
    for (const LmiBlock& blk : p.blocks) {
        const std::size_t k = blk.f0.rows();
        kernels::AffineBlock ab;
        ab.base = block_value(blk, red.y0);
        for (std::size_t i = 0; i < red.r; ++i) {
            Mat c(k, k);
            for (std::size_t j = 0; j < m; ++j) {
                const double w = red.basis(j, i);
                if (w != 0.0) c += w * blk.f[j];
            }
            ab.coeffs.push_back(std::move(c));
        }
        scale = std::max(scale, frobenius(ab.base));
        for (const Mat& c : ab.coeffs) scale = std::max(scale, frobenius(c));
        red.blocks.push_back(std::move(ab));
    }
    red.scale = scale > 0.0 ? scale : 1.0;
    for (auto& ab : red.blocks) {
        ab.base *= 1.0 / red.scale;
        for (Mat& c : ab.coeffs) c *= 1.0 / red.scale;
        ab.coeffs.push_back(-Mat::identity(ab.base.rows()));
        red.degree += static_cast<double>(ab.base.rows());
    }
    red.degree += 2.0 * static_cast<double>(red.r);
    return red;
}

double min_eig_at(const std::vector<kernels::AffineBlock>& blocks, std::span<const double> x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) best = std::min(best, min_sym_eig(kernels::evaluate_block(b, x)));
    return best;
}

struct Objective {
    bool interior = false;
    double value = 0.0;
    Vec grad;
    Mat hess;
};

// tau * (-t) + block barriers + box barriers on s.
Objective evaluate(const Reduced& red, std::span<const double> x, double tau, double bound, bool derivatives) {
    Objective out;
    for (std::size_t i = 0; i < red.r; ++i)
        if (!(std::abs(x[i]) < bound)) return out;
    const kernels::BarrierTerms bt = kernels::barrier_terms_omp(red.blocks, x, derivatives);
    if (!bt.interior) return out;
    out.interior = true;
    out.value = bt.value - tau * x[red.r];
    for (std::size_t i = 0; i < red.r; ++i) out.value -= std::log(bound - x[i]) + std::log(bound + x[i]);
    if (!derivatives) return out;
    out.grad = bt.grad;
    out.hess = bt.hess;
    out.grad[red.r] -= tau;
    for (std::size_t i = 0; i < red.r; ++i) {
        const double up = bound - x[i], lo = bound + x[i];
        out.grad[i] += 1.0 / up - 1.0 / lo;
        out.hess(i, i) += 1.0 / (up * up) + 1.0 / (lo * lo);
    }
    return out;
}

// Largest alpha keeping every block positive definite and |s_i| < bound.
double max_step(const Reduced& red, std::span<const double> x, std::span<const double> dx, double bound) {
    double alpha = kernels::max_step_omp(red.blocks, x, dx);
    for (std::size_t i = 0; i < red.r; ++i) {
        if (dx[i] > 0.0) alpha = std::min(alpha, (bound - x[i]) / dx[i]);
        if (dx[i] < 0.0) alpha = std::min(alpha, (-bound - x[i]) / dx[i]);
    }
    return alpha;
}

Vec newton_direction(const Mat& h, const Vec& g) {
    Mat l;
    Mat hh = h;
    // Tiny diagonal shift if the Hessian is numerically singular.
    double shift = 0.0;
    while (!cholesky(hh, l)) {
        shift = shift == 0.0 ? 1e-12 * std::max(1.0, max_abs(h)) : shift * 10.0;
        hh = h;
        for (std::size_t i = 0; i < h.rows(); ++i) hh(i, i) += shift;
        require(shift < 1e-2 * std::max(1.0, max_abs(h)), ErrorKind::Numerical, "sdp: Newton system could not be regularised");
    }
    return cholesky_solve(l, Mat::column(scale(g, -1.0))).col(0);
}

} // namespace

std::string to_string(Status s) {
    switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

void LmiProblem::validate() const {
    require(dim <= kMaxDim, ErrorKind::Size, "sdp: more than 512 decision variables");
    require(!blocks.empty(), ErrorKind::InvalidInput, "sdp: problem has no blocks");
    for (const LmiBlock& b : blocks) {
        require(b.f0.is_square() && b.f0.rows() >= 1, ErrorKind::Shape, "sdp: block constant must be square");
        require(b.f0.rows() <= kMaxBlockSize, ErrorKind::Size, "sdp: block larger than 64");
        require(b.f.size() == dim, ErrorKind::Shape, "sdp: block needs one coefficient per variable");
        const double tol = kSymTol * std::max(1.0, max_abs(b.f0));
        require(max_abs(b.f0 - b.f0.transpose()) <= tol, ErrorKind::InvalidInput, "sdp: block constant is not symmetric");
        for (const Mat& f : b.f) {
            require(f.rows() == b.f0.rows() && f.cols() == b.f0.cols(), ErrorKind::Shape, "sdp: coefficient shape mismatch");
            require(max_abs(f - f.transpose()) <= kSymTol * std::max(1.0, max_abs(f)), ErrorKind::InvalidInput,
                    "sdp: coefficient is not symmetric");
        }
    }
    for (const Equality& e : equalities) require(e.a.size() == dim, ErrorKind::Shape, "sdp: equality length mismatch");
}

Mat block_value(const LmiBlock& b, std::span<const double> y) {
    Mat g = b.f0;
    for (std::size_t j = 0; j < y.size(); ++j)
        if (y[j] != 0.0) g += y[j] * b.f[j];
    return g;
}

Check check_solution(const LmiProblem& p, std::span<const double> y) {
    require(y.size() == p.dim, ErrorKind::Shape, "sdp: solution length mismatch");
    Check c{std::numeric_limits<double>::infinity(), 0.0};
    for (const LmiBlock& b : p.blocks) c.margin = std::min(c.margin, min_sym_eig(block_value(b, y)));
    for (const Equality& e : p.equalities) c.eq_residual = std::max(c.eq_residual, std::abs(dot(e.a, y) - e.b));
    return c;
}

LmiSolution solve_max_margin(const LmiProblem& p, const SolverOptions& opts) {
    p.validate();
    const Reduced red = reduce(p);
    LmiSolution sol;
    sol.y = red.y0;

    // Inconsistent equalities admit no y at all.
    {
        double res = 0.0;
        for (const Equality& e : p.equalities) res = std::max(res, std::abs(dot(e.a, red.y0) - e.b));
        if (res > kEqTol * (1.0 + norm_inf(red.y0))) {
            sol.status = Status::Infeasible;
            sol.eq_residual = res;
            sol.margin = -std::numeric_limits<double>::infinity();
            return sol;
        }
    }

    const double target = opts.target_margin >= 0.0 ? opts.target_margin / red.scale : 1e-6;
    const double bound = opts.variable_bound;
    const std::size_t nv = red.r + 1;

    Vec x(nv, 0.0);
    x[red.r] = 0.0;
    x[red.r] = min_eig_at(red.blocks, x) - 1.0;

    double tau = red.degree;
    double upper = std::numeric_limits<double>::infinity();
    bool centered = false;
    double last_lambda = 0.0;
    int used = 0;
    double gnorm = 0.0;
    for (;;) {
        // Center for the current tau.
        centered = false;
        for (int inner = 0; inner < 80 && used < opts.iteration_cap; ++inner) {
            const Objective f = evaluate(red, x, tau, bound, true);
            const Vec dx = newton_direction(f.hess, f.grad);
            const double decrement = -dot(f.grad, dx);
            gnorm = norm2(f.grad);
            ++used;
            last_lambda = std::sqrt(std::max(decrement, 0.0));
            if (decrement / 2.0 <= kCenteringTol) {
                centered = true;
                break;
            }
            // Start the backtracking just inside the feasible segment.
            double step = std::min(1.0, 0.95 * max_step(red, x, dx, bound));
            Vec trial;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                trial = add(x, scale(dx, step));
                const Objective ft = evaluate(red, trial, tau, bound, false);
                if (ft.interior && ft.value <= f.value - 0.25 * step * decrement) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                // No descent possible at machine precision; only close enough to
                // the center does the gap bound below still hold.
                centered = last_lambda < 0.5;
                break;
            }
            x = std::move(trial);
        }
        if (!centered) break;
        // Centered iterate: sup t of the box-restricted problem is at most t + degree / tau.
        // Approximate center with Newton decrement lambda < 1: the gap is at most
        // (nu + (lambda + sqrt(nu)) lambda / (1 - lambda)) / tau.
        const double lam = std::min(last_lambda, 0.5);
        upper = x[red.r] + (red.degree + (lam + std::sqrt(red.degree)) * lam / (1.0 - lam)) / tau;
        if (upper < 0.0) break;
        if (red.degree / tau <= opts.gap_tol * std::max(1.0, std::abs(x[red.r]))) break;
        tau *= 8.0;
    }

    sol.iterations = used;
    sol.grad_norm = gnorm;
    sol.upper_bound = upper * red.scale;
    sol.y = add(red.y0, red.basis * std::span<const double>(x.data(), red.r));
    const Check chk = check_solution(p, sol.y);
    sol.margin = chk.margin;
    sol.eq_residual = chk.eq_residual;

    bool box_active = false;
    for (std::size_t i = 0; i < red.r; ++i)
        if (std::abs(x[i]) > 0.99 * bound) box_active = true;

    if (chk.margin >= target * red.scale && chk.eq_residual <= kEqTol * (1.0 + norm_inf(sol.y)))
        sol.status = Status::Feasible;
    else if (centered && upper < 0.0 && !box_active)
        sol.status = Status::Infeasible;
    else
        sol.status = Status::Inconclusive;
    return sol;
}

} // namespace polysync::sdp
