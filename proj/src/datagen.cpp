#include "polysync/datagen.hpp"

#include <cmath>

namespace polysync {

void TrueSystem::validate() const {
    require(a.is_square() && a.rows() >= 1, ErrorKind::Shape, "system: A must be square");
    require(b.rows() == a.rows() && b.cols() >= 1, ErrorKind::Shape, "system: B must have n rows");
    require(c.cols() == a.rows() && c.rows() >= 1, ErrorKind::Shape, "system: C must have n columns");
    require(a.all_finite() && b.all_finite() && c.all_finite(), ErrorKind::InvalidInput, "system: non-finite entries");
}

NoiseModel box_noise(std::size_t n, std::size_t q, double w, double v) {
    require(w >= 0.0 && v >= 0.0, ErrorKind::InvalidInput, "noise: half-widths must be nonnegative");
    auto make = [](std::size_t dim, double h) {
        return h > 0.0 ? box_polytope(Vec(dim, h)) : VPolytope::point(Vec(dim, 0.0));
    };
    return NoiseModel{make(n, w), make(q, v)};
}

void AgentDataset::validate() const {
    require(x.cols() == rho && x_plus.cols() == rho && u.cols() == rho && y.cols() == rho, ErrorKind::Shape,
            "dataset: every matrix needs rho columns");
    require(x.rows() == x_plus.rows(), ErrorKind::Shape, "dataset: X and X+ row counts differ");
    require(x.all_finite() && x_plus.all_finite() && u.all_finite() && y.all_finite(), ErrorKind::InvalidInput,
            "dataset: non-finite entries");
}

Vec sample_in_hull(const VPolytope& p, std::mt19937_64& rng) {
    if (p.size() == 1) return p.vertex(0);
    std::exponential_distribution<double> e(1.0);
    Vec weights(p.size());
    double total = 0.0;
    for (double& w : weights) total += (w = e(rng));
    Vec x(p.dim(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k)
        for (std::size_t i = 0; i < p.dim(); ++i) x[i] += (weights[k] / total) * p.vertex(k)[i];
    return x;
}

Vec sample_noise(const VPolytope& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_in_hull(p, rng);
}

AgentDataset collect(const TrueSystem& sys, const NoiseModel& noise, std::size_t rho, const VPolytope& input_poly,
                     std::span<const double> x0, std::uint64_t seed, const CollectOptions& opts) {
    sys.validate();
    const std::size_t n = sys.n(), p = sys.p(), q = sys.q();
    require(rho >= 1, ErrorKind::InvalidInput, "collect: rho must be positive");
    require(x0.size() == n, ErrorKind::Shape, "collect: initial state has the wrong length");
    require(input_poly.dim() == p, ErrorKind::Shape, "collect: input polytope dimension differs from p");
    require(noise.process.dim() == n && noise.measurement.dim() == q, ErrorKind::Shape,
            "collect: noise polytope dimensions differ from the system");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> restart_draw(-1.0, 1.0);
    AgentDataset d{Mat(n, rho), Mat(n, rho), Mat(p, rho), Mat(q, rho), rho, seed, 0, Mat(n, rho), Mat(q, rho)};
    Vec x(x0.begin(), x0.end());
    for (std::size_t t = 0; t < rho; ++t) {
        if (opts.restart_bound > 0.0 && norm_inf(x) > opts.restart_bound) {
            for (double& xi : x) xi = restart_draw(rng);
            ++d.restarts;
        }
        const Vec u = sample_in_hull(input_poly, rng);
        const Vec w = sample_in_hull(noise.process, rng);
        const Vec v = sample_in_hull(noise.measurement, rng);
        const Vec xn = add(add(sys.a * x, sys.b * u), w);
        const Vec y = add(sys.c * x, v);
        for (double e : xn)
            if (!std::isfinite(e) || std::abs(e) > opts.divergence_threshold)
                fail(ErrorKind::Divergence, "collect: open-loop state exceeded " + std::to_string(opts.divergence_threshold) +
                                                " at step " + std::to_string(t) +
                                                "; use a shorter horizon or enable bounded restarts");
        d.x.set_col(t, x);
        d.x_plus.set_col(t, xn);
        d.u.set_col(t, u);
        d.y.set_col(t, y);
        d.w->set_col(t, w);
        d.v->set_col(t, v);
        x = xn;
    }
    if (!opts.retain_noise) {
        d.w.reset();
        d.v.reset();
    }
    return d;
}

Mat stacked_data(const AgentDataset& d) { return vstack(d.u, d.x); }

bool rank_ok(const AgentDataset& d, double tol) {
    const Mat s = stacked_data(d);
    if (s.cols() < s.rows()) return false;
    const Svd dec = svd(s);
    for (double sv : dec.s)
        if (!(sv > tol)) return false;
    return true;
}

} // namespace polysync
