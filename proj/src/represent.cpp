#include "polysync/represent.hpp"

namespace polysync {

ConsistencySet build_consistency_set(const AgentDataset& d, const NoiseModel& noise, NoiseMode mode, double rank_tol) {
    d.validate();
    const std::size_t n = d.x.rows(), p = d.u.rows(), q = d.y.rows();
    require(noise.process.dim() == n && noise.measurement.dim() == q, ErrorKind::Shape,
            "consistency set: noise dimensions differ from the data");
    require(rank_ok(d, rank_tol), ErrorKind::Precondition,
            "consistency set: [U; X] lacks full row rank (persistency of excitation fails); collect more or richer data");

    ConsistencySet cs;
    cs.n = n;
    cs.p = p;
    cs.q = q;
    cs.rho = d.rho;
    cs.mode = mode;
    cs.gamma_w = noise.process.size();
    cs.gamma_v = noise.measurement.size();
    cs.d_pinv = pinv(stacked_data(d));
    cs.x_pinv = pinv(d.x);
    cs.w_poly = noise_matrix_polytope(noise.process, d.rho, mode);
    cs.v_poly = noise_matrix_polytope(noise.measurement, d.rho, mode);
    // (X+ - W) D^dagger = X+ D^dagger + (-I) W D^dagger
    cs.z_poly = map_matrix_polytope(cs.w_poly, cs.d_pinv, -Mat::identity(n), d.x_plus * cs.d_pinv);
    cs.c_poly = map_matrix_polytope(cs.v_poly, cs.x_pinv, -Mat::identity(q), d.y * cs.x_pinv);
    return cs;
}

ReconstructionError reconstruction_error(const ConsistencySet& cs, const TrueSystem& sys, const AgentDataset& d) {
    require(d.w.has_value() && d.v.has_value(), ErrorKind::UnavailableOracle,
            "reconstruction check needs the realised noise, which this dataset did not retain");
    const Mat z_true = hstack(sys.b, sys.a);
    const Mat z_rec = (d.x_plus - *d.w) * cs.d_pinv;
    const Mat c_rec = (d.y - *d.v) * cs.x_pinv;
    return {frobenius(z_true - z_rec), frobenius(sys.c - c_rec)};
}

bool verify_true_membership(const ConsistencySet& cs, const TrueSystem& sys, const AgentDataset& d, double tol) {
    const ReconstructionError e = reconstruction_error(cs, sys, d);
    return e.z < tol && e.c < tol;
}

MatrixPolytope closed_loop_polytope(const ConsistencySet& cs, const Mat& k) {
    require(k.rows() == cs.p && k.cols() == cs.n, ErrorKind::Shape, "closed_loop_polytope: K must be p x n");
    const Mat selector = vstack(k, Mat::identity(cs.n));
    return map_matrix_polytope(cs.z_poly, selector, Mat::identity(cs.n), Mat(cs.n, cs.n));
}

} // namespace polysync
