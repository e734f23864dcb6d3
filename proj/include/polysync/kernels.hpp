#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// version; the OpenMP versions write into per-item slots and reduce in a fixed
// order, so both produce bitwise-identical results. Library code calls the
// OpenMP versions; tests and bench/ compare the two.

#include <span>
#include <vector>

#include "polysync/numkit.hpp"

namespace polysync::kernels {

// left * V * right + shift for every vertex V.
std::vector<Mat> map_vertices_serial(std::span<const Mat> vertices, const Mat& left, const Mat& right, const Mat& shift);
std::vector<Mat> map_vertices_omp(std::span<const Mat> vertices, const Mat& left, const Mat& right, const Mat& shift);

Vec spectral_radii_serial(std::span<const Mat> mats);
Vec spectral_radii_omp(std::span<const Mat> mats);

// Axis-aligned bounds of { Q p : Q in mats, p in points }.
struct Box {
    Vec lo;
    Vec hi;
};
Box image_bounds_serial(std::span<const Mat> mats, std::span<const Vec> points);
Box image_bounds_omp(std::span<const Mat> mats, std::span<const Vec> points);

// Symmetric affine matrix function base + sum_j x_j coeffs[j].
struct AffineBlock {
    Mat base;
    std::vector<Mat> coeffs;
};

// Log-barrier terms of -sum_b log det(G_b(x)): value, gradient and Hessian.
// interior is false as soon as one block is not positive definite.
struct BarrierTerms {
    bool interior = false;
    double value = 0.0;
    Vec grad;
    Mat hess;
};
BarrierTerms barrier_terms_serial(std::span<const AffineBlock> blocks, std::span<const double> x, bool derivatives);
BarrierTerms barrier_terms_omp(std::span<const AffineBlock> blocks, std::span<const double> x, bool derivatives);

// Largest alpha with every G_b(x + alpha dx) positive definite (infinity if
// the direction never leaves the cone). x must be interior.
double max_step_serial(std::span<const AffineBlock> blocks, std::span<const double> x, std::span<const double> dx);
double max_step_omp(std::span<const AffineBlock> blocks, std::span<const double> x, std::span<const double> dx);

Mat evaluate_block(const AffineBlock& block, std::span<const double> x);

} // namespace polysync::kernels
