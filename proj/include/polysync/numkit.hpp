#pragma once

// Dense real linear algebra used across the library. Sizes are desk scale
// (a few hundred rows at most), so everything is row-major std::vector storage
// with straightforward loops.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "polysync/error.hpp"

namespace polysync {

using Vec = std::vector<double>;

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat zeros(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
    static Mat diag(std::span<const double> d);
    static Mat column(std::span<const double> v);
    static Mat row(std::span<const double> v);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    [[nodiscard]] Mat transpose() const;
    [[nodiscard]] Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const Mat& b);
    [[nodiscard]] Vec col(std::size_t c) const;
    [[nodiscard]] Vec row_vec(std::size_t r) const;
    void set_col(std::size_t c, std::span<const double> v);

    [[nodiscard]] bool all_finite() const noexcept;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator-(Mat a);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Vec operator*(const Mat& a, std::span<const double> x);

Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec scale(std::span<const double> a, double s);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);

Mat hstack(std::initializer_list<const Mat*> parts);
Mat vstack(std::initializer_list<const Mat*> parts);
Mat hstack(const Mat& a, const Mat& b);
Mat vstack(const Mat& a, const Mat& b);
Mat kron(const Mat& a, const Mat& b);
Mat symmetrize(const Mat& a);

// Column-major vectorisation, vec(A) stacks the columns of A.
Vec vec(const Mat& a);
Mat unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

double frobenius(const Mat& a);
double norm_two(const Mat& a);   // largest singular value
double norm_inf(const Mat& a);   // max absolute row sum
double trace(const Mat& a);
double max_abs(const Mat& a);

// Thin singular value decomposition a = U diag(s) V^T with s descending.
// U is rows x k, V is cols x k, k = min(rows, cols). One-sided Jacobi.
struct Svd {
    Mat u;
    Vec s;
    Mat v;
};
Svd svd(const Mat& a);

constexpr double kDefaultRankTol = 1e-10;

// Moore-Penrose pseudoinverse. Singular values below tol * s_max are dropped.
Mat pinv(const Mat& m, double tol = kDefaultRankTol);
std::size_t rank(const Mat& m, double tol = kDefaultRankTol);

// Minimum-norm least-squares solution of a x = b.
Mat solve_least_squares(const Mat& a, const Mat& b, double tol = kDefaultRankTol);

// Square solve / inverse by partial-pivot LU. Throws Numerical on singular input.
Mat solve(const Mat& a, const Mat& b);
Mat inverse(const Mat& a);
double determinant(const Mat& a);

// Lower-triangular Cholesky factor; returns false when a is not positive definite.
bool cholesky(const Mat& a, Mat& lower);
// Solves (L L') x = b given the factor from cholesky().
Mat cholesky_solve(const Mat& lower, const Mat& b);
// L^{-1} b by forward substitution.
Mat lower_solve(const Mat& lower, const Mat& b);

struct Spectrum {
    std::vector<std::complex<double>> eigenvalues;
    [[nodiscard]] std::size_t size() const noexcept { return eigenvalues.size(); }
};

// Full complex spectrum via Hessenberg reduction and Francis double-shift QR.
Spectrum eigenvalues(const Mat& m);
double spectral_radius(const Mat& m);
bool is_schur(const Mat& m, double margin = 0.0);

// Symmetric eigendecomposition (cyclic Jacobi). Eigenvalues ascending, vectors in columns.
struct SymEig {
    Vec values;
    Mat vectors;
};
SymEig sym_eig(const Mat& a);
double min_sym_eig(const Mat& a);
double max_sym_eig(const Mat& a);

// Symmetric positive definite square root.
Mat sqrtm_spd(const Mat& a);

} // namespace polysync
