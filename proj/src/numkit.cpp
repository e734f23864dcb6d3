#include "polysync/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace polysync {

namespace {

std::string shape_str(const Mat& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(ErrorKind::Shape, std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

} // namespace

// ---------------------------------------------------------------------------
// Mat

Mat::Mat(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows_ * cols_)
        fail(ErrorKind::Shape, "Mat: entry count does not match rows*cols");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) fail(ErrorKind::Shape, "Mat: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Mat Mat::column(std::span<const double> v) { return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end())); }

Mat Mat::row(std::span<const double> v) { return Mat(1, v.size(), std::vector<double>(v.begin(), v.end())); }

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) fail(ErrorKind::Shape, "block: out of range");
    Mat b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) fail(ErrorKind::Shape, "set_block: out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Vec Mat::col(std::size_t c) const {
    Vec v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, c);
    return v;
}

Vec Mat::row_vec(std::size_t r) const {
    return Vec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
               data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
}

void Mat::set_col(std::size_t c, std::span<const double> v) {
    if (v.size() != rows_) fail(ErrorKind::Shape, "set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, c) = v[i];
}

bool Mat::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat& Mat::operator+=(const Mat& o) {
    require_same_shape(*this, o, "operator+");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    require_same_shape(*this, o, "operator-");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator-(Mat a) { return a *= -1.0; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows())
        fail(ErrorKind::Shape, "operator*: inner dimensions differ " + shape_str(a) + " * " + shape_str(b));
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
    if (a.cols() != x.size()) fail(ErrorKind::Shape, "matvec: length mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vec add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::Shape, "add: length mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::Shape, "sub: length mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vec scale(std::span<const double> a, double s) {
    Vec r(a.begin(), a.end());
    for (auto& x : r) x *= s;
    return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::Shape, "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Mat hstack(std::initializer_list<const Mat*> parts) {
    std::size_t rows = (*parts.begin())->rows(), cols = 0;
    for (const Mat* p : parts) {
        if (p->rows() != rows) fail(ErrorKind::Shape, "hstack: row counts differ");
        cols += p->cols();
    }
    Mat out(rows, cols);
    std::size_t c0 = 0;
    for (const Mat* p : parts) {
        out.set_block(0, c0, *p);
        c0 += p->cols();
    }
    return out;
}

Mat vstack(std::initializer_list<const Mat*> parts) {
    std::size_t cols = (*parts.begin())->cols(), rows = 0;
    for (const Mat* p : parts) {
        if (p->cols() != cols) fail(ErrorKind::Shape, "vstack: column counts differ");
        rows += p->rows();
    }
    Mat out(rows, cols);
    std::size_t r0 = 0;
    for (const Mat* p : parts) {
        out.set_block(r0, 0, *p);
        r0 += p->rows();
    }
    return out;
}

Mat hstack(const Mat& a, const Mat& b) { return hstack({&a, &b}); }
Mat vstack(const Mat& a, const Mat& b) { return vstack({&a, &b}); }

Mat kron(const Mat& a, const Mat& b) {
    Mat k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return k;
}

Mat symmetrize(const Mat& a) {
    if (!a.is_square()) fail(ErrorKind::Shape, "symmetrize: not square");
    Mat s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

Vec vec(const Mat& a) {
    Vec v(a.size());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) v[j * a.rows() + i] = a(i, j);
    return v;
}

Mat unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) fail(ErrorKind::Shape, "unvec: length mismatch");
    Mat a(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) a(i, j) = v[j * rows + i];
    return a;
}

double frobenius(const Mat& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

double norm_two(const Mat& a) {
    if (a.empty()) return 0.0;
    const Svd d = svd(a);
    return d.s.empty() ? 0.0 : d.s.front();
}

double norm_inf(const Mat& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
        m = std::max(m, s);
    }
    return m;
}

double trace(const Mat& a) {
    if (!a.is_square()) fail(ErrorKind::Shape, "trace: not square");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

double max_abs(const Mat& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// SVD, one-sided Jacobi on the columns of a tall copy.

namespace {

Svd svd_tall(const Mat& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Mat u = a;
    Mat v = Mat::identity(n);
    constexpr int kMaxSweeps = 80;
    constexpr double kEps = 1e-15;
    // Orthogonality is only attainable to about sqrt(m) ulps (as in LAPACK's gesvj).
    const double orth_tol = std::max(kEps, std::sqrt(static_cast<double>(m)) * std::numeric_limits<double>::epsilon());
    // Columns this small are rounding noise; rotating them never settles.
    const double negligible = std::pow(kEps * frobenius(a), 2);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if (alpha <= negligible || beta <= negligible) continue;
                if (std::abs(gamma) <= orth_tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
        if (sweep + 1 == kMaxSweeps) fail(ErrorKind::Numerical, "svd: Jacobi sweeps did not converge");
    }

    Vec s(n);
    for (std::size_t j = 0; j < n; ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < m; ++i) nrm += u(i, j) * u(i, j);
        nrm = std::sqrt(nrm);
        s[j] = nrm;
        if (nrm > 0.0)
            for (std::size_t i = 0; i < m; ++i) u(i, j) /= nrm;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
    Svd out{Mat(m, n), Vec(n), Mat(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.s[k] = s[j];
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u(i, j);
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    }
    return out;
}

} // namespace

Svd svd(const Mat& a) {
    if (!a.all_finite()) fail(ErrorKind::InvalidInput, "svd: non-finite entries");
    if (a.rows() >= a.cols()) return svd_tall(a);
    Svd t = svd_tall(a.transpose());
    return Svd{t.v, t.s, t.u};
}

Mat pinv(const Mat& m, double tol) {
    if (tol < 0.0) fail(ErrorKind::InvalidInput, "pinv: negative tolerance");
    if (!m.all_finite()) fail(ErrorKind::InvalidInput, "pinv: non-finite entries");
    const Svd d = svd(m);
    const double cut = d.s.empty() ? 0.0 : tol * d.s.front();
    Mat p(m.cols(), m.rows());
    for (std::size_t k = 0; k < d.s.size(); ++k) {
        if (d.s[k] <= cut || d.s[k] == 0.0) continue;
        const double inv = 1.0 / d.s[k];
        for (std::size_t i = 0; i < m.cols(); ++i) {
            const double vik = d.v(i, k) * inv;
            for (std::size_t j = 0; j < m.rows(); ++j) p(i, j) += vik * d.u(j, k);
        }
    }
    return p;
}

std::size_t rank(const Mat& m, double tol) {
    const Svd d = svd(m);
    if (d.s.empty()) return 0;
    const double cut = tol * d.s.front();
    return static_cast<std::size_t>(std::count_if(d.s.begin(), d.s.end(), [&](double x) { return x > cut && x > 0.0; }));
}

Mat solve_least_squares(const Mat& a, const Mat& b, double tol) {
    if (a.rows() != b.rows()) fail(ErrorKind::Shape, "solve_least_squares: row counts differ");
    return pinv(a, tol) * b;
}

// ---------------------------------------------------------------------------
// LU

namespace {

struct Lu {
    Mat lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

Lu lu_decompose(const Mat& a) {
    if (!a.is_square()) fail(ErrorKind::Shape, "lu: matrix not square");
    const std::size_t n = a.rows();
    Lu f{a, std::vector<std::size_t>(n), 1, false};
    std::iota(f.perm.begin(), f.perm.end(), 0);
    const double scale = std::max(max_abs(a), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(f.lu(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > best) {
                best = std::abs(f.lu(i, k));
                piv = i;
            }
        if (best <= 1e-14 * scale) {
            f.singular = true;
            return f;
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = f.lu(i, k) / f.lu(k, k);
            f.lu(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
        }
    }
    return f;
}

} // namespace

Mat solve(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) fail(ErrorKind::Shape, "solve: row counts differ");
    const Lu f = lu_decompose(a);
    if (f.singular) fail(ErrorKind::Numerical, "solve: matrix is singular to working precision");
    const std::size_t n = a.rows();
    Mat x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        Vec y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b(f.perm[i], c);
            for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * y[k];
            y[i] = s;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= f.lu(ii, k) * x(k, c);
            x(ii, c) = s / f.lu(ii, ii);
        }
    }
    return x;
}

Mat inverse(const Mat& a) { return solve(a, Mat::identity(a.rows())); }

double determinant(const Mat& a) {
    const Lu f = lu_decompose(a);
    if (f.singular) return 0.0;
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
    return d;
}

bool cholesky(const Mat& a, Mat& lower) {
    if (!a.is_square()) fail(ErrorKind::Shape, "cholesky: not square");
    const std::size_t n = a.rows();
    lower = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
        if (!(d > 0.0)) return false;
        const double ljj = std::sqrt(d);
        lower(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

Mat cholesky_solve(const Mat& lower, const Mat& b) {
    if (!lower.is_square() || lower.rows() != b.rows()) fail(ErrorKind::Shape, "cholesky_solve: shape mismatch");
    const std::size_t n = lower.rows();
    Mat x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * x(k, c);
            x(i, c) = s / lower(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x(i, c);
            for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x(k, c);
            x(i, c) = s / lower(i, i);
        }
    }
    return x;
}

Mat lower_solve(const Mat& lower, const Mat& b) {
    if (!lower.is_square() || lower.rows() != b.rows()) fail(ErrorKind::Shape, "lower_solve: shape mismatch");
    const std::size_t n = lower.rows();
    Mat x = b;
    for (std::size_t c = 0; c < b.cols(); ++c)
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * x(k, c);
            x(i, c) = s / lower(i, i);
        }
    return x;
}

// ---------------------------------------------------------------------------
// Nonsymmetric eigenvalues: balance, Householder Hessenberg, Francis QR.

namespace {

void balance(Mat& a) {
    constexpr double kRadix = 2.0;
    constexpr double kSqrdx = kRadix * kRadix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, c = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / kRadix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= kRadix;
                c *= kSqrdx;
            }
            g = r * kRadix;
            while (c > g) {
                f /= kRadix;
                c /= kSqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                const double ginv = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= ginv;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

void hessenberg(Mat& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (a(k + 1, k) > 0) alpha = -alpha;
        Vec v(n, 0.0);
        v[k + 1] = a(k + 1, k) - alpha;
        for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vn = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vn += v[i] * v[i];
        if (vn == 0.0) continue;
        // a <- (I - 2vv^T/vn) a (I - 2vv^T/vn)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= 2.0 / vn;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= 2.0 / vn;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr lineage).
// Indices are 1-based internally to keep the classic recurrences readable.
std::vector<std::complex<double>> hqr(Mat& h) {
    const int n = static_cast<int>(h.rows());
    auto a = [&](int i, int j) -> double& { return h(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)); };
    std::vector<double> wr(static_cast<std::size_t>(n) + 1, 0.0), wi(static_cast<std::size_t>(n) + 1, 0.0);

    double anorm = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));

    int nn = n;
    double t = 0.0;
    constexpr int kMaxIts = 60;
    while (nn >= 1) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 2; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) + s == s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                wr[static_cast<std::size_t>(nn)] = x + t;
                wi[static_cast<std::size_t>(nn)] = 0.0;
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    const auto un = static_cast<std::size_t>(nn);
                    if (q >= 0.0) {
                        z = p + std::copysign(z, p);
                        wr[un - 1] = wr[un] = x + z;
                        if (z != 0.0) wr[un] = x - w / z;
                        wi[un - 1] = wi[un] = 0.0;
                    } else {
                        wr[un - 1] = wr[un] = x + p;
                        wi[un - 1] = -z;
                        wi[un] = z;
                    }
                    nn -= 2;
                } else {
                    if (its == kMaxIts) fail(ErrorKind::Numerical, "eigenvalues: QR iteration did not converge");
                    if (its > 0 && its % 10 == 0) {
                        t += x;
                        for (int i = 1; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0, q = 0, r = 0, z = 0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u + v == v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                        if (s != 0.0) {
                            if (k == m) {
                                if (l != m) a(k, k - 1) = -a(k, k - 1);
                            } else {
                                a(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a(k, j) + q * a(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * a(k + 2, j);
                                    a(k + 2, j) -= p * z;
                                }
                                a(k + 1, j) -= p * y;
                                a(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a(i, k) + y * a(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * a(i, k + 2);
                                    a(i, k + 2) -= p * r;
                                }
                                a(i, k + 1) -= p * q;
                                a(i, k) -= p;
                            }
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }

    std::vector<std::complex<double>> ev;
    ev.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) ev.emplace_back(wr[static_cast<std::size_t>(i)], wi[static_cast<std::size_t>(i)]);
    return ev;
}

} // namespace

Spectrum eigenvalues(const Mat& m) {
    if (!m.is_square()) fail(ErrorKind::Shape, "eigenvalues: matrix not square (" + shape_str(m) + ")");
    if (!m.all_finite()) fail(ErrorKind::InvalidInput, "eigenvalues: non-finite entries");
    if (m.rows() == 0) return {};
    Mat h = m;
    balance(h);
    hessenberg(h);
    return Spectrum{hqr(h)};
}

double spectral_radius(const Mat& m) {
    double r = 0.0;
    for (const auto& z : eigenvalues(m).eigenvalues) r = std::max(r, std::abs(z));
    return r;
}

bool is_schur(const Mat& m, double margin) {
    if (margin < 0.0 || margin >= 1.0) fail(ErrorKind::InvalidInput, "is_schur: margin must lie in [0, 1)");
    return spectral_radius(m) < 1.0 - margin;
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem, cyclic Jacobi.

SymEig sym_eig(const Mat& a_in) {
    if (!a_in.is_square()) fail(ErrorKind::Shape, "sym_eig: not square");
    if (!a_in.all_finite()) fail(ErrorKind::InvalidInput, "sym_eig: non-finite entries");
    const std::size_t n = a_in.rows();
    Mat a = symmetrize(a_in);
    Mat v = Mat::identity(n);
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off <= 1e-32 * std::max(diag, 1e-300) || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        if (sweep + 1 == kMaxSweeps) fail(ErrorKind::Numerical, "sym_eig: Jacobi sweeps did not converge");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    SymEig out{Vec(n), Mat(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

double min_sym_eig(const Mat& a) { return sym_eig(a).values.front(); }
double max_sym_eig(const Mat& a) { return sym_eig(a).values.back(); }

Mat sqrtm_spd(const Mat& a) {
    const SymEig e = sym_eig(a);
    const std::size_t n = a.rows();
    Mat r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (e.values[k] < 0.0) fail(ErrorKind::Numerical, "sqrtm_spd: matrix is not positive semidefinite");
        const double s = std::sqrt(e.values[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r(i, j) += s * e.vectors(i, k) * e.vectors(j, k);
    }
    return r;
}

} // namespace polysync
