// linalg.hpp - dense symmetric linear algebra used by every other module:
// Cholesky factorization, log-determinant, positive-definite solves, and
// per-set summary statistics (mean and divisor-m scatter).

#ifndef SETCLF_LINALG_HPP
#define SETCLF_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "setclf/errors.hpp"

namespace setclf {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Value semantics throughout; immutable
// use after construction is the norm in this library.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries)
        : rows_(rows), cols_(cols), data_(entries) {
        if (data_.size() != rows * cols) {
            throw DimensionMismatchError("Matrix: initializer size does not match dimensions");
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

inline Vector mat_vec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimensionMismatchError("mat_vec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* row = a.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatchError("mat_mul: dimension mismatch");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatchError("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// x' A x for square A.
inline double quadratic_form(const Matrix& a, const Vector& x) {
    return dot(x, mat_vec(a, x));
}

// trace(A B) via sum_ij A_ij B_ji.
inline double trace_product(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows() || a.rows() != b.cols()) {
        throw DimensionMismatchError("trace_product: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(j, i);
    }
    return acc;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_asymmetry(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            m = std::max(m, std::abs(a(i, j) - a(j, i)));
        }
    }
    return m;
}

// Lower-triangular Cholesky factor L with L L' = A.
struct CholeskyFactor {
    Matrix lower;
    std::size_t dim() const { return lower.rows(); }

    // Solve A x = b by forward/back substitution against L.
    Vector solve(const Vector& b) const {
        const std::size_t n = dim();
        if (b.size() != n) throw DimensionMismatchError("CholeskyFactor::solve: rhs dimension");
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = b[i];
            const double* row = lower.row_ptr(i);
            for (std::size_t j = 0; j < i; ++j) acc -= row[j] * y[j];
            y[i] = acc / row[i];
        }
        Vector x(n);
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= lower(j, ii) * x[j];
            x[ii] = acc / lower(ii, ii);
        }
        return x;
    }

    // A^{-1}, column by column.
    Matrix inverse() const {
        const std::size_t n = dim();
        Matrix inv(n, n);
        Vector e(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            e[j] = 1.0;
            Vector col = solve(e);
            e[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        }
        // The solve-per-column inverse of a symmetric matrix is symmetric up
        // to roundoff; make it exact.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double v = 0.5 * (inv(i, j) + inv(j, i));
                inv(i, j) = v;
                inv(j, i) = v;
            }
        }
        return inv;
    }

    double log_det() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) acc += std::log(lower(i, i));
        return 2.0 * acc;
    }
};

namespace detail {
constexpr double kPivotFloor = 1e-12;     // PD failure threshold
constexpr double kSymmetryTol = 1e-12;    // max tolerated input asymmetry
}  // namespace detail

// Cholesky factorization of a symmetric positive-definite matrix.
// Input asymmetry below 1e-12 is symmetrized away; anything larger is an
// error. A pivot <= 1e-12 signals a degenerate covariance and throws
// NotPositiveDefiniteError (callers fall back to diagonal/enriched variants).
inline CholeskyFactor cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n) {
        throw DimensionMismatchError("cholesky: matrix must be square with dimension >= 1");
    }
    if (max_asymmetry(a) > detail::kSymmetryTol) {
        throw DimensionMismatchError("cholesky: input matrix is not symmetric");
    }
    Matrix l(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = j; i < n; ++i) {
            // Symmetrize on read so tiny asymmetry cannot leak into the factor.
            double acc = 0.5 * (a(i, j) + a(j, i));
            const double* li = l.row_ptr(i);
            const double* lj = l.row_ptr(j);
            for (std::size_t k = 0; k < j; ++k) acc -= li[k] * lj[k];
            if (i == j) {
                if (acc <= detail::kPivotFloor) {
                    throw NotPositiveDefiniteError(
                        "cholesky: pivot " + std::to_string(j) + " is not positive");
                }
                l(j, j) = std::sqrt(acc);
            } else {
                l(i, j) = acc / l(j, j);
            }
        }
    }
    return CholeskyFactor{std::move(l)};
}

// log |A| = 2 sum_i log L_ii for symmetric positive-definite A.
inline double log_det_pd(const Matrix& a) { return cholesky(a).log_det(); }

// Solve A x = b for symmetric positive-definite A.
inline Vector solve_pd(const Matrix& a, const Vector& b) { return cholesky(a).solve(b); }

// Summary statistics of one set of observations: size, mean, and the
// divisor-m scatter S = sum_j (x_j - xbar)(x_j - xbar)' / m. The divisor is
// m, never m-1: the per-observation score decomposition
// (1/m) sum_j x_j' D x_j = xbar' D xbar + trace(D S) requires it.
struct SetStatistics {
    std::size_t m = 0;
    Vector mean;
    Matrix scatter;
};

inline SetStatistics set_statistics(const std::vector<Vector>& observations) {
    if (observations.empty()) throw EmptySetError("set_statistics: no observations");
    const std::size_t m = observations.size();
    const std::size_t p = observations.front().size();
    for (const auto& x : observations) {
        if (x.size() != p) {
            throw DimensionMismatchError("set_statistics: observations of unequal dimension");
        }
    }
    SetStatistics s;
    s.m = m;
    s.mean.assign(p, 0.0);
    for (const auto& x : observations) {
        for (std::size_t j = 0; j < p; ++j) s.mean[j] += x[j];
    }
    for (double& v : s.mean) v /= static_cast<double>(m);
    s.scatter = Matrix(p, p, 0.0);
    if (m == 1) return s;  // scatter is exactly zero for a singleton
    for (const auto& x : observations) {
        for (std::size_t i = 0; i < p; ++i) {
            const double di = x[i] - s.mean[i];
            double* row = s.scatter.row_ptr(i);
            for (std::size_t j = 0; j < p; ++j) row[j] += di * (x[j] - s.mean[j]);
        }
    }
    for (double& v : s.scatter.data()) v /= static_cast<double>(m);
    return s;
}

}  // namespace setclf

#endif  // SETCLF_LINALG_HPP
