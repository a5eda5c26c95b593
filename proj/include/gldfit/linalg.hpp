#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gldfit {

/// Dense row-major matrix; just enough linear algebra for small regression
/// problems (p is a handful of columns, n can be large).
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

struct LeastSquaresResult {
    std::vector<double> coefficients;
    std::vector<double> residuals;
    std::size_t rank = 0;
};

/// Householder QR least squares min ||y - X b||_2 with a rank check.
/// Throws on rank deficiency; the caller treats that as an input error.
inline LeastSquaresResult qr_least_squares(const Matrix& X, const std::vector<double>& y) {
    const std::size_t n = X.rows();
    const std::size_t p = X.cols();
    if (y.size() != n) throw std::invalid_argument("qr_least_squares: size mismatch");
    if (n < p) throw std::invalid_argument("qr_least_squares: fewer rows than columns");

    Matrix R(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) R(i, j) = X(i, j);
    std::vector<double> qty = y;

    double max_diag = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += R(i, k) * R(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) throw std::invalid_argument("design matrix is rank deficient");
        const double alpha = (R(k, k) >= 0.0) ? -norm : norm;
        std::vector<double> v(n - k);
        v[0] = R(k, k) - alpha;
        for (std::size_t i = k + 1; i < n; ++i) v[i - k] = R(i, k);
        double vnorm2 = 0.0;
        for (double t : v) vnorm2 += t * t;
        if (vnorm2 > 0.0) {
            for (std::size_t j = k; j < p; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < n; ++i) dot += v[i - k] * R(i, j);
                const double f = 2.0 * dot / vnorm2;
                for (std::size_t i = k; i < n; ++i) R(i, j) -= f * v[i - k];
            }
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * qty[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) qty[i] -= f * v[i - k];
        }
        R(k, k) = alpha;
        max_diag = std::max(max_diag, std::fabs(alpha));
    }

    const double tol = 1e-10 * max_diag;
    for (std::size_t k = 0; k < p; ++k)
        if (std::fabs(R(k, k)) <= tol)
            throw std::invalid_argument("design matrix is rank deficient");

    LeastSquaresResult out;
    out.rank = p;
    out.coefficients.assign(p, 0.0);
    for (std::size_t k = p; k-- > 0;) {
        double s = qty[k];
        for (std::size_t j = k + 1; j < p; ++j) s -= R(k, j) * out.coefficients[j];
        out.coefficients[k] = s / R(k, k);
    }
    out.residuals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += X(i, j) * out.coefficients[j];
        out.residuals[i] = y[i] - fit;
    }
    return out;
}

/// Cholesky factor (lower) of a symmetric positive definite matrix.
/// Returns false if the matrix is not numerically positive definite.
inline bool cholesky(const Matrix& A, Matrix& L) {
    const std::size_t n = A.rows();
    if (A.cols() != n) return false;
    L = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (!(s > 0.0)) return false;
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return true;
}

/// Solve A x = b for symmetric positive definite A via Cholesky.
inline bool solve_spd(const Matrix& A, const std::vector<double>& b, std::vector<double>& x) {
    Matrix L;
    if (!cholesky(A, L)) return false;
    const std::size_t n = A.rows();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * z[k];
        z[i] = s / L(i, i);
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= L(k, i) * x[k];
        x[i] = s / L(i, i);
    }
    return true;
}

/// Inverse of a symmetric positive definite matrix; false if not SPD.
inline bool invert_spd(const Matrix& A, Matrix& inv) {
    const std::size_t n = A.rows();
    inv = Matrix(n, n, 0.0);
    std::vector<double> e(n, 0.0), col;
    for (std::size_t j = 0; j < n; ++j) {
        e.assign(n, 0.0);
        e[j] = 1.0;
        if (!solve_spd(A, e, col)) return false;
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return true;
}

} // namespace gldfit
