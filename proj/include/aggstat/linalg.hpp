#ifndef AGGSTAT_LINALG_HPP
#define AGGSTAT_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aggstat {

// Dense row-major matrix of doubles. Everything here targets the small
// systems this library works with (a handful of channels, a few groups);
// no attempt is made at large-scale performance.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix operator*(const Matrix& rhs) const {
        if (cols_ != rhs.rows_)
            throw std::invalid_argument("Matrix multiply: inner dimensions differ");
        Matrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                for (std::size_t j = 0; j < rhs.cols_; ++j)
                    out(i, j) += a * rhs(k, j);
            }
        return out;
    }

    Matrix operator*(double s) const {
        Matrix out = *this;
        for (double& x : out.data_)
            x *= s;
        return out;
    }

    Matrix operator+(const Matrix& rhs) const {
        if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
            throw std::invalid_argument("Matrix add: dimensions differ");
        Matrix out = *this;
        for (std::size_t i = 0; i < data_.size(); ++i)
            out.data_[i] += rhs.data_[i];
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : data_)
            m = std::max(m, std::abs(x));
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(double s, const Matrix& m) { return m * s; }

// Gauss-Jordan inverse with partial pivoting. Throws std::runtime_error on
// an exactly unusable pivot; near-singularity policy belongs to callers.
inline Matrix invert(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("invert: matrix must be square");
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col)))
                pivot = r;
        if (work(pivot, col) == 0.0)
            throw std::runtime_error("invert: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(work(pivot, j), work(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const double d = work(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            work(col, j) /= d;
            inv(col, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = work(r, col);
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j < n; ++j) {
                work(r, j) -= f * work(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

// Solve a*x = b for square a (Gaussian elimination, partial pivoting).
inline std::vector<double> solve(const Matrix& a, std::vector<double> b) {
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw std::invalid_argument("solve: dimension mismatch");
    const std::size_t n = a.rows();
    Matrix work = a;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col)))
                pivot = r;
        if (work(pivot, col) == 0.0)
            throw std::runtime_error("solve: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(work(pivot, j), work(col, j));
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = work(r, col) / work(col, col);
            if (f == 0.0)
                continue;
            for (std::size_t j = col; j < n; ++j)
                work(r, j) -= f * work(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j)
            s -= work(i, j) * x[j];
        x[i] = s / work(i, i);
    }
    return x;
}

// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
// returned in descending order.
inline std::vector<double> symmetric_eigenvalues(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
    const std::size_t n = a.rows();
    Matrix w = a;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += w(i, j) * w(i, j);
        if (off <= std::numeric_limits<double>::min())
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (apq == 0.0)
                    continue;
                const double app = w(p, p);
                const double aqq = w(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p);
                    const double wkq = w(k, q);
                    w(k, p) = c * wkp - s * wkq;
                    w(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = w(p, k);
                    const double wqk = w(q, k);
                    w(p, k) = c * wpk - s * wqk;
                    w(q, k) = s * wpk + c * wqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i)
        eig[i] = w(i, i);
    std::sort(eig.begin(), eig.end(), std::greater<double>());
    return eig;
}

// Singular values (descending) as square roots of the eigenvalues of A^T A.
inline std::vector<double> singular_values(const Matrix& a) {
    const Matrix gram = a.transpose() * a;
    std::vector<double> eig = symmetric_eigenvalues(gram);
    for (double& x : eig)
        x = std::sqrt(std::max(x, 0.0));
    return eig;
}

// ---------------------------------------------------------------------------
// Exact integer routines for count matrices. Counts are small integers, so
// singularity and rank are decided exactly rather than through a floating
// threshold. Intermediates use __int128 (fraction-free elimination keeps
// them integral); desk-scale counts stay far below the overflow guard.
// ---------------------------------------------------------------------------

using int128 = __int128;

inline void check_int128_magnitude(int128 x) {
    const int128 limit = static_cast<int128>(1) << 120;
    if (x > limit || x < -limit)
        throw std::overflow_error("integer elimination: entries too large for exact arithmetic");
}

// Multiplication operands are capped at 2^62 so a product of two plus a
// subtraction stays inside __int128 with no wraparound; intermediates that
// large only arise from astronomically scaled inputs.
inline void check_product_operand(int128 x) {
    const int128 limit = static_cast<int128>(1) << 62;
    if (x > limit || x < -limit)
        throw std::overflow_error("integer elimination: entries too large for exact arithmetic");
}

// Exact determinant of a square integer matrix (Bareiss fraction-free
// elimination; every division is exact).
inline std::int64_t integer_determinant(const std::vector<std::vector<std::int64_t>>& m) {
    const std::size_t n = m.size();
    for (const auto& row : m)
        if (row.size() != n)
            throw std::invalid_argument("integer_determinant: matrix must be square");
    if (n == 0)
        throw std::invalid_argument("integer_determinant: empty matrix");
    std::vector<std::vector<int128>> w(n, std::vector<int128>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            w[i][j] = m[i][j];
    int sign = 1;
    int128 prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (w[k][k] == 0) {
            std::size_t swap_row = k;
            for (std::size_t r = k + 1; r < n; ++r)
                if (w[r][k] != 0) {
                    swap_row = r;
                    break;
                }
            if (swap_row == k)
                return 0; // whole pivot column is zero
            std::swap(w[k], w[swap_row]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            check_product_operand(w[i][k]);
            for (std::size_t j = k + 1; j < n; ++j) {
                check_product_operand(w[i][j]);
                check_product_operand(w[k][k]);
                check_product_operand(w[k][j]);
                int128 num = w[i][j] * w[k][k] - w[i][k] * w[k][j];
                check_int128_magnitude(num);
                w[i][j] = num / prev;
            }
            w[i][k] = 0;
        }
        prev = w[k][k];
    }
    int128 det = sign * w[n - 1][n - 1];
    if (det > std::numeric_limits<std::int64_t>::max() ||
        det < std::numeric_limits<std::int64_t>::min())
        throw std::overflow_error("integer_determinant: value exceeds 64 bits");
    return static_cast<std::int64_t>(det);
}

// Exact rank of an integer matrix via fraction-free row reduction.
inline std::size_t integer_rank(const std::vector<std::vector<std::int64_t>>& m) {
    if (m.empty())
        throw std::invalid_argument("integer_rank: empty matrix");
    const std::size_t rows = m.size();
    const std::size_t cols = m.front().size();
    std::vector<std::vector<int128>> w(rows, std::vector<int128>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (m[i].size() != cols)
            throw std::invalid_argument("integer_rank: ragged matrix");
        for (std::size_t j = 0; j < cols; ++j)
            w[i][j] = m[i][j];
    }
    std::size_t rank = 0;
    int128 prev = 1;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        while (pivot < rows && w[pivot][col] == 0)
            ++pivot;
        if (pivot == rows)
            continue;
        std::swap(w[rank], w[pivot]);
        for (std::size_t i = rank + 1; i < rows; ++i) {
            check_product_operand(w[i][col]);
            for (std::size_t j = col + 1; j < cols; ++j) {
                check_product_operand(w[i][j]);
                check_product_operand(w[rank][col]);
                check_product_operand(w[rank][j]);
                int128 num = w[i][j] * w[rank][col] - w[i][col] * w[rank][j];
                check_int128_magnitude(num);
                w[i][j] = num / prev;
            }
            w[i][col] = 0;
        }
        prev = w[rank][col];
        ++rank;
    }
    return rank;
}

} // namespace aggstat

#endif // AGGSTAT_LINALG_HPP
