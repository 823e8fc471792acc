#pragma once

// Small dense linear-algebra helpers used across the library.  Dimensions in
// this project stay modest (a few hundred at most), so plain row-major
// storage and textbook algorithms are the right tool; no BLAS dependency.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pcdyn {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Determinant via LU with partial pivoting; the input is copied.
inline double determinant(Matrix a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("determinant: matrix must be square");
    const std::size_t n = a.rows();
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(a(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best == 0.0) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

// Eigenvalues of a symmetric tridiagonal matrix together with the first
// component of each (normalized) eigenvector, which is all Golub-Welsch
// quadrature needs.  Implicit-shift QL; "offdiag" holds the n-1
// subdiagonal entries.  Results are sorted by ascending eigenvalue.
inline void symmetric_tridiagonal_eigen(std::vector<double> diag,
                                        std::vector<double> offdiag,
                                        std::vector<double>& eigenvalues,
                                        std::vector<double>& first_components) {
    const std::size_t n = diag.size();
    if (n == 0) throw std::invalid_argument("tridiagonal eigen: empty matrix");
    if (offdiag.size() + 1 != n) throw std::invalid_argument("tridiagonal eigen: bad offdiagonal length");

    // w tracks e_0^T * (product of applied rotations): eigenvector first rows.
    std::vector<double> w(n, 0.0);
    w[0] = 1.0;
    std::vector<double> e(offdiag);
    e.push_back(0.0);

    for (std::size_t l = 0; l < n; ++l) {
        int iterations = 0;
        while (true) {
            std::size_t m = l;
            for (; m + 1 < n; ++m) {
                const double dd = std::fabs(diag[m]) + std::fabs(diag[m + 1]);
                if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m == l) break;
            if (++iterations > 50) throw std::runtime_error("tridiagonal eigen: QL failed to converge");

            double g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = diag[m] - diag[l] + e[l] / (g + (g >= 0 ? std::fabs(r) : -std::fabs(r)));
            double s = 1.0, c = 1.0, p = 0.0;
            for (std::size_t i = m; i-- > l;) {
                double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                // Apply the rotation to the tracked first-row vector.
                f = w[i + 1];
                w[i + 1] = s * w[i] + c * f;
                w[i] = c * w[i] - s * f;
            }
            if (r == 0.0 && m - l > 1) continue;
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i)  // insertion sort keeps this dependency-free
        for (std::size_t j = i + 1; j > 0 && diag[idx[j - 1]] > diag[idx[j]]; --j)
            std::swap(idx[j - 1], idx[j]);

    eigenvalues.resize(n);
    first_components.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        eigenvalues[i] = diag[idx[i]];
        first_components[i] = w[idx[i]];
    }
}

// Slope of the least-squares line through (x_i, y_i).
inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares_slope: need two equal-length series");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: degenerate abscissa");
    return sxy / sxx;
}

}  // namespace pcdyn
