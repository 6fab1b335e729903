#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "demandforge/error.hpp"

namespace demandforge::linalg {

struct RidgeSolution {
    std::vector<double> coefficients;
    double intercept = 0.0;
};

/// Minimizes ||y - X b - c||^2 + lambda ||b||^2 (c only when `fit_intercept`,
/// and never penalized). `x` is row-major rows x cols. Solved by Householder
/// QR on the augmented system [X 1; sqrt(lambda) I 0] so the normal
/// equations are never formed. Throws SingularSystem when the augmented
/// system is rank deficient.
inline RidgeSolution ridge_solve(std::span<const double> x, std::span<const double> y, std::size_t rows,
                                 std::size_t cols, double lambda, bool fit_intercept) {
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument, "ridge lambda must be >= 0");
    require(x.size() == rows * cols && y.size() == rows, ErrorKind::InvalidArgument, "ridge: shape mismatch");
    require(rows > 0, ErrorKind::InsufficientData, "ridge: no rows");
    const std::size_t p = cols + (fit_intercept ? 1 : 0);
    require(p > 0, ErrorKind::InvalidArgument, "ridge: no unknowns");
    const std::size_t penalty_rows = lambda > 0.0 ? cols : 0;
    const std::size_t m = rows + penalty_rows;

    // Column-major augmented matrix A (m x p) and right-hand side b.
    std::vector<double> a(m * p, 0.0);
    std::vector<double> b(m, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) a[c * m + r] = x[r * cols + c];
        if (fit_intercept) a[cols * m + r] = 1.0;
        b[r] = y[r];
    }
    const double root_lambda = std::sqrt(lambda);
    for (std::size_t c = 0; c < penalty_rows; ++c) a[c * m + rows + c] = root_lambda;

    std::vector<double> diag(p, 0.0);
    double col_scale = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm += a[j * m + i] * a[j * m + i];
        col_scale = std::max(col_scale, std::sqrt(norm));
    }

    for (std::size_t k = 0; k < p && k < m; ++k) {
        double* col = &a[k * m];
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) norm += col[i] * col[i];
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            diag[k] = 0.0;
            continue;
        }
        const double alpha = col[k] > 0 ? -norm : norm;
        col[k] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) vnorm2 += col[i] * col[i];
        for (std::size_t j = k + 1; j < p; ++j) {
            double* cj = &a[j * m];
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += col[i] * cj[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < m; ++i) cj[i] -= f * col[i];
        }
        double dot = 0.0;
        for (std::size_t i = k; i < m; ++i) dot += col[i] * b[i];
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = k; i < m; ++i) b[i] -= f * col[i];
        diag[k] = alpha;
    }

    const double tol = 1e-10 * std::max(col_scale, 1e-300);
    for (std::size_t k = 0; k < p; ++k) {
        require(k < m && std::abs(diag[k]) > tol, ErrorKind::SingularSystem,
                "least-squares system is rank deficient (column " + std::to_string(k) + ")");
    }

    std::vector<double> beta(p, 0.0);
    for (std::size_t k = p; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < p; ++j) s -= a[j * m + k] * beta[j];
        beta[k] = s / diag[k];
    }

    RidgeSolution out;
    out.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(cols));
    if (fit_intercept) out.intercept = beta[cols];
    return out;
}

}  // namespace demandforge::linalg
