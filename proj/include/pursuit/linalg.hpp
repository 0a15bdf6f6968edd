#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "pursuit/errors.hpp"
#include "pursuit/index_set.hpp"

namespace pursuit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative cutoff deciding when a column submatrix counts as rank-deficient:
// smallest singular value below rank_tolerance * largest.
inline constexpr double rank_tolerance = 1e-12;

inline void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite())
        throw input_domain_error(std::string(what) + ": entries must be finite");
}

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite())
        throw input_domain_error(std::string(what) + ": entries must be finite");
}

// Columns of phi selected by the 1-based index set s, in ascending index order.
inline Matrix submatrix(const Matrix& phi, const IndexSet& s) {
    if (s.max_index() > phi.cols())
        throw input_domain_error("submatrix: index " + std::to_string(s.max_index()) +
                                 " exceeds column count " + std::to_string(phi.cols()));
    Matrix out(phi.rows(), s.size());
    for (int j = 0; j < s.size(); ++j)
        out.col(j) = phi.col(s[j] - 1);
    return out;
}

// Coefficients minimizing ||y - phi_s c||_2 over c, one entry per member of s
// in ascending index order. Empty s gives an empty vector. Solved through an
// SVD of phi_s rather than the normal equations: the same factorization
// provides the singular values for the rank check and keeps the conditioning
// of phi_s itself rather than its square.
inline Vector least_squares_on_support(const Matrix& phi, const Vector& y, const IndexSet& s) {
    if (y.size() != phi.rows())
        throw input_domain_error("least_squares_on_support: y has length " +
                                 std::to_string(y.size()) + ", expected " +
                                 std::to_string(phi.rows()));
    if (s.empty())
        return Vector(0);
    if (s.size() > phi.rows())
        throw degenerate_system_error("least_squares_on_support: " + std::to_string(s.size()) +
                                      " columns exceed " + std::to_string(phi.rows()) +
                                      " rows, system underdetermined");
    Matrix phi_s = submatrix(phi, s);
    Eigen::JacobiSVD<Matrix> svd(phi_s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    if (sigma(sigma.size() - 1) < rank_tolerance * sigma(0))
        throw degenerate_system_error(
            "least_squares_on_support: rank-deficient submatrix on " + s.to_string() +
            " (sigma_min/sigma_max = " +
            std::to_string(sigma(sigma.size() - 1) / (sigma(0) > 0 ? sigma(0) : 1.0)) + ")");
    return svd.solve(y);
}

// u minus its orthogonal projection onto span(phi_s). Empty s returns u.
inline Vector project_orthogonal_complement(const Matrix& phi, const IndexSet& s, const Vector& u) {
    if (s.empty()) {
        if (u.size() != phi.rows())
            throw input_domain_error("project_orthogonal_complement: length mismatch");
        return u;
    }
    Vector c = least_squares_on_support(phi, u, s);
    return u - submatrix(phi, s) * c;
}

// Extreme eigenvalues (min, max) of a small symmetric matrix. Symmetry is
// checked entrywise at 1e-12 absolute; the dimension cap matches the
// subset-Gram sizes this library works at.
inline std::pair<double, double> symmetric_eigen_extremes(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw input_domain_error("symmetric_eigen_extremes: matrix must be square and nonempty");
    if (a.rows() > 64)
        throw input_domain_error("symmetric_eigen_extremes: dimension " +
                                 std::to_string(a.rows()) + " exceeds the supported cap of 64");
    if (((a - a.transpose()).array().abs() > 1e-12).any())
        throw input_domain_error("symmetric_eigen_extremes: matrix is not symmetric");
    if (a.rows() == 1)
        return {a(0, 0), a(0, 0)};
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

} // namespace pursuit
