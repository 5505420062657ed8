#ifndef RELAB_LINALG_HPP
#define RELAB_LINALG_HPP

#include <vector>

#include <Eigen/Dense>

#include "relab/common.hpp"

namespace relab::linalg {

/// Assemble equal-length vectors as the columns of a dense matrix.
inline Eigen::MatrixXd column_matrix(const std::vector<Vec>& cols) {
    if (cols.empty()) return Eigen::MatrixXd(0, 0);
    const std::size_t rows = cols.front().size();
    Eigen::MatrixXd a(rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j].size() != rows) throw DimensionMismatch("column_matrix: ragged columns");
        for (std::size_t i = 0; i < rows; ++i) a(i, j) = cols[j][i];
    }
    return a;
}

/// Number of singular values at or above `sv_tol`.
inline std::size_t rank_of_columns(const std::vector<Vec>& cols, double sv_tol) {
    if (cols.empty()) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(column_matrix(cols));
    const auto& sv = svd.singularValues();
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) >= sv_tol) ++r;
    return r;
}

inline bool columns_dependent(const std::vector<Vec>& cols, double sv_tol) {
    return !cols.empty() && rank_of_columns(cols, sv_tol) < cols.size();
}

/// Unit coefficient vector alpha minimizing |A alpha| (right singular vector of
/// the smallest singular value; spans the null space for a minimal dependent set).
inline Vec null_coefficients(const std::vector<Vec>& cols) {
    if (cols.empty()) throw InvalidArgument("null_coefficients: no columns");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(column_matrix(cols), Eigen::ComputeFullV);
    const Eigen::MatrixXd& v = svd.matrixV();
    Vec alpha(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        alpha[j] = v(static_cast<Eigen::Index>(j), v.cols() - 1);
    return alpha;
}

} // namespace relab::linalg

#endif // RELAB_LINALG_HPP
