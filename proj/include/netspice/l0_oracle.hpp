#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "netspice/netmodel.hpp"

namespace netspice {

// Exhaustive best-subset least squares: minimizes ||y - A theta||^2 over every support of
// size <= max_support. Ties keep the smaller (earlier enumerated) support.
inline Vector solve_l0_oracle(const Matrix& A, const Vector& y, std::size_t max_support) {
    const auto M = static_cast<std::size_t>(A.cols());
    constexpr std::size_t max_columns = 20;
    if (M > max_columns) {
        throw std::invalid_argument("solve_l0_oracle: " + std::to_string(M) +
                                    " columns is too many for enumeration (limit 20)");
    }
    if (max_support > M) throw std::invalid_argument("solve_l0_oracle: max_support exceeds column count");
    if (A.rows() != y.size()) throw std::invalid_argument("solve_l0_oracle: dimension mismatch");

    Vector best = Vector::Zero(static_cast<Eigen::Index>(M));
    double best_rss = y.squaredNorm();

    std::vector<Eigen::Index> cols;
    auto evaluate = [&]() {
        Matrix As(A.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) As.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
        const Vector coef = As.colPivHouseholderQr().solve(y);
        const double rss = (y - As * coef).squaredNorm();
        if (rss < best_rss * (1.0 - 1e-12)) {
            best_rss = rss;
            best.setZero();
            for (std::size_t k = 0; k < cols.size(); ++k) best(cols[k]) = coef(static_cast<Eigen::Index>(k));
        }
    };

    // Supports in order of increasing size, lexicographic within a size.
    for (std::size_t size = 1; size <= max_support; ++size) {
        cols.assign(size, 0);
        for (std::size_t k = 0; k < size; ++k) cols[k] = static_cast<Eigen::Index>(k);
        while (true) {
            evaluate();
            std::size_t k = size;
            while (k > 0 && cols[k - 1] == static_cast<Eigen::Index>(M - size + k - 1)) --k;
            if (k == 0) break;
            ++cols[k - 1];
            for (std::size_t l = k; l < size; ++l) cols[l] = cols[l - 1] + 1;
        }
    }
    return best;
}

inline Vector solve_l0_oracle(const RegressionProblem& problem, std::size_t max_support) {
    return solve_l0_oracle(problem.A, problem.y, max_support);
}

}  // namespace netspice
