#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netspice/netmodel.hpp"

namespace netspice {

enum class LambdaScale {
    InvSqrtN,  // lambda_m = ||a_m|| / sqrt(N)
    Unit       // lambda_m = ||a_m||
};

struct SolverConfig {
    std::size_t max_iterations = 1000;
    double rel_tol = 1e-8;
    double kkt_tol = 1e-6;
    double power_floor = 1e-12;
    LambdaScale lambda_scale = LambdaScale::InvSqrtN;
    double noise_weight = 1.0;  // v0, weight of sigma2 in the covariance-matching constraint
    bool record_trace = false;

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
        if (!(rel_tol > 0.0)) throw std::invalid_argument("SolverConfig: rel_tol must be positive");
        if (!(kkt_tol > 0.0)) throw std::invalid_argument("SolverConfig: kkt_tol must be positive");
        if (!(power_floor >= 0.0)) throw std::invalid_argument("SolverConfig: power_floor must be nonnegative");
        if (!(noise_weight > 0.0)) throw std::invalid_argument("SolverConfig: noise_weight must be positive");
    }
};

// min ||y - A theta||_2 + sum_m lambda_m |theta_m|
struct SqrtLassoProblem {
    Matrix A;
    Vector y;
    Vector lambda;

    std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
    std::size_t columns() const { return static_cast<std::size_t>(A.cols()); }
};

// Column weights v_m used by the covariance-matching update.
inline Vector spice_weights(const Matrix& A, LambdaScale scale = LambdaScale::InvSqrtN) {
    Vector v = A.colwise().norm().transpose();
    if (scale == LambdaScale::InvSqrtN) v /= std::sqrt(static_cast<double>(A.rows()));
    return v;
}

inline SqrtLassoProblem make_sqrt_lasso(const Matrix& A, const Vector& y,
                                        const SolverConfig& config = {}) {
    if (A.rows() != y.size()) {
        throw std::invalid_argument("make_sqrt_lasso: A has " + std::to_string(A.rows()) +
                                    " rows but y has length " + std::to_string(y.size()));
    }
    return {A, y, spice_weights(A, config.lambda_scale) / config.noise_weight};
}

inline SqrtLassoProblem make_sqrt_lasso(const RegressionProblem& problem,
                                        const SolverConfig& config = {}) {
    return make_sqrt_lasso(problem.A, problem.y, config);
}

inline double sqrt_lasso_objective(const SqrtLassoProblem& problem, const Vector& theta) {
    return (problem.y - problem.A * theta).norm() + problem.lambda.dot(theta.cwiseAbs());
}

// ---------------------------------------------------------------------------
// Optimality check

struct KktReport {
    double residual = 0.0;
    bool interpolating = false;  // ||y - A theta|| == 0, subgradient of the norm is the unit ball
    bool defined = true;         // false when no certificate could be exhibited at an interpolating point
};

namespace detail {

inline bool is_interpolating(const Vector& r, const Vector& y) {
    const double scale = std::max(y.norm(), std::numeric_limits<double>::min());
    return r.norm() <= 1e-12 * scale;
}

inline std::vector<Eigen::Index> support_of(const Vector& theta) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index m = 0; m < theta.size(); ++m)
        if (theta(m) != 0.0) s.push_back(m);
    return s;
}

inline Matrix gather_columns(const Matrix& A, const std::vector<Eigen::Index>& cols) {
    Matrix out(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    return out;
}

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

inline KktReport kkt_report(const SqrtLassoProblem& problem, const Vector& theta) {
    const Matrix& A = problem.A;
    const Vector r = problem.y - A * theta;
    KktReport report;

    if (!detail::is_interpolating(r, problem.y)) {
        const Vector corr = A.transpose() * r / r.norm();
        for (Eigen::Index m = 0; m < theta.size(); ++m) {
            const double lam = problem.lambda(m);
            const double violation = theta(m) != 0.0
                                         ? std::abs(corr(m) - lam * detail::sign(theta(m)))
                                         : std::max(0.0, std::abs(corr(m)) - lam);
            report.residual = std::max(report.residual, violation);
        }
        return report;
    }

    // Exact fit: need u with ||u|| <= 1, a_m'u = lambda_m sign(theta_m) on the support and
    // |a_m'u| <= lambda_m elsewhere. Try the minimum-norm u satisfying the equalities; it is
    // the only candidate when the support columns span R^N.
    report.interpolating = true;
    const auto support = detail::support_of(theta);
    Vector u = Vector::Zero(A.rows());
    double eq_violation = 0.0;
    if (!support.empty()) {
        const Matrix As = detail::gather_columns(A, support);
        Vector target(static_cast<Eigen::Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k)
            target(static_cast<Eigen::Index>(k)) = problem.lambda(support[k]) * detail::sign(theta(support[k]));
        u = As.transpose().completeOrthogonalDecomposition().solve(target);
        eq_violation = (As.transpose() * u - target).cwiseAbs().maxCoeff();
    }
    double violation = std::max(eq_violation, std::max(0.0, u.norm() - 1.0));
    const Vector corr = A.transpose() * u;
    for (Eigen::Index m = 0; m < theta.size(); ++m)
        if (theta(m) == 0.0) violation = std::max(violation, std::abs(corr(m)) - problem.lambda(m));
    report.residual = std::max(0.0, violation);
    const bool unique_certificate = static_cast<Eigen::Index>(support.size()) >= A.rows();
    report.defined = report.residual <= 1e-9 || unique_certificate;
    return report;
}

inline double kkt_residual(const SqrtLassoProblem& problem, const Vector& theta) {
    const KktReport report = kkt_report(problem, theta);
    if (!report.defined) {
        throw std::domain_error("kkt_residual: interpolation - KKT undefined");
    }
    return report.residual;
}

// ---------------------------------------------------------------------------
// Covariance-matching iteration

struct SpicePowers {
    Vector p;
    double sigma2 = 0.0;
};

// R = A diag(p) A' + sigma2 I. Returns R^{-1} y.
inline Vector spice_apply_inverse(const Matrix& A, const Vector& y, const Vector& p, double sigma2) {
    Matrix R = A * p.asDiagonal() * A.transpose();
    R.diagonal().array() += sigma2;
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("spice_sweep: covariance matrix is singular");
    }
    return llt.solve(y);
}

// SPICE criterion y'R^{-1}y * (sum v_m^2 p_m + v0^2 sigma2); invariant to a common scaling of
// (p, sigma2) and non-increasing under spice_sweep.
inline double spice_objective(const Matrix& A, const Vector& y, const Vector& v, double v0,
                              const SpicePowers& powers) {
    const Vector x = spice_apply_inverse(A, y, powers.p, powers.sigma2);
    return y.dot(x) * (v.cwiseAbs2().dot(powers.p) + v0 * v0 * powers.sigma2);
}

namespace detail {

inline SpicePowers sweep_from_inverse(const Vector& corr, double noise_corr, const Vector& v, double v0,
                                      const SpicePowers& in) {
    const Vector c = corr.cwiseAbs();
    const double rho = (v.array() * in.p.array() * c.array()).sum() + v0 * in.sigma2 * noise_corr;
    SpicePowers out{Vector::Zero(in.p.size()), 0.0};
    if (!(rho > 0.0)) return out;
    for (Eigen::Index m = 0; m < in.p.size(); ++m)
        if (v(m) > 0.0) out.p(m) = in.p(m) * c(m) / (v(m) * rho);
    out.sigma2 = in.sigma2 * noise_corr / (v0 * rho);
    return out;
}

}  // namespace detail

// One multiplicative covariance-matching update. The output is normalized so that
// sum v_m^2 p_m + v0^2 sigma2 = 1.
inline SpicePowers spice_sweep(const SpicePowers& powers, const Matrix& A, const Vector& y,
                               const Vector& v, double v0 = 1.0) {
    if ((powers.p.array() < 0.0).any() || powers.sigma2 < 0.0) {
        throw std::invalid_argument("spice_sweep: powers must be nonnegative");
    }
    if (powers.sigma2 == 0.0 && (powers.p.array() == 0.0).all()) {
        throw std::invalid_argument("spice_sweep: all powers are zero");
    }
    const Vector x = spice_apply_inverse(A, y, powers.p, powers.sigma2);
    return detail::sweep_from_inverse(A.transpose() * x, x.norm(), v, v0, powers);
}

inline SpicePowers spice_sweep(const SpicePowers& powers, const RegressionProblem& problem,
                               const SolverConfig& config = {}) {
    return spice_sweep(powers, problem.A, problem.y, spice_weights(problem.A, config.lambda_scale),
                       config.noise_weight);
}

namespace detail {

// Sweep engine for repeated updates on one problem. Factorizes in whichever of the
// N x N or M x M spaces is smaller; the M x M route uses
//   R^{-1} y = (y - A P^{1/2} (sigma2 I + P^{1/2} A'A P^{1/2})^{-1} P^{1/2} A'y) / sigma2.
class SpiceEngine {
public:
    SpiceEngine(const Matrix& A, const Vector& y) : A_(A), y_(y) {
        use_gram_ = A.cols() < A.rows();
        if (use_gram_) {
            gram_ = A.transpose() * A;
            aty_ = A.transpose() * y;
        }
    }

    // Returns (A'R^{-1}y, R^{-1}y).
    std::pair<Vector, Vector> inverse(const SpicePowers& s) const {
        if (use_gram_ && s.sigma2 > 0.0) {
            const Vector root = s.p.cwiseSqrt();
            Matrix S = root.asDiagonal() * gram_ * root.asDiagonal();
            S.diagonal().array() += s.sigma2;
            Eigen::LLT<Matrix> llt(S);
            if (llt.info() == Eigen::Success) {
                const Vector z = root.asDiagonal() * llt.solve(root.asDiagonal() * aty_);
                Vector x = (y_ - A_ * z) / s.sigma2;
                Vector corr = (aty_ - gram_ * z) / s.sigma2;
                return {std::move(corr), std::move(x)};
            }
        }
        Vector x = spice_apply_inverse(A_, y_, s.p, s.sigma2);
        Vector corr = A_.transpose() * x;
        return {std::move(corr), std::move(x)};
    }

private:
    const Matrix& A_;
    const Vector& y_;
    bool use_gram_ = false;
    Matrix gram_;
    Vector aty_;
};

inline void normalize_powers(SpicePowers& s, const Vector& v, double v0) {
    const double total = v.cwiseAbs2().dot(s.p) + v0 * v0 * s.sigma2;
    if (total > 0.0) {
        s.p /= total;
        s.sigma2 /= total;
    }
}

// Exact square-root LASSO minimizer restricted to a support with fixed signs.
//
// With G = As'As, theta_ls = G^{-1}As'y, b = G^{-1}(lambda_S o s), d = As b, the stationarity
// condition As'r = ||r|| lambda_S o s gives r = r_ls + t d with t = ||r|| and, since r_ls is
// orthogonal to d, t = ||r_ls|| / sqrt(1 - ||d||^2).
struct RestrictedSolution {
    Vector theta;
    bool ok = false;
    bool sign_consistent = false;
};

inline RestrictedSolution solve_on_support(const SqrtLassoProblem& problem,
                                           const std::vector<Eigen::Index>& support,
                                           const std::vector<double>& signs) {
    RestrictedSolution out;
    const Eigen::Index M = problem.A.cols();
    out.theta = Vector::Zero(M);
    if (support.empty()) {
        out.ok = out.sign_consistent = true;
        return out;
    }
    if (static_cast<Eigen::Index>(support.size()) > problem.A.rows()) return out;

    const Matrix As = gather_columns(problem.A, support);
    const Matrix G = As.transpose() * As;
    Eigen::LDLT<Matrix> ldlt(G);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13) return out;

    Vector weighted_signs(static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
        weighted_signs(static_cast<Eigen::Index>(k)) = problem.lambda(support[k]) * signs[k];

    const Vector theta_ls = ldlt.solve(As.transpose() * problem.y);
    const Vector r_ls = problem.y - As * theta_ls;
    const Vector b = ldlt.solve(weighted_signs);
    const double d2 = (As * b).squaredNorm();

    double t = 0.0;
    if (d2 < 1.0) {
        t = r_ls.norm() / std::sqrt(1.0 - d2);
    } else if (!is_interpolating(r_ls, problem.y) || d2 > 1.0 + 1e-10) {
        return out;
    }
    const Vector theta_s = theta_ls - t * b;
    out.ok = true;
    out.sign_consistent = true;
    for (std::size_t k = 0; k < support.size(); ++k) {
        const double value = theta_s(static_cast<Eigen::Index>(k));
        out.theta(support[k]) = value;
        if (sign(value) != signs[k]) out.sign_consistent = false;
    }
    return out;
}

inline RestrictedSolution solve_on_support(const SqrtLassoProblem& problem, const Vector& theta) {
    const auto support = support_of(theta);
    std::vector<double> signs;
    for (auto m : support) signs.push_back(sign(theta(m)));
    return solve_on_support(problem, support, signs);
}

// One cyclic pass of exact coordinate minimization; r is kept equal to y - A theta.
inline void coordinate_pass(const SqrtLassoProblem& problem, const Vector& col_sq, Vector& theta, Vector& r) {
    const Matrix& A = problem.A;
    for (Eigen::Index m = 0; m < A.cols(); ++m) {
        const double s = col_sq(m);
        if (s == 0.0) continue;
        const double lam = problem.lambda(m);
        if (theta(m) != 0.0) r.noalias() += A.col(m) * theta(m);
        const double rho = A.col(m).dot(r);
        const double nr2 = r.squaredNorm();
        double next = 0.0;
        if (rho * rho > lam * lam * nr2 && s > lam * lam * (1.0 + 1e-12)) {
            const double q2 = std::max(0.0, nr2 - rho * rho / s);
            next = rho / s - sign(rho) * lam * std::sqrt(q2 / (s * (s - lam * lam)));
        }
        theta(m) = next;
        if (next != 0.0) r.noalias() -= A.col(m) * next;
    }
}

// Exact minimizer by walking the weighted LASSO path
//   min 1/2 ||y - A theta||^2 + mu sum lambda_m |theta_m|
// downward from mu_max. The square-root LASSO solution is the path point where ||r(mu)|| = mu;
// on a path segment r(mu) = r_ls + mu d, so the crossing solves mu^2 (1 - ||d||^2) = ||r_ls||^2.
inline std::optional<Vector> sqrt_lasso_homotopy(const SqrtLassoProblem& problem) {
    const Matrix& A = problem.A;
    const Vector& y = problem.y;
    const Vector& lambda = problem.lambda;
    const Eigen::Index M = A.cols();
    const Vector aty = A.transpose() * y;

    double mu = 0.0;
    Eigen::Index first = -1;
    for (Eigen::Index m = 0; m < M; ++m) {
        if (lambda(m) > 0.0 && std::abs(aty(m)) / lambda(m) > mu) {
            mu = std::abs(aty(m)) / lambda(m);
            first = m;
        }
    }
    if (first < 0 || y.norm() >= mu) return Vector::Zero(M);

    std::vector<Eigen::Index> support{first};
    std::vector<double> signs{sign(aty(first))};
    std::vector<bool> active(static_cast<std::size_t>(M), false);
    active[static_cast<std::size_t>(first)] = true;
    Eigen::Index changed = first;  // column whose status flipped at the current breakpoint

    for (Eigen::Index step = 0; step < 10 * M + 10; ++step) {
        const Matrix As = gather_columns(A, support);
        const Eigen::LDLT<Matrix> ldlt(As.transpose() * As);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-13) return std::nullopt;
        Vector weighted_signs(static_cast<Eigen::Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k)
            weighted_signs(static_cast<Eigen::Index>(k)) = lambda(support[k]) * signs[k];
        const Vector theta_ls = ldlt.solve(As.transpose() * y);
        const Vector b = ldlt.solve(weighted_signs);
        const Vector r_ls = y - As * theta_ls;
        const Vector d = As * b;

        // Next breakpoint below mu: a column joins or an active coefficient hits zero.
        const double ceiling = mu * (1.0 - 1e-12);
        double next = 0.0;
        Eigen::Index join = -1, drop = -1;
        double join_sign = 0.0;
        // With r_ls == 0 the inactive correlations are mu * a_m'd: no column can join.
        const bool spans = is_interpolating(r_ls, y);
        const Vector alpha = A.transpose() * r_ls;
        const Vector beta = A.transpose() * d;
        for (Eigen::Index m = 0; m < M; ++m) {
            if (spans || m == changed || active[static_cast<std::size_t>(m)] || lambda(m) == 0.0) continue;
            for (double side : {1.0, -1.0}) {
                const double denom = side * lambda(m) - beta(m);
                if (denom == 0.0) continue;
                const double at = alpha(m) / denom;
                if (at > next && at < ceiling) {
                    next = at;
                    join = m;
                    join_sign = side;
                    drop = -1;
                }
            }
        }
        for (std::size_t k = 0; k < support.size(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            if (b(kk) == 0.0 || support[k] == changed) continue;
            const double at = theta_ls(kk) / b(kk);
            if (at > next && at < ceiling) {
                next = at;
                drop = kk;
                join = -1;
            }
        }

        const double d2 = d.squaredNorm();
        if (d2 < 1.0) {
            const double t = r_ls.norm() / std::sqrt(1.0 - d2);
            if (t >= next * (1.0 - 1e-12) && t <= mu * (1.0 + 1e-9)) {
                Vector theta = Vector::Zero(M);
                const Vector theta_s = theta_ls - t * b;
                for (std::size_t k = 0; k < support.size(); ++k) theta(support[k]) = theta_s(static_cast<Eigen::Index>(k));
                return theta;
            }
        }
        if (join < 0 && drop < 0) return std::nullopt;
        if (join >= 0) {
            support.push_back(join);
            signs.push_back(join_sign);
            active[static_cast<std::size_t>(join)] = true;
            changed = join;
        } else {
            changed = support[static_cast<std::size_t>(drop)];
            active[static_cast<std::size_t>(changed)] = false;
            support.erase(support.begin() + drop);
            signs.erase(signs.begin() + drop);
        }
        mu = next;
    }
    return std::nullopt;
}

struct Candidate {
    Vector theta;
    KktReport kkt{std::numeric_limits<double>::infinity(), false, false};

    bool better_than(const Candidate& other) const {
        if (kkt.defined != other.kkt.defined) return kkt.defined;
        return kkt.residual < other.kkt.residual;
    }
};

// Drives a SPICE iterate to an exact, certified minimizer. Candidate supports come from the
// relative SPICE powers; an active-set correction handles sign flips and missing columns.
// The LASSO homotopy and then exact coordinate descent are the fallbacks.
inline Candidate polish(const SqrtLassoProblem& problem, const Vector& theta_start, const Vector& share,
                        double kkt_tol, std::size_t max_passes) {
    Candidate best;
    auto consider = [&](const Vector& theta) {
        Candidate c{theta, kkt_report(problem, theta)};
        if (c.better_than(best)) best = std::move(c);
        return best.kkt.defined && best.kkt.residual <= kkt_tol;
    };
    auto try_support = [&](std::vector<Eigen::Index> support, std::vector<double> signs) {
        // Active-set refinement: drop sign-inconsistent entries, add the worst violator.
        for (std::size_t step = 0; step < 4 * static_cast<std::size_t>(problem.A.cols()) + 4; ++step) {
            const RestrictedSolution sol = solve_on_support(problem, support, signs);
            if (!sol.ok) return false;
            if (!sol.sign_consistent) {
                std::vector<Eigen::Index> kept;
                std::vector<double> kept_signs;
                for (std::size_t k = 0; k < support.size(); ++k) {
                    if (sign(sol.theta(support[k])) == signs[k]) {
                        kept.push_back(support[k]);
                        kept_signs.push_back(signs[k]);
                    }
                }
                support = std::move(kept);
                signs = std::move(kept_signs);
                continue;
            }
            if (consider(sol.theta)) return true;
            const Vector r = problem.y - problem.A * sol.theta;
            if (is_interpolating(r, problem.y)) return false;
            const Vector corr = problem.A.transpose() * r / r.norm();
            Eigen::Index worst = -1;
            double worst_excess = kkt_tol;
            for (Eigen::Index m = 0; m < corr.size(); ++m) {
                const double excess = std::abs(corr(m)) - problem.lambda(m);
                if (sol.theta(m) == 0.0 && excess > worst_excess) {
                    worst_excess = excess;
                    worst = m;
                }
            }
            if (worst < 0) return false;
            support.push_back(worst);
            signs.push_back(sign(corr(worst)));
        }
        return false;
    };

    consider(theta_start);
    if (best.kkt.defined && best.kkt.residual <= kkt_tol) return best;

    const double top = share.size() ? share.maxCoeff() : 0.0;
    std::vector<std::vector<Eigen::Index>> tried;
    for (double level = 1e-1; level >= 1e-12; level *= 0.1) {
        std::vector<Eigen::Index> support;
        std::vector<double> signs;
        for (Eigen::Index m = 0; m < share.size(); ++m) {
            if (share(m) > level * top && theta_start(m) != 0.0) {
                support.push_back(m);
                signs.push_back(sign(theta_start(m)));
            }
        }
        if (std::find(tried.begin(), tried.end(), support) != tried.end()) continue;
        tried.push_back(support);
        if (try_support(support, signs)) return best;
    }

    if (const auto exact = sqrt_lasso_homotopy(problem)) {
        if (consider(*exact)) return best;
    }

    // Coordinate descent from the best point so far, with periodic exact restarts.
    Vector theta = best.theta;
    Vector r = problem.y - problem.A * theta;
    const Vector col_sq = problem.A.colwise().squaredNorm().transpose();
    for (std::size_t pass = 1; pass <= max_passes; ++pass) {
        coordinate_pass(problem, col_sq, theta, r);
        if (pass % 20 == 0 || pass == max_passes) {
            r = problem.y - problem.A * theta;
            if (consider(theta)) return best;
            const auto support = support_of(theta);
            std::vector<double> signs;
            for (auto m : support) signs.push_back(sign(theta(m)));
            if (try_support(support, signs)) return best;
        }
    }
    return best;
}

}  // namespace detail

// Hyperparameter-free sparse estimate for one regression problem.
//
// Runs the covariance-matching iteration from a matched-filter start, then finishes on the
// identified support so that theta is a certified minimizer of
//   ||y - A theta|| + sum_m lambda_m |theta_m|,  lambda_m = v_m / v0.
// The returned (p, sigma2) is the fixed point consistent with theta, normalized so that
// sum v_m^2 p_m + v0^2 sigma2 = 1, and theta = diag(p) A' R^{-1} y.
inline NodeEstimate solve_sqrt_lasso(const Matrix& A, const Vector& y, const SolverConfig& config = {}) {
    config.validate();
    if (A.rows() != y.size()) throw std::invalid_argument("solve_node: A and y disagree in row count");
    if (A.rows() < 1) throw std::invalid_argument("solve_node: need at least one row");
    if (!y.allFinite() || !A.allFinite()) throw std::invalid_argument("solve_node: non-finite input");

    const Eigen::Index M = A.cols();
    const Vector v = spice_weights(A, config.lambda_scale);
    if ((v.array() == 0.0).all()) throw std::invalid_argument("solve_node: regressor matrix is all zero");
    const double v0 = config.noise_weight;
    const SqrtLassoProblem problem{A, y, v / v0};

    NodeEstimate est;
    est.theta = Vector::Zero(M);
    est.p = Vector::Zero(M);
    if ((y.array() == 0.0).all()) return est;

    // Matched-filter start.
    SpicePowers s{Vector::Zero(M), 0.0};
    const Vector aty = A.transpose() * y;
    const Vector col_sq = A.colwise().squaredNorm().transpose();
    for (Eigen::Index m = 0; m < M; ++m)
        if (col_sq(m) > 0.0) s.p(m) = std::pow(aty(m) / col_sq(m), 2);
    const double n = static_cast<double>(y.size());
    const double var = (y.array() - y.mean()).square().sum() / n;
    s.sigma2 = 0.1 * (var > 0.0 ? var : y.squaredNorm() / n);
    detail::normalize_powers(s, v, v0);

    const detail::SpiceEngine engine(A, y);
    auto floor_powers = [&](SpicePowers& powers) {
        for (Eigen::Index m = 0; m < M; ++m)
            if (v(m) > 0.0) powers.p(m) = std::max(powers.p(m), config.power_floor);
        powers.sigma2 = std::max(powers.sigma2, config.power_floor);
    };
    floor_powers(s);

    Vector corr;
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
        auto [c, x] = engine.inverse(s);
        if (config.record_trace) {
            est.objective_trace.push_back(y.dot(x) * (v.cwiseAbs2().dot(s.p) + v0 * v0 * s.sigma2));
        }
        SpicePowers next = detail::sweep_from_inverse(c, x.norm(), v, v0, s);
        floor_powers(next);
        const double change = (next.p - s.p).lpNorm<1>() + std::abs(next.sigma2 - s.sigma2);
        const double size = s.p.lpNorm<1>() + s.sigma2;
        s = std::move(next);
        est.iterations = it + 1;
        if (change <= config.rel_tol * size) break;
    }
    corr = engine.inverse(s).first;
    const Vector theta_spice = s.p.cwiseProduct(corr);
    const Vector share = v.cwiseAbs2().cwiseProduct(s.p);

    const std::size_t passes = std::max<std::size_t>(200, 20 * config.max_iterations);
    detail::Candidate best = detail::polish(problem, theta_spice, share, config.kkt_tol, passes);

    est.theta = best.theta;
    est.kkt_residual = best.kkt.residual;
    est.interpolating = best.kkt.interpolating;
    est.converged = best.kkt.defined && best.kkt.residual <= config.kkt_tol;

    const double r_norm = (y - A * est.theta).norm();
    const double z = v.dot(est.theta.cwiseAbs()) + v0 * r_norm;
    if (z > 0.0) {
        for (Eigen::Index m = 0; m < M; ++m)
            est.p(m) = v(m) > 0.0 ? std::abs(est.theta(m)) / (v(m) * z) : 0.0;
        est.sigma2 = r_norm / (v0 * z);
    }
    return est;
}

inline NodeEstimate solve_node(const RegressionProblem& problem, const SolverConfig& config = {}) {
    return solve_sqrt_lasso(problem.A, problem.y, config);
}

}  // namespace netspice
