#ifndef MCENET_SIMPLEX_HPP
#define MCENET_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mcenet {

/// Phase-one simplex: finds x >= 0 with A x = b, or reports infeasibility. Dense tableau with
/// Bland's rule, so it terminates on degenerate problems. Rows are equilibrated, pivots below
/// a relative threshold are skipped, and the tableau is rebuilt from the original data for
/// the current basis every few pivots and before any verdict. Intended for the small systems
/// produced by per-clique constraint encodings.
inline std::optional<Eigen::VectorXd> find_nonnegative_solution(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                                double tol = 1e-9) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    if (m == 0) return Eigen::VectorXd::Zero(n);

    // [A | I | b] with rows scaled to unit max norm and b >= 0
    Eigen::MatrixXd base = Eigen::MatrixXd::Zero(m, n + m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        double scale = std::max(a.row(i).cwiseAbs().maxCoeff(), std::abs(b(i)));
        if (scale == 0.0) scale = 1.0;
        double sign = b(i) < 0.0 ? -1.0 : 1.0;
        base.row(i).head(n) = sign / scale * a.row(i);
        base(i, n + i) = 1.0;
        base(i, n + m) = sign / scale * b(i);
    }
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    Eigen::MatrixXd t(m + 1, n + m + 1);
    // Tableau for the current basis, recomputed from `base`; the objective row minimizes the
    // sum of artificials.
    auto rebuild = [&]() {
        Eigen::MatrixXd bm(m, m);
        for (Eigen::Index i = 0; i < m; ++i) bm.col(i) = base.col(basis[static_cast<std::size_t>(i)]);
        t.topRows(m) = bm.fullPivLu().solve(base);
        Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(n + m + 1);
        cost.segment(n, m).setOnes();
        Eigen::RowVectorXd cb(m);
        for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
        t.row(m) = cost - cb * t.topRows(m);
        t(m, n + m) = -(cb * t.topRows(m).col(n + m))(0);
    };
    rebuild();

    const double cost_eps = 1e-11;
    const double pivot_eps = 1e-9;
    const int refresh_every = 25;
    std::vector<bool> skip(static_cast<std::size_t>(n + m), false);  // columns with no usable pivot
    auto entering = [&]() -> Eigen::Index {
        for (Eigen::Index j = 0; j < n + m; ++j) {
            if (!skip[static_cast<std::size_t>(j)] && t(m, j) < -cost_eps) return j;
        }
        return -1;
    };
    for (int iter = 0; iter < 50000; ++iter) {
        if (iter > 0 && iter % refresh_every == 0) rebuild();
        Eigen::Index enter = entering();
        if (enter < 0) {
            rebuild();
            enter = entering();
            if (enter < 0) break;
        }
        const double col_max = t.col(enter).head(m).cwiseAbs().maxCoeff();
        Eigen::Index leave = -1;
        double best_ratio = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (t(i, enter) > pivot_eps * std::max(1.0, col_max)) {
                double ratio = std::max(0.0, t(i, n + m)) / t(i, enter);
                if (leave < 0 || ratio < best_ratio - 1e-12 ||
                    (ratio <= best_ratio + 1e-12 &&
                     basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) {
            skip[static_cast<std::size_t>(enter)] = true;
            continue;
        }
        t.row(leave) /= t(leave, enter);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
        std::fill(skip.begin(), skip.end(), false);
    }

    if (-t(m, n + m) > tol) return std::nullopt;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        auto col = basis[static_cast<std::size_t>(i)];
        if (col < n) x(col) = std::max(0.0, t(i, n + m));
    }
    if ((a * x - b).cwiseAbs().maxCoeff() > std::sqrt(tol)) return std::nullopt;
    return x;
}

}  // namespace mcenet

#endif  // MCENET_SIMPLEX_HPP
