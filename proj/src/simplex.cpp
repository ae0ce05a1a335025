#include "lcpd/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lcpd {

namespace {

// Dense tableau. Columns: [structural n | slack m | artificial k | rhs].
// Row m holds reduced costs, with -objective in the rhs column.
class Tableau {
public:
    Tableau(const Vector& c, const Matrix& a, const Vector& b) : m_(a.rows()), n_(a.cols()) {
        sign_.resize(m_);
        for (Index i = 0; i < m_; ++i) {
            sign_(i) = b(i) < 0.0 ? -1.0 : 1.0;
            if (b(i) < 0.0) ++k_;
        }
        rhs_col_ = n_ + m_ + k_;
        t_ = Matrix::Zero(m_ + 1, rhs_col_ + 1);
        basis_.resize(static_cast<std::size_t>(m_));
        identity_col_.resize(static_cast<std::size_t>(m_));
        Index art = 0;
        for (Index i = 0; i < m_; ++i) {
            t_.row(i).head(n_) = sign_(i) * a.row(i);
            t_(i, n_ + i) = sign_(i);  // slack (+1) or surplus (-1 after the flip)
            t_(i, rhs_col_) = sign_(i) * b(i);
            if (sign_(i) < 0.0) {
                const Index col = n_ + m_ + art++;
                t_(i, col) = 1.0;
                basis_[static_cast<std::size_t>(i)] = col;
            } else {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
            }
            identity_col_[static_cast<std::size_t>(i)] = basis_[static_cast<std::size_t>(i)];
        }
        cost_ = c;
    }

    // Phase-1 objective: sum of artificials, expressed in reduced form.
    void load_phase_one() {
        t_.row(m_).setZero();
        for (Index j = n_ + m_; j < rhs_col_; ++j) t_(m_, j) = 1.0;
        for (Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] >= n_ + m_) t_.row(m_) -= t_.row(i);
        }
    }

    void load_phase_two() {
        t_.row(m_).setZero();
        t_.row(m_).head(n_) = cost_.transpose();
        for (Index i = 0; i < m_; ++i) {
            const Index col = basis_[static_cast<std::size_t>(i)];
            const double cb = col < n_ ? cost_(col) : 0.0;
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    // Drive basic artificials at zero level out of the basis where possible.
    void evict_artificials(double tol) {
        for (Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_ + m_) continue;
            for (Index j = 0; j < n_ + m_; ++j) {
                if (std::abs(t_(i, j)) > tol) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

    // Returns iterations used. `allow_artificial` controls whether
    // artificial columns may enter.
    int optimize(const SimplexOptions& options, bool allow_artificial, int budget) {
        const Index last_col = allow_artificial ? rhs_col_ : n_ + m_;
        int iterations = 0;
        int degenerate_run = 0;
        while (true) {
            const bool bland = options.pricing == PricingRule::bland ||
                               degenerate_run >= options.degenerate_run_before_bland;
            Index enter = -1;
            double best = -options.optimality_tol;
            for (Index j = 0; j < last_col; ++j) {
                const double d = t_(m_, j);
                if (d < best) {
                    enter = j;
                    if (bland) break;
                    best = d;
                }
            }
            if (enter < 0) return iterations;
            if (iterations >= budget) throw SolverStall("simplex: iteration cap reached");

            Index leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < m_; ++i) {
                const double aij = t_(i, enter);
                if (aij <= options.pivot_tol) continue;
                const double ratio = std::max(t_(i, rhs_col_), 0.0) / aij;
                const bool better = ratio < best_ratio - 1e-14 ||
                                    (ratio <= best_ratio + 1e-14 && leave >= 0 &&
                                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]);
                if (leave < 0 || better) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) throw Unbounded("simplex: objective unbounded below");
            degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
            pivot(leave, enter);
            ++iterations;
        }
    }

    void pivot(Index row, Index col) {
        t_.row(row) /= t_(row, col);
        const Vector column = t_.col(col);
        const Eigen::RowVectorXd pivot_row = t_.row(row);
        for (Index i = 0; i <= m_; ++i) {
            if (i == row || column(i) == 0.0) continue;
            t_.row(i) -= column(i) * pivot_row;
        }
        t_(row, col) = 1.0;
        basis_[static_cast<std::size_t>(row)] = col;
    }

    [[nodiscard]] double objective_value() const { return -t_(m_, rhs_col_); }

    [[nodiscard]] Vector primal() const {
        Vector x = Vector::Zero(n_);
        for (Index i = 0; i < m_; ++i) {
            const Index col = basis_[static_cast<std::size_t>(i)];
            if (col < n_) x(col) = std::max(t_(i, rhs_col_), 0.0);
        }
        return x;
    }

    // y_i = -(reduced cost of the initial identity column of row i), mapped
    // back through the row flip.
    [[nodiscard]] Vector dual() const {
        Vector y(m_);
        for (Index i = 0; i < m_; ++i) {
            y(i) = -t_(m_, identity_col_[static_cast<std::size_t>(i)]) * sign_(i);
        }
        return y;
    }

    [[nodiscard]] Index artificial_count() const { return k_; }

private:
    Index m_;
    Index n_;
    Index k_ = 0;
    Index rhs_col_ = 0;
    Matrix t_;
    Vector cost_;
    Vector sign_;
    std::vector<Index> basis_;
    std::vector<Index> identity_col_;
};

}  // namespace

LpSolution solve_lp(const Vector& c, const Matrix& a, const Vector& b, const SimplexOptions& options) {
    require_dims(c.size() == a.cols() && b.size() == a.rows(), "solve_lp: dimension mismatch");
    Tableau tableau(c, a, b);
    int iterations = 0;
    if (tableau.artificial_count() > 0) {
        tableau.load_phase_one();
        iterations += tableau.optimize(options, true, options.max_iterations);
        if (tableau.objective_value() > options.feasibility_tol) {
            throw Infeasible("solve_lp: constraints are infeasible");
        }
        tableau.evict_artificials(options.pivot_tol);
    }
    tableau.load_phase_two();
    iterations += tableau.optimize(options, false, options.max_iterations - iterations);

    LpSolution solution;
    solution.x = tableau.primal();
    solution.objective = c.dot(solution.x);
    solution.dual = tableau.dual();
    solution.dual_objective = b.dot(solution.dual);
    solution.iterations = iterations;
    return solution;
}

}  // namespace lcpd
