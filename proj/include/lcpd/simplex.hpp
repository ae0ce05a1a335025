#pragma once

#include "lcpd/common.hpp"

namespace lcpd {

class Unbounded : public Error {
public:
    using Error::Error;
};

enum class PricingRule {
    bland,    // smallest-index entering column; never cycles
    dantzig,  // most negative reduced cost, falling back to Bland on degenerate runs
};

struct SimplexOptions {
    PricingRule pricing = PricingRule::dantzig;
    int max_iterations = 100000;
    double pivot_tol = 1e-11;
    double optimality_tol = 1e-11;
    double feasibility_tol = 1e-9;
    int degenerate_run_before_bland = 50;
};

struct LpSolution {
    Vector x;
    Vector dual;  // y <= 0 with c - Aᵀy >= 0 at optimality
    double objective = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;

    [[nodiscard]] double duality_gap() const { return objective - dual_objective; }
};

/// min cᵀx  s.t.  A x <= b,  x >= 0, by a dense two-phase tableau simplex.
/// Rows with negative right-hand side get an artificial variable for phase 1.
/// Throws Infeasible, Unbounded or SolverStall (iteration cap).
LpSolution solve_lp(const Vector& c, const Matrix& a, const Vector& b, const SimplexOptions& options = {});

}  // namespace lcpd
