#pragma once

#include "emdloss/matrix.hpp"
#include "emdloss/types.hpp"

namespace emdloss {

// Discrete transportation problem: ship `supply` mass to `demand` mass at
// per-pair cost. Supplies and demands need not balance; the solver ships
// min(total supply, total demand).
struct TransportProblem {
    Vec supply;
    Vec demand;
    Mat cost;

    void validate() const;
};

// Optimal flow plus the MODI dual variables at termination. On every
// non-basic cell the duals satisfy u[i] + v[j] <= cost(i,j), which is the
// optimality certificate tests can check independently.
struct TransportPlan {
    Mat flow;
    double total_cost = 0.0;
    Vec u;
    Vec v;
};

// Exact solve via the transportation simplex: northwest-corner start,
// u-v (MODI) pricing, epsilon-perturbed supplies against degeneracy, and a
// Bland's-rule fallback against cycling. Intended for C <= 64.
TransportPlan solve_transport(const TransportProblem& problem);

// Minimum transport cost normalized by total flow (identity for probability
// inputs). Throws invalid_input_error when the total flow is zero.
double emd_exact(const Vec& p, const Vec& t, const Mat& cost);

}  // namespace emdloss
