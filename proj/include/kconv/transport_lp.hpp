#pragma once

#include <span>
#include <vector>

namespace kconv {

// ============================================================================
// Exact transportation LP (network simplex)
// ============================================================================

struct LpPlanEntry {
    int i = 0;  // supply index
    int j = 0;  // demand index
    double mass = 0.0;
};

struct LpSolution {
    std::vector<LpPlanEntry> plan;      // positive flows only
    std::vector<double> row_potential;  // u, one per supply
    std::vector<double> col_potential;  // v, one per demand; u_i + v_j <= cost_ij
    double cost = 0.0;
    long pivots = 0;
};

/// Primal network simplex on the dense bipartite transportation polytope:
/// min sum cost[i*nb+j] * x_ij with row sums = supply and column sums =
/// demand. Supplies and demands must be positive and balanced; the caller is
/// expected to have rescaled them to a common total.
LpSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                std::span<const double> cost);

// ============================================================================
// Entropic regularization (log-domain Sinkhorn)
// ============================================================================

struct SinkhornResult {
    std::vector<double> f;  // dual potentials in cost units, pi = exp((f+g-C)/eps) a (x) b
    std::vector<double> g;
    double cost = 0.0;  // sum pi * C, no debiasing
    int iterations = 0;
    double marginal_error = 0.0;
    bool converged = false;
};

/// Log-domain Sinkhorn with epsilon scaling (halving from max-cost scale down
/// to the target). Convergence is measured as the max row-marginal defect
/// after a column update.
SinkhornResult sinkhorn_log(std::span<const double> supply, std::span<const double> demand,
                            std::span<const double> cost, double epsilon, double tolerance,
                            int max_iterations);

}  // namespace kconv
