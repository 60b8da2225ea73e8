#pragma once

#include "kconv/space.hpp"

namespace kconv {

enum class TransportMethod { exact_lp, entropic };

struct PlanEntry {
    int i = 0;  // global point index in the source measure
    int j = 0;  // global point index in the target measure
    double mass = 0.0;
};

/// Optimal plan, Kantorovich potential pair and W_2 value for a measure pair.
/// Potentials live on the whole space: phi is the c-concave extension of the
/// LP duals, gauged by phi[first support point of mu] = 0, and phi_c is its
/// exact c-transform.
struct TransportSolution {
    std::vector<PlanEntry> plan;
    double w2 = 0.0;
    ScalarField phi;
    ScalarField phi_c;
    TransportMethod method = TransportMethod::exact_lp;
    double epsilon = 0.0;   // entropic only
    double gap = 0.0;       // w2^2/2 - dual value (exact method)
    int iterations = 0;     // entropic only
    bool approximate = false;
    std::vector<int> support_mu;
    std::vector<int> support_nu;
};

struct TransportOptions {
    std::size_t support_cap = 2000;  // exact_lp support size limit
    double epsilon = 1e-2;           // entropic regularization (squared-length units)
    double sinkhorn_tol = 1e-9;      // marginal convergence target
    int max_iterations = 200000;
    double gap_tol = 1e-7;
};

/// phi^c(y) = min_x d^2(x,y)/2 - phi(x), exact O(n^2) minimization.
ScalarField c_transform(const MetricMeasureSpace& space, const ScalarField& phi);

/// Solve the discrete Monge-Kantorovich problem between two densities.
TransportSolution w2(const MetricMeasureSpace& space, const Density& mu, const Density& nu,
                     TransportMethod method = TransportMethod::exact_lp,
                     const TransportOptions& opts = {});

/// Displacement interpolation mu_t deposited on the grid by multilinear
/// splatting (grid backend only, t in [0,1]; mass conserved exactly).
Density geodesic_interpolate(const MetricMeasureSpace& space, const TransportSolution& solution,
                             double t);

/// |w2^2 - int |D phi|^2 dmu| / max(w2^2, machine epsilon). Diagnostic only;
/// meaningful when mu has interior support and the grid resolves phi.
double metric_brenier_residual(const MetricMeasureSpace& space, const TransportSolution& solution,
                               const Density& mu);

/// Exact W_2 between weighted point clouds in R^dim under the Euclidean
/// metric (positions row-major p x dim; weights must sum to the same total).
double cloud_w2(std::span<const double> xs, std::span<const double> xw, std::span<const double> ys,
                std::span<const double> yw, int dim);

}  // namespace kconv
