#pragma once

#include <optional>
#include <string>

#include "kconv/space.hpp"

namespace kconv {

/// Weighted particle cloud. Masses are positive and sum to 1 (to 1e-12);
/// positions stay inside the domain box.
struct ParticleEnsemble {
    int dim = 0;
    std::vector<double> positions;  // p x dim row-major
    std::vector<double> masses;
    std::string provenance;

    int count() const { return static_cast<int>(masses.size()); }
    std::span<const double> position(int k) const {
        return {positions.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
};

void validate_ensemble(const MetricMeasureSpace& space, const ParticleEnsemble& ensemble);

/// One particle per support cell of mu, carrying the cell mass.
ParticleEnsemble ensemble_from_density(const MetricMeasureSpace& space, const Density& mu,
                                       std::string provenance = "density-cells");

/// Time-indexed flow output. Lagrangian runs fill particle snapshots,
/// Eulerian runs fill density snapshots; both record a compression series.
struct FlowTrajectory {
    std::vector<double> times;
    std::vector<ParticleEnsemble> particles;
    std::vector<std::vector<double>> densities;  // rho per snapshot (Eulerian)
    std::vector<double> compression_series;
    double dt = 0.0;
    int stride = 1;
    long clamp_events = 0;
};

/// RK4 integration of dx/dt = b(x) per particle with multilinear velocity
/// interpolation. Particles are clamped to the domain box (counted); leaving
/// the box by more than one cell raises an escape error.
FlowTrajectory lagrangian_flow(const MetricMeasureSpace& space, const VectorField& b,
                               const ParticleEnsemble& particles, double T, double dt,
                               int stride = 10);

/// Integrate bare positions to time t; returns final positions (row-major).
std::vector<double> flow_map(const MetricMeasureSpace& space, const VectorField& b,
                             std::vector<double> positions, double t, double dt);

/// First-order upwind finite-volume solution of d/dt rho + div(b rho) = 0
/// with zero-flux boundaries. Mass is conserved exactly; the CFL condition
/// dt * max|b| / h <= 0.9 (axis-summed in d > 1) is enforced.
FlowTrajectory solve_continuity(const MetricMeasureSpace& space, const VectorField& b,
                                const Density& mu0, double T, double dt, int stride = 10);

struct FlowDiagnostics {
    double speed_defect = 0.0;      // max | |F'| - |b| o F | over sampled particles/times
    double semigroup_defect = 0.0;  // max |F_{t+s}(x) - F_t(F_s(x))| at the sampled (s,t)
    double sampled_s = 0.0;
    double sampled_t = 0.0;
    std::vector<double> compression_series;
    double max_compression = 0.0;
};

/// Regular-Lagrangian-flow health report: metric speed identity, semigroup
/// defect (re-integrated with the trajectory's own step), and the bounded
/// compression series of the pushforward densities.
FlowDiagnostics flow_diagnostics(const MetricMeasureSpace& space, const FlowTrajectory& trajectory,
                                 const VectorField& b);

}  // namespace kconv
