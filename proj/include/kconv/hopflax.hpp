#pragma once

#include <utility>

#include "kconv/space.hpp"
#include "kconv/transport.hpp"

namespace kconv {

/// Hopf-Lax semigroup: Q_t(phi)(x) = min_y d^2(x,y)/(2t) + phi(y) for t > 0,
/// Q_0 = phi. Exact O(n^2) minimization.
ScalarField hopf_lax(const MetricMeasureSpace& space, const ScalarField& phi, double t);

/// Hamilton-Jacobi defect (Q_{t+dt} phi - Q_{t-dt} phi)/(2 dt)
/// + 1/2 |D Q_t phi|^2 per point. Requires t > dt > 0; dt <= 0 selects the
/// default step 1e-3 * t.
ScalarField hj_residual(const MetricMeasureSpace& space, const ScalarField& phi, double t,
                        double dt = 0.0);

/// Kantorovich potentials along the geodesic at time t in (0,1):
/// (t Q_t(-phi), (1-t) Q_{1-t}(-phi^c)), the first from mu_t to mu_0 and the
/// second from mu_t to mu_1. Both outputs are checked to be fixed points of
/// the double c-transform to 1e-9.
std::pair<ScalarField, ScalarField> evolve_potentials(const MetricMeasureSpace& space,
                                                      const TransportSolution& solution, double t);

}  // namespace kconv
