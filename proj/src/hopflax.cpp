#include "kconv/hopflax.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kconv/calculus.hpp"

namespace kconv {

ScalarField hopf_lax(const MetricMeasureSpace& M, const ScalarField& phi, double t) {
    if (phi.size() != M.size()) throw std::invalid_argument("hopf_lax: field size mismatch");
    if (t < 0.0) throw std::invalid_argument("hopf_lax: t must be nonnegative");
    if (t == 0.0) return phi;
    ScalarField out(M.size(), 0.0);
    const double inv2t = 1.0 / (2.0 * t);
    for (int x = 0; x < M.size(); ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (int y = 0; y < M.size(); ++y)
            best = std::min(best, M.squared_distance(x, y) * inv2t + phi[y]);
        out[x] = best;
    }
    return out;
}

ScalarField hj_residual(const MetricMeasureSpace& M, const ScalarField& phi, double t, double dt) {
    if (dt <= 0.0) dt = 1e-3 * t;
    if (!(t > dt && dt > 0.0)) throw std::invalid_argument("hj_residual: need t > dt > 0");
    const ScalarField q_plus = hopf_lax(M, phi, t + dt);
    const ScalarField q_minus = hopf_lax(M, phi, t - dt);
    const ScalarField q = hopf_lax(M, phi, t);
    const ScalarField slope = weak_gradient_norm(M, q);
    ScalarField out(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i)
        out[i] = (q_plus[i] - q_minus[i]) / (2.0 * dt) + 0.5 * slope[i] * slope[i];
    return out;
}

std::pair<ScalarField, ScalarField> evolve_potentials(const MetricMeasureSpace& M,
                                                      const TransportSolution& sol, double t) {
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("evolve_potentials: t must lie strictly inside (0,1)");
    if (sol.method != TransportMethod::exact_lp)
        throw std::invalid_argument("evolve_potentials: exact potentials required");

    ScalarField neg_phi(M.size(), 0.0), neg_phi_c(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i) {
        neg_phi[i] = -sol.phi[i];
        neg_phi_c[i] = -sol.phi_c[i];
    }
    ScalarField to_start = hopf_lax(M, neg_phi, t);
    for (int i = 0; i < M.size(); ++i) to_start[i] *= t;
    ScalarField to_end = hopf_lax(M, neg_phi_c, 1.0 - t);
    for (int i = 0; i < M.size(); ++i) to_end[i] *= 1.0 - t;

    const auto stable = [&](const ScalarField& p) {
        const ScalarField pcc = c_transform(M, c_transform(M, p));
        double defect = 0.0;
        for (int i = 0; i < M.size(); ++i) defect = std::max(defect, std::abs(pcc[i] - p[i]));
        return defect;
    };
    if (stable(to_start) > 1e-9 || stable(to_end) > 1e-9)
        throw std::runtime_error("evolve_potentials: output is not c-concave-stable");
    return {to_start, to_end};
}

}  // namespace kconv
