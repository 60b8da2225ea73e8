#include "kconv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kconv/calculus.hpp"
#include "kconv/interp.hpp"
#include "kconv/transport_lp.hpp"

namespace kconv {

namespace {

std::vector<int> support_of(const Density& d) {
    std::vector<int> idx;
    for (int i = 0; i < d.size(); ++i)
        if (d[i] > 0.0) idx.push_back(i);
    return idx;
}

}  // namespace

ScalarField c_transform(const MetricMeasureSpace& M, const ScalarField& phi) {
    if (phi.size() != M.size()) throw std::invalid_argument("c_transform: field size mismatch");
    ScalarField out(M.size(), 0.0);
    for (int y = 0; y < M.size(); ++y) {
        double best = std::numeric_limits<double>::infinity();
        for (int x = 0; x < M.size(); ++x)
            best = std::min(best, 0.5 * M.squared_distance(x, y) - phi[x]);
        out[y] = best;
    }
    return out;
}

TransportSolution w2(const MetricMeasureSpace& M, const Density& mu, const Density& nu,
                     TransportMethod method, const TransportOptions& opts) {
    if (mu.size() != M.size() || nu.size() != M.size())
        throw std::invalid_argument("w2: density size mismatch");

    const std::vector<int> supp_a = support_of(mu);
    const std::vector<int> supp_b = support_of(nu);
    const int na = static_cast<int>(supp_a.size());
    const int nb = static_cast<int>(supp_b.size());
    if (na == 0 || nb == 0) throw std::invalid_argument("w2: empty support");

    std::vector<double> a(na), b(nb);
    double mass_a = 0.0, mass_b = 0.0;
    for (int i = 0; i < na; ++i) {
        a[i] = mu[supp_a[i]] * M.weight(supp_a[i]);
        mass_a += a[i];
    }
    for (int j = 0; j < nb; ++j) {
        b[j] = nu[supp_b[j]] * M.weight(supp_b[j]);
        mass_b += b[j];
    }
    if (std::abs(mass_a - mass_b) > 1e-9)
        throw std::runtime_error("w2: marginal masses differ by more than 1e-9");
    const double rescale = mass_a / mass_b;
    for (double& x : b) x *= rescale;

    std::vector<double> cost(static_cast<std::size_t>(na) * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
            cost[static_cast<std::size_t>(i) * nb + j] = M.squared_distance(supp_a[i], supp_b[j]);

    TransportSolution sol;
    sol.method = method;
    sol.support_mu = supp_a;
    sol.support_nu = supp_b;

    if (method == TransportMethod::exact_lp) {
        if (supp_a.size() > opts.support_cap || supp_b.size() > opts.support_cap)
            throw std::length_error("w2: support exceeds exact_lp cap");
        const LpSolution lp = solve_transportation(a, b, cost);
        sol.w2 = std::sqrt(std::max(0.0, lp.cost));
        for (const auto& e : lp.plan) sol.plan.push_back({supp_a[e.i], supp_b[e.j], e.mass});

        // When the optimal dual set has width (degenerate plans with exact
        // mass ties), the simplex lands on one of its faces and the potential
        // staircase tilts by O(h). The swapped problem (nu -> mu) lands on
        // the opposite face, its duals are an optimal pair for the original
        // problem, and the average of the two dual vectors is dual-optimal
        // and centered; when the plan graph is connected the dual is pinned
        // anyway and the average is a no-op. Extend the averaged demand
        // potential c-concavely, gauge it, recompute the partner exactly.
        std::vector<double> cost_t(cost.size());
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j)
                cost_t[static_cast<std::size_t>(j) * na + i] = cost[static_cast<std::size_t>(i) * nb + j];
        const LpSolution lp_swap = solve_transportation(b, a, cost_t);
        std::vector<double> psi_bar(nb);
        for (int j = 0; j < nb; ++j)
            psi_bar[j] = 0.25 * (lp.col_potential[j] + lp_swap.row_potential[j]);

        ScalarField phi(M.size(), 0.0);
        for (int x = 0; x < M.size(); ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < nb; ++j)
                best = std::min(best, 0.5 * M.squared_distance(x, supp_b[j]) - psi_bar[j]);
            phi[x] = best;
        }
        const double gauge = phi[supp_a[0]];
        for (int x = 0; x < M.size(); ++x) phi[x] -= gauge;
        sol.phi = phi;
        sol.phi_c = c_transform(M, phi);

        double dual = 0.0;
        for (int i = 0; i < M.size(); ++i)
            dual += (sol.phi[i] * mu[i] + sol.phi_c[i] * nu[i]) * M.weight(i);
        sol.gap = 0.5 * lp.cost - dual;
        if (sol.gap < -1e-9)
            throw std::logic_error("w2: dual exceeds primal (weak duality violated)");
        if (sol.gap < 0.0) sol.gap = 0.0;
        if (sol.gap > opts.gap_tol)
            throw std::runtime_error("w2: duality gap " + std::to_string(sol.gap) +
                                     " above tolerance");
        return sol;
    }

    // entropic
    if (!(opts.epsilon > 0.0)) throw std::invalid_argument("w2: entropic method requires epsilon > 0");
    const SinkhornResult sk = sinkhorn_log(a, b, cost, opts.epsilon, opts.sinkhorn_tol,
                                           opts.max_iterations);
    if (!sk.converged)
        throw std::runtime_error("w2: Sinkhorn did not converge, marginal error " +
                                 std::to_string(sk.marginal_error));
    sol.w2 = std::sqrt(std::max(0.0, sk.cost));
    sol.epsilon = opts.epsilon;
    sol.iterations = sk.iterations;
    sol.approximate = true;
    // dense plan restricted to numerically nonzero entries
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double pij = std::exp((sk.f[i] + sk.g[j] - cost[static_cast<std::size_t>(i) * nb + j]) /
                                        opts.epsilon) *
                               a[i] * b[j];
            if (pij > 1e-300) sol.plan.push_back({supp_a[i], supp_b[j], pij});
        }
    // informational potentials from the entropic duals (not used by checks)
    ScalarField phi(M.size(), 0.0);
    for (int x = 0; x < M.size(); ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < nb; ++j)
            best = std::min(best, 0.5 * M.squared_distance(x, supp_b[j]) - 0.5 * sk.g[j]);
        phi[x] = best;
    }
    const double gauge = phi[supp_a[0]];
    for (int x = 0; x < M.size(); ++x) phi[x] -= gauge;
    sol.phi = phi;
    sol.phi_c = c_transform(M, phi);
    double dual = 0.0;
    for (int i = 0; i < M.size(); ++i)
        dual += (sol.phi[i] * mu[i] + sol.phi_c[i] * nu[i]) * M.weight(i);
    sol.gap = 0.5 * sk.cost - dual;
    return sol;
}

Density geodesic_interpolate(const MetricMeasureSpace& M, const TransportSolution& sol, double t) {
    if (M.backend() != Backend::grid)
        throw std::domain_error("geodesic_interpolate: unsupported backend (no canonical midpoints)");
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("geodesic_interpolate: t must be in [0,1]");
    const int d = M.dim();
    std::vector<double> positions(sol.plan.size() * static_cast<std::size_t>(d));
    std::vector<double> masses(sol.plan.size());
    for (std::size_t k = 0; k < sol.plan.size(); ++k) {
        const auto& e = sol.plan[k];
        const auto x = M.point(e.i);
        const auto y = M.point(e.j);
        for (int a = 0; a < d; ++a)
            positions[k * d + a] = (1.0 - t) * x[a] + t * y[a];
        masses[k] = e.mass;
    }
    std::vector<double> raw = cic_deposit(M, positions, masses);
    for (int i = 0; i < M.size(); ++i) raw[i] /= M.weight(i);
    return Density(std::move(raw), M);
}

double metric_brenier_residual(const MetricMeasureSpace& M, const TransportSolution& sol,
                               const Density& mu) {
    const ScalarField dphi = weak_gradient_norm(M, sol.phi);
    double integral = 0.0;
    for (int i = 0; i < M.size(); ++i)
        integral += dphi[i] * dphi[i] * mu[i] * M.weight(i);
    const double w2sq = sol.w2 * sol.w2;
    return std::abs(w2sq - integral) / std::max(w2sq, std::numeric_limits<double>::epsilon());
}

double cloud_w2(std::span<const double> xs, std::span<const double> xw, std::span<const double> ys,
                std::span<const double> yw, int dim) {
    std::vector<double> a, b;
    std::vector<std::size_t> ia, ib;
    for (std::size_t i = 0; i < xw.size(); ++i)
        if (xw[i] > 0.0) {
            a.push_back(xw[i]);
            ia.push_back(i);
        }
    for (std::size_t j = 0; j < yw.size(); ++j)
        if (yw[j] > 0.0) {
            b.push_back(yw[j]);
            ib.push_back(j);
        }
    double ma = 0.0, mb = 0.0;
    for (double x : a) ma += x;
    for (double x : b) mb += x;
    if (std::abs(ma - mb) > 1e-9) throw std::runtime_error("cloud_w2: cloud masses differ");
    const double rescale = ma / mb;
    for (double& x : b) x *= rescale;

    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    std::vector<double> cost(static_cast<std::size_t>(na) * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            double r2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double dx = xs[ia[i] * dim + d] - ys[ib[j] * dim + d];
                r2 += dx * dx;
            }
            cost[static_cast<std::size_t>(i) * nb + j] = r2;
        }
    const LpSolution lp = solve_transportation(a, b, cost);
    return std::sqrt(std::max(0.0, lp.cost));
}

}  // namespace kconv
