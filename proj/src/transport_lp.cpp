#include "kconv/transport_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kconv {

namespace {

// Spanning-tree state over the bipartite node set (supplies 0..na-1, demands
// na..na+nb-1). The basis holds exactly na+nb-1 arcs; after every pivot the
// tree, depths and potentials are rebuilt by BFS, which keeps the pivot logic
// simple at O(n) per pivot.
struct Basis {
    struct Arc {
        int r, c;
        double flow;
    };
    int na, nb;
    std::vector<Arc> arcs;
    std::vector<int> parent;       // node -> parent node, -1 at root
    std::vector<int> parent_arc;   // node -> basis index of arc to parent
    std::vector<int> depth;
    std::vector<double> pot;       // u on supplies, v on demands

    // scratch for adjacency rebuild
    std::vector<int> head, nxt, to, via;

    explicit Basis(int na_, int nb_) : na(na_), nb(nb_) {
        const int n = na + nb;
        parent.assign(n, -1);
        parent_arc.assign(n, -1);
        depth.assign(n, 0);
        pot.assign(n, 0.0);
        head.assign(n, -1);
        const int slots = 2 * (n - 1);
        nxt.assign(slots, -1);
        to.assign(slots, -1);
        via.assign(slots, -1);
    }

    void rebuild(std::span<const double> cost) {
        const int n = na + nb;
        std::fill(head.begin(), head.end(), -1);
        int slot = 0;
        auto link = [&](int from, int dest, int arc) {
            nxt[slot] = head[from];
            to[slot] = dest;
            via[slot] = arc;
            head[from] = slot++;
        };
        for (int k = 0; k < static_cast<int>(arcs.size()); ++k) {
            const int s = arcs[k].r;
            const int d = na + arcs[k].c;
            link(s, d, k);
            link(d, s, k);
        }
        std::fill(parent.begin(), parent.end(), -2);
        std::vector<int> queue;
        queue.reserve(n);
        queue.push_back(0);
        parent[0] = -1;
        parent_arc[0] = -1;
        depth[0] = 0;
        pot[0] = 0.0;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int x = queue[q];
            for (int s = head[x]; s != -1; s = nxt[s]) {
                const int y = to[s];
                if (parent[y] != -2) continue;
                parent[y] = x;
                parent_arc[y] = via[s];
                depth[y] = depth[x] + 1;
                const auto& a = arcs[via[s]];
                // u_r + v_c = cost on basic arcs
                pot[y] = cost[static_cast<std::size_t>(a.r) * nb + a.c] - pot[x];
                queue.push_back(y);
            }
        }
        if (static_cast<int>(queue.size()) != n)
            throw std::logic_error("network simplex: basis tree is disconnected");
    }
};

}  // namespace

LpSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                std::span<const double> cost) {
    const int na = static_cast<int>(supply.size());
    const int nb = static_cast<int>(demand.size());
    if (na == 0 || nb == 0) throw std::invalid_argument("solve_transportation: empty marginal");
    if (cost.size() != static_cast<std::size_t>(na) * nb)
        throw std::invalid_argument("solve_transportation: cost must be na*nb");
    for (double x : supply)
        if (!(x > 0.0)) throw std::invalid_argument("solve_transportation: supplies must be positive");
    for (double x : demand)
        if (!(x > 0.0)) throw std::invalid_argument("solve_transportation: demands must be positive");

    Basis basis(na, nb);
    basis.arcs.reserve(na + nb - 1);

    // Northwest-corner initial basis: a staircase spanning tree.
    {
        int i = 0, j = 0;
        double ra = supply[0], rb = demand[0];
        for (int k = 0; k < na + nb - 1; ++k) {
            const double t = std::max(0.0, std::min(ra, rb));
            basis.arcs.push_back({i, j, t});
            ra -= t;
            rb -= t;
            if (i == na - 1) {
                if (j < nb - 1) rb = demand[++j];
            } else if (j == nb - 1) {
                ra = supply[++i];
            } else if (ra <= rb) {
                ra = supply[++i];
            } else {
                rb = demand[++j];
            }
        }
    }
    basis.rebuild(cost);

    double cost_scale = 0.0;
    for (double c : cost) cost_scale = std::max(cost_scale, std::abs(c));
    const double enter_tol = 1e-12 * std::max(1.0, cost_scale);

    const long num_arcs = static_cast<long>(na) * nb;
    const int block = std::max(64, static_cast<int>(std::sqrt(static_cast<double>(num_arcs))));
    const long pivot_cap = 1000L * (na + nb) + 100000L;

    std::vector<int> cyc_arc;
    std::vector<int> cyc_sign;
    long pivots = 0;
    long cursor = 0;

    while (true) {
        // Block search for the entering arc.
        int best_r = -1, best_c = -1;
        double best_red = -enter_tol;
        long scanned = 0;
        while (scanned < num_arcs) {
            const long stop = std::min(num_arcs, scanned + block);
            for (; scanned < stop; ++scanned) {
                const long e = cursor;
                cursor = cursor + 1 == num_arcs ? 0 : cursor + 1;
                const int r = static_cast<int>(e / nb);
                const int c = static_cast<int>(e % nb);
                const double red = cost[e] - basis.pot[r] - basis.pot[na + c];
                if (red < best_red) {
                    best_red = red;
                    best_r = r;
                    best_c = c;
                }
            }
            if (best_r >= 0) break;
        }
        if (best_r < 0) break;  // optimal

        // Trace the unique tree cycle closed by (best_r -> best_c).
        cyc_arc.clear();
        cyc_sign.clear();
        int x = na + best_c;  // circulation runs entering arc into the demand node,
        int y = best_r;       // then through the tree back to the supply node
        while (basis.depth[x] > basis.depth[y]) {
            const int k = basis.parent_arc[x];
            cyc_arc.push_back(k);
            cyc_sign.push_back(x == na + basis.arcs[k].c ? -1 : +1);
            x = basis.parent[x];
        }
        while (basis.depth[y] > basis.depth[x]) {
            const int k = basis.parent_arc[y];
            cyc_arc.push_back(k);
            cyc_sign.push_back(y == basis.arcs[k].r ? -1 : +1);
            y = basis.parent[y];
        }
        while (x != y) {
            const int kx = basis.parent_arc[x];
            cyc_arc.push_back(kx);
            cyc_sign.push_back(x == na + basis.arcs[kx].c ? -1 : +1);
            x = basis.parent[x];
            const int ky = basis.parent_arc[y];
            cyc_arc.push_back(ky);
            cyc_sign.push_back(y == basis.arcs[ky].r ? -1 : +1);
            y = basis.parent[y];
        }

        // Ratio test over flow-decreasing arcs.
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t k = 0; k < cyc_arc.size(); ++k) {
            if (cyc_sign[k] < 0 && basis.arcs[cyc_arc[k]].flow < theta) {
                theta = basis.arcs[cyc_arc[k]].flow;
                leaving = cyc_arc[k];
            }
        }
        if (leaving < 0) throw std::logic_error("network simplex: unbounded pivot");

        for (std::size_t k = 0; k < cyc_arc.size(); ++k)
            basis.arcs[cyc_arc[k]].flow += cyc_sign[k] * theta;
        basis.arcs[leaving] = {best_r, best_c, theta};
        basis.rebuild(cost);

        if (++pivots > pivot_cap)
            throw std::runtime_error("network simplex: pivot cap exceeded (degenerate cycling?)");
    }

    LpSolution out;
    out.pivots = pivots;
    out.row_potential.resize(na);
    out.col_potential.resize(nb);
    for (int i = 0; i < na; ++i) out.row_potential[i] = basis.pot[i];
    for (int j = 0; j < nb; ++j) out.col_potential[j] = basis.pot[na + j];
    double total = 0.0;
    for (const auto& a : basis.arcs) {
        if (a.flow > 0.0) {
            out.plan.push_back({a.r, a.c, a.flow});
            total += a.flow * cost[static_cast<std::size_t>(a.r) * nb + a.c];
        }
    }
    out.cost = total;
    return out;
}

// ============================================================================
// Sinkhorn
// ============================================================================

SinkhornResult sinkhorn_log(std::span<const double> supply, std::span<const double> demand,
                            std::span<const double> cost, double epsilon, double tolerance,
                            int max_iterations) {
    const int na = static_cast<int>(supply.size());
    const int nb = static_cast<int>(demand.size());
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");

    std::vector<double> log_a(na), log_b(nb);
    for (int i = 0; i < na; ++i) log_a[i] = std::log(supply[i]);
    for (int j = 0; j < nb; ++j) log_b[j] = std::log(demand[j]);

    SinkhornResult res;
    res.f.assign(na, 0.0);
    res.g.assign(nb, 0.0);

    double cost_max = 0.0;
    for (double c : cost) cost_max = std::max(cost_max, c);

    // epsilon scaling: halve from the cost scale down to the target
    std::vector<double> stages;
    double e = std::max(epsilon, cost_max > 0.0 ? cost_max : epsilon);
    while (e > epsilon * 1.5) {
        stages.push_back(e);
        e *= 0.5;
    }
    stages.push_back(epsilon);

    auto row_update = [&](double eps) {
        for (int i = 0; i < na; ++i) {
            const std::size_t base = static_cast<std::size_t>(i) * nb;
            double m = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < nb; ++j)
                m = std::max(m, (res.g[j] - cost[base + j]) / eps + log_b[j]);
            double s = 0.0;
            for (int j = 0; j < nb; ++j)
                s += std::exp((res.g[j] - cost[base + j]) / eps + log_b[j] - m);
            res.f[i] = -eps * (m + std::log(s));
        }
    };
    auto col_update = [&](double eps) {
        for (int j = 0; j < nb; ++j) {
            double m = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < na; ++i)
                m = std::max(m, (res.f[i] - cost[static_cast<std::size_t>(i) * nb + j]) / eps + log_a[i]);
            double s = 0.0;
            for (int i = 0; i < na; ++i)
                s += std::exp((res.f[i] - cost[static_cast<std::size_t>(i) * nb + j]) / eps + log_a[i] - m);
            res.g[j] = -eps * (m + std::log(s));
        }
    };
    auto row_error = [&](double eps) {
        double worst = 0.0;
        for (int i = 0; i < na; ++i) {
            const std::size_t base = static_cast<std::size_t>(i) * nb;
            double s = 0.0;
            for (int j = 0; j < nb; ++j)
                s += std::exp((res.f[i] + res.g[j] - cost[base + j]) / eps + log_a[i] + log_b[j]);
            worst = std::max(worst, std::abs(s - supply[i]));
        }
        return worst;
    };

    int used = 0;
    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const double eps = stages[stage];
        const bool final_stage = stage + 1 == stages.size();
        const double tol = final_stage ? tolerance : std::max(tolerance, 1e-6);
        while (used < max_iterations) {
            row_update(eps);
            col_update(eps);
            ++used;
            res.marginal_error = row_error(eps);
            if (res.marginal_error < tol) break;
        }
        if (used >= max_iterations) break;
    }
    res.iterations = used;
    res.converged = res.marginal_error < tolerance;

    const double eps = stages.back();
    double total = 0.0;
    for (int i = 0; i < na; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * nb;
        for (int j = 0; j < nb; ++j) {
            const double pij = std::exp((res.f[i] + res.g[j] - cost[base + j]) / eps + log_a[i] + log_b[j]);
            total += pij * cost[base + j];
        }
    }
    res.cost = total;
    return res;
}

}  // namespace kconv
