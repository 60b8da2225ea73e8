#pragma once

// Independent reference computations for the transport and flow tests. These
// deliberately avoid the library's solver paths: 1D transport is done by
// quantile matching, small assignment problems by brute force over
// permutations, and the Hopf-Lax cases by closed forms.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

struct Atom {
    double x;
    double mass;
};

/// Exact 1D W2 between atomic measures by monotone quantile matching.
inline double w2_1d(std::vector<Atom> mu, std::vector<Atom> nu) {
    std::sort(mu.begin(), mu.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    std::sort(nu.begin(), nu.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    double cost = 0.0;
    std::size_t i = 0, j = 0;
    double ra = mu.empty() ? 0.0 : mu[0].mass;
    double rb = nu.empty() ? 0.0 : nu[0].mass;
    while (i < mu.size() && j < nu.size()) {
        const double m = std::min(ra, rb);
        const double d = mu[i].x - nu[j].x;
        cost += m * d * d;
        ra -= m;
        rb -= m;
        if (ra <= 1e-18 && i + 1 <= mu.size()) {
            ++i;
            ra = i < mu.size() ? mu[i].mass : 0.0;
        }
        if (rb <= 1e-18 && j + 1 <= nu.size()) {
            ++j;
            rb = j < nu.size() ? nu[j].mass : 0.0;
        }
    }
    return std::sqrt(cost);
}

/// Exact W2 between equal-mass point sets (n <= 8) by enumerating
/// permutations; positions are row-major n x dim.
inline double w2_assignment(const std::vector<double>& xs, const std::vector<double>& ys, int n,
                            int dim) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < dim; ++a) {
                const double d = xs[i * dim + a] - ys[perm[i] * dim + a];
                cost += d * d;
            }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / n);
}

/// Closed-form Moreau envelope of x^2/2 under the Hopf-Lax semigroup.
inline double moreau_quadratic(double x, double t) { return x * x / (2.0 * (1.0 + t)); }

}  // namespace oracle
