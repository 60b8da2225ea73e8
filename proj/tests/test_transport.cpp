#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "kconv/space.hpp"
#include "kconv/transport.hpp"
#include "kconv/transport_lp.hpp"
#include "oracles.hpp"

using namespace kconv;

namespace {

Density bump(const MetricMeasureSpace& M, double center, double sigma) {
    std::vector<double> raw(static_cast<std::size_t>(M.size()), 0.0);
    for (int i = 0; i < M.size(); ++i) {
        const double x = M.point(i)[0];
        if (std::abs(x - center) <= 4.0 * sigma)
            raw[i] = std::exp(-(x - center) * (x - center) / (2.0 * sigma * sigma));
    }
    return Density::normalized(std::move(raw), M);
}

Density point_mass(const MetricMeasureSpace& M, int at) {
    std::vector<double> raw(static_cast<std::size_t>(M.size()), 0.0);
    raw[at] = 1.0;
    return Density::normalized(std::move(raw), M);
}

std::vector<oracle::Atom> atoms_of(const MetricMeasureSpace& M, const Density& d) {
    std::vector<oracle::Atom> atoms;
    for (int i = 0; i < M.size(); ++i)
        if (d[i] > 0.0) atoms.push_back({M.point(i)[0], d[i] * M.weight(i)});
    return atoms;
}

Density random_density(const MetricMeasureSpace& M, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> raw(static_cast<std::size_t>(M.size()));
    for (auto& x : raw) {
        x = u(rng);
        if (x < 0.35) x = 0.0;  // sparse supports exercise the solver harder
    }
    raw[M.size() / 2] += 0.5;
    return Density::normalized(std::move(raw), M);
}

}  // namespace

TEST_CASE("c-transform basics") {
    const auto M = MetricMeasureSpace::grid(1, {{0.0, 1.0}}, 0.5);
    SUBCASE("zero potential maps to zero") {
        const auto c = c_transform(M, ScalarField(M.size(), 0.0));
        for (int i = 0; i < M.size(); ++i) CHECK(c[i] == doctest::Approx(0.0));
    }
    SUBCASE("constants flip sign") {
        const auto c = c_transform(M, ScalarField(M.size(), 0.7));
        for (int i = 0; i < M.size(); ++i) CHECK(c[i] == doctest::Approx(-0.7));
    }
    SUBCASE("two point space, hand-computed") {
        const auto T = MetricMeasureSpace::grid(1, {{0.0, 1.0}}, 1.0);  // d(0,1) = 1
        ScalarField phi(2, 0.0);
        phi[1] = 0.3;
        const auto c = c_transform(T, phi);
        CHECK(c[0] == doctest::Approx(0.0));   // min(0 - 0, 0.5 - 0.3)
        CHECK(c[1] == doctest::Approx(-0.3));  // min(0.5 - 0, 0 - 0.3)
    }
    SUBCASE("triple transform equals single transform") {
        const auto G = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.25);
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        ScalarField phi(G.size(), 0.0);
        for (int i = 0; i < G.size(); ++i) phi[i] = u(rng);
        const auto c1 = c_transform(G, phi);
        const auto c3 = c_transform(G, c_transform(G, c1));
        for (int i = 0; i < G.size(); ++i) CHECK(c3[i] == doctest::Approx(c1[i]).epsilon(1e-12));
    }
}

TEST_CASE("w2 exact solve") {
    const auto M = MetricMeasureSpace::grid(1, {{-3.0, 3.0}}, 0.05);

    SUBCASE("identical measures cost nothing and the plan is diagonal") {
        const auto mu = bump(M, 0.0, 0.4);
        const auto sol = w2(M, mu, mu);
        CHECK(sol.w2 == doctest::Approx(0.0).epsilon(1e-10));
        for (const auto& e : sol.plan) CHECK(e.i == e.j);
        CHECK(sol.gap <= 1e-7);
    }
    SUBCASE("point masses move along the metric") {
        const auto sol = w2(M, point_mass(M, 20), point_mass(M, 80));
        CHECK(sol.w2 == doctest::Approx(M.distance(20, 80)).epsilon(1e-12));
        REQUIRE(sol.plan.size() == 1);
        CHECK(sol.plan[0].i == 20);
        CHECK(sol.plan[0].j == 80);
    }
    SUBCASE("uniform translates cost exactly the shift") {
        const auto G = MetricMeasureSpace::grid(1, {{0.0, 2.0}}, 0.02);
        std::vector<double> a(static_cast<std::size_t>(G.size()), 0.0);
        std::vector<double> b(static_cast<std::size_t>(G.size()), 0.0);
        for (int i = 0; i < G.size(); ++i) {
            const double x = G.point(i)[0];
            if (x <= 1.0) a[i] = 1.0;
            if (x >= 1.0) b[i] = 1.0;
        }
        const auto sol = w2(G, Density::normalized(std::move(a), G), Density::normalized(std::move(b), G));
        CHECK(sol.w2 == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sol.gap <= 1e-7);
    }
    SUBCASE("agrees with the 1d quantile oracle on random densities") {
        for (unsigned seed : {3u, 17u, 23u, 40u}) {
            const auto mu = random_density(M, seed);
            const auto nu = random_density(M, seed + 1000);
            const auto sol = w2(M, mu, nu);
            const double expected = oracle::w2_1d(atoms_of(M, mu), atoms_of(M, nu));
            CHECK(sol.w2 == doctest::Approx(expected).epsilon(1e-9));
            CHECK(sol.gap <= 1e-7);

            // plan marginals reproduce the measures
            std::vector<double> row(static_cast<std::size_t>(M.size()), 0.0);
            std::vector<double> col(static_cast<std::size_t>(M.size()), 0.0);
            for (const auto& e : sol.plan) {
                row[e.i] += e.mass;
                col[e.j] += e.mass;
            }
            for (int i = 0; i < M.size(); ++i) {
                CHECK(row[i] == doctest::Approx(mu[i] * M.weight(i)).epsilon(1e-9));
                CHECK(col[i] == doctest::Approx(nu[i] * M.weight(i)).epsilon(1e-9));
            }
        }
    }
    SUBCASE("metric axioms on random triples") {
        std::mt19937 rng(5);
        for (int round = 0; round < 5; ++round) {
            const auto a = random_density(M, rng());
            const auto b = random_density(M, rng());
            const auto c = random_density(M, rng());
            const double ab = w2(M, a, b).w2;
            const double ba = w2(M, b, a).w2;
            const double bc = w2(M, b, c).w2;
            const double ac = w2(M, a, c).w2;
            CHECK(std::abs(ab - ba) <= 1e-9);
            CHECK(ac <= ab + bc + 1e-7);
        }
    }
}

TEST_CASE("network simplex pivots through shuffled instances") {
    // Shuffling the support order destroys the monotone staircase optimality
    // of the initial basis, so these solves genuinely pivot; the optimal cost
    // is order-invariant and pinned by the quantile oracle.
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> upos(-2.0, 2.0);
    std::uniform_real_distribution<double> umass(0.1, 1.0);
    for (int round = 0; round < 6; ++round) {
        const int na = 40 + round * 17, nb = 35 + round * 19;
        std::vector<double> xs(na), ys(nb), a(na), b(nb);
        for (int i = 0; i < na; ++i) {
            xs[i] = upos(rng);
            a[i] = umass(rng);
        }
        for (int j = 0; j < nb; ++j) {
            ys[j] = upos(rng);
            b[j] = umass(rng);
        }
        double ma = 0.0, mb = 0.0;
        for (double v : a) ma += v;
        for (double v : b) mb += v;
        for (double& v : b) v *= ma / mb;

        std::vector<double> cost(static_cast<std::size_t>(na) * nb);
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j) {
                const double d = xs[i] - ys[j];
                cost[static_cast<std::size_t>(i) * nb + j] = d * d;
            }
        const auto lp = solve_transportation(a, b, cost);

        std::vector<oracle::Atom> mu, nu;
        for (int i = 0; i < na; ++i) mu.push_back({xs[i], a[i]});
        for (int j = 0; j < nb; ++j) nu.push_back({ys[j], b[j]});
        const double expect = oracle::w2_1d(mu, nu);
        CHECK(std::sqrt(lp.cost) == doctest::Approx(expect).epsilon(1e-9));
        CHECK(lp.pivots > 0);

        // strong duality at the reported duals
        double dual = 0.0;
        for (int i = 0; i < na; ++i) dual += a[i] * lp.row_potential[i];
        for (int j = 0; j < nb; ++j) dual += b[j] * lp.col_potential[j];
        CHECK(dual == doctest::Approx(lp.cost).epsilon(1e-10));
    }
}

TEST_CASE("cloud transport matches brute-force assignment") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int round = 0; round < 4; ++round) {
        const int n = 6;
        std::vector<double> xs(n * 2), ys(n * 2), w(n, 1.0 / n);
        for (auto& v : xs) v = u(rng);
        for (auto& v : ys) v = u(rng);
        const double expected = oracle::w2_assignment(xs, ys, n, 2);
        CHECK(cloud_w2(xs, w, ys, w, 2) == doctest::Approx(expected).epsilon(1e-10));
    }
    SUBCASE("mass mismatch is a balance error") {
        std::vector<double> xs{0.0}, ys{1.0}, wa{1.0}, wb{0.5};
        CHECK_THROWS_AS(cloud_w2(xs, wa, ys, wb, 1), std::runtime_error);
    }
}

TEST_CASE("geodesic interpolation") {
    const auto M = MetricMeasureSpace::grid(1, {{-3.0, 3.0}}, 0.05);
    const auto mu = bump(M, -1.0, 0.3);
    const auto nu = bump(M, 1.0, 0.3);
    const auto sol = w2(M, mu, nu);

    SUBCASE("endpoints reproduce the inputs") {
        const auto at0 = geodesic_interpolate(M, sol, 0.0);
        const auto at1 = geodesic_interpolate(M, sol, 1.0);
        for (int i = 0; i < M.size(); ++i) {
            CHECK(at0[i] == doctest::Approx(mu[i]).epsilon(1e-9));
            CHECK(at1[i] == doctest::Approx(nu[i]).epsilon(1e-9));
        }
    }
    SUBCASE("midpoint of point masses sits at the midpoint") {
        const auto sol2 = w2(M, point_mass(M, 40), point_mass(M, 80));
        const auto mid = geodesic_interpolate(M, sol2, 0.5);
        const int expect = 60;
        CHECK(mid[expect] * M.weight(expect) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("mass is conserved at every t") {
        for (double t : {0.2, 0.35, 0.8}) {
            const auto mid = geodesic_interpolate(M, sol, t);
            double mass = 0.0;
            for (int i = 0; i < M.size(); ++i) mass += mid[i] * M.weight(i);
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("constant speed along the geodesic") {
        const double total = sol.w2;
        const auto at_s = geodesic_interpolate(M, sol, 0.3);
        const auto at_t = geodesic_interpolate(M, sol, 0.7);
        const double seg = w2(M, at_s, at_t).w2;
        CHECK(seg == doctest::Approx(0.4 * total).epsilon(0.03));
    }
    SUBCASE("graph backend is refused") {
        std::vector<double> dist{0, 1, 1, 0};
        const auto G = MetricMeasureSpace::graph(dist, {1, 1});
        TransportSolution fake;
        fake.plan = {{0, 1, 1.0}};
        CHECK_THROWS_AS(geodesic_interpolate(G, fake, 0.5), std::domain_error);
    }
}

TEST_CASE("entropic regularization") {
    const auto M = MetricMeasureSpace::grid(1, {{0.0, 1.0}}, 1.0 / 49.0);  // 50 points
    REQUIRE(M.size() == 50);
    const double h = M.layout().spacing;
    const auto mu = bump(M, 0.3, 0.08);
    const auto nu = bump(M, 0.7, 0.08);
    const double exact = w2(M, mu, nu).w2;

    TransportOptions opts;
    double previous = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 0.1, 0.01}) {
        opts.epsilon = scale * h * h;
        const auto sol = w2(M, mu, nu, TransportMethod::entropic, opts);
        CHECK(sol.approximate);
        CHECK(sol.w2 >= exact - 1e-9);
        CHECK(sol.w2 <= previous + 1e-12);  // monotone toward the exact value
        previous = sol.w2;
    }
    CHECK(previous == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("metric Brenier residual") {
    SUBCASE("identical point masses give zero residual") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto mu = point_mass(M, 10);
        const auto sol = w2(M, mu, mu);
        CHECK(metric_brenier_residual(M, sol, mu) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("fine 1d translates resolve the potential") {
        const auto M = MetricMeasureSpace::grid(1, {{-3.0, 3.0}}, 0.02);
        const auto mu = bump(M, -1.0, 0.3);
        const auto nu = bump(M, 0.0, 0.3);
        const auto sol = w2(M, mu, nu);
        CHECK(metric_brenier_residual(M, sol, mu) <= 0.05);
    }
}

TEST_CASE("exact solver rejects oversized supports") {
    const auto M = MetricMeasureSpace::grid(1, {{-3.0, 3.0}}, 0.02);
    const auto mu = bump(M, -1.0, 0.3);
    const auto nu = bump(M, 1.0, 0.3);
    TransportOptions opts;
    opts.support_cap = 10;
    CHECK_THROWS_AS(w2(M, mu, nu, TransportMethod::exact_lp, opts), std::length_error);
}
