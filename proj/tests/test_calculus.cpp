#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>
#include <random>

#include "kconv/calculus.hpp"
#include "kconv/space.hpp"

using namespace kconv;

namespace {

ScalarField sample(const MetricMeasureSpace& M, double (*fn)(double)) {
    ScalarField f(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i) f[i] = fn(M.point(i)[0]);
    return f;
}

ScalarField sample2(const MetricMeasureSpace& M, double (*fn)(double, double)) {
    ScalarField f(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i) f[i] = fn(M.point(i)[0], M.point(i)[1]);
    return f;
}

// Smooth compactly supported test function, zero within three cells of the
// boundary so every discrete pairing identity telescopes exactly.
ScalarField interior_bump(const MetricMeasureSpace& M, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coeff(0.2, 1.0);
    const double a = coeff(rng), b = coeff(rng);
    ScalarField g(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i) {
        if (M.boundary_distance(i) < 3) continue;
        double s = 1.0;
        for (int ax = 0; ax < M.dim(); ++ax) {
            const double x = M.point(i)[ax];
            s *= std::exp(-a * x * x) * (1.0 + 0.3 * std::sin(b + 2.0 * x));
        }
        g[i] = s;
    }
    return g;
}

const double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("gradient on grids") {
    const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
    SUBCASE("constant has zero gradient") {
        const auto g = gradient(M, ScalarField(M.size(), 3.0));
        for (int i = 0; i < M.size(); ++i) CHECK(g.component(i, 0) == 0.0);
    }
    SUBCASE("linear is exact everywhere") {
        const auto g = gradient(M, sample(M, [](double x) { return x; }));
        for (int i = 0; i < M.size(); ++i) CHECK(g.component(i, 0) == doctest::Approx(1.0));
    }
    SUBCASE("central difference is exact on quadratics") {
        const auto g = gradient(M, sample(M, [](double x) { return x * x; }));
        const int at_one_interior = 15;  // x = 0.5
        CHECK(M.point(at_one_interior)[0] == doctest::Approx(0.5));
        CHECK(g.component(at_one_interior, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("weak gradient norm") {
    SUBCASE("1d linear") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto n = weak_gradient_norm(M, sample(M, [](double x) { return x; }));
        for (int i = 0; i < M.size(); ++i)
            if (M.is_interior(i)) CHECK(n[i] == doctest::Approx(1.0));
    }
    SUBCASE("2d diagonal linear gives sqrt(2)") {
        const auto M = MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.25);
        const auto n = weak_gradient_norm(M, sample2(M, [](double x, double y) { return x + y; }));
        for (int i = 0; i < M.size(); ++i)
            if (M.is_interior(i)) CHECK(n[i] == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("central differences flatten the kink of |x|") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto n = weak_gradient_norm(M, sample(M, [](double x) { return std::abs(x); }));
        CHECK(n[10] == doctest::Approx(0.0));  // x = 0
    }
}

TEST_CASE("divergence on grids") {
    const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
    const int n = M.size();
    SUBCASE("constant field") {
        const auto d = divergence(M, VectorField::grid_field(M, std::vector<double>(n, 2.0)));
        for (int i = 0; i < n; ++i)
            if (M.is_interior(i)) CHECK(d[i] == doctest::Approx(0.0));
    }
    SUBCASE("identity field has unit divergence") {
        std::vector<double> comps(n);
        for (int i = 0; i < n; ++i) comps[i] = M.point(i)[0];
        const auto d = divergence(M, VectorField::grid_field(M, comps));
        for (int i = 0; i < n; ++i)
            if (M.is_interior(i)) CHECK(d[i] == doctest::Approx(1.0));
    }
    SUBCASE("div grad of x^2/2 is 1") {
        const auto d = divergence(M, gradient(M, sample(M, [](double x) { return 0.5 * x * x; })));
        for (int i = 0; i < n; ++i)
            if (M.boundary_distance(i) >= 2) CHECK(d[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("integration by parts on the grid") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const auto M = MetricMeasureSpace::grid(1, {{-2.0, 2.0}}, 0.05);
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> um(-1.0, 1.0);
        ScalarField f(M.size(), 0.0);
        for (int i = 0; i < M.size(); ++i) f[i] = um(rng);
        const ScalarField g = interior_bump(M, seed + 100);

        const ScalarField div_grad = divergence(M, gradient(M, f));
        const ScalarField inner = field_gradient_inner(M, gradient(M, f), g);
        double lhs = 0.0, norm_f = 0.0, norm_g = 0.0;
        for (int i = 0; i < M.size(); ++i) {
            lhs += (div_grad[i] * g[i] + inner[i]) * M.weight(i);
            norm_f += f[i] * f[i] * M.weight(i);
            norm_g += g[i] * g[i] * M.weight(i);
        }
        CHECK(std::abs(lhs) <= 1e-9 * std::sqrt(norm_f) * std::sqrt(norm_g) + 1e-14);
    }
}

TEST_CASE("graph first-order calculus is exactly adjoint") {
    // random weighted graph, exact integration by parts for every g
    std::mt19937 rng(7);
    const int n = 6;
    std::vector<double> dist(n * n, 0.0);
    std::uniform_real_distribution<double> ud(0.5, 2.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = ud(rng) + 2.0;
    std::vector<double> weights(n);
    for (auto& w : weights) w = ud(rng);
    const auto G = MetricMeasureSpace::graph(dist, weights);

    std::vector<double> edge_vals(G.edges().size());
    for (auto& v : edge_vals) v = ud(rng) - 1.25;
    const auto b = VectorField::graph_field(G, edge_vals);
    ScalarField g(n, 0.0);
    for (int i = 0; i < n; ++i) g[i] = ud(rng);

    const ScalarField div_b = divergence(G, b);
    const ScalarField inner = field_gradient_inner(G, b, g);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += (div_b[i] * g[i] + inner[i]) * G.weight(i);
    CHECK(std::abs(total) <= 1e-12);

    // graph laplacian is div o grad by definition
    const ScalarField lap = laplacian(G, g);
    const ScalarField composed = divergence(G, gradient(G, g));
    for (int i = 0; i < n; ++i) CHECK(lap[i] == doctest::Approx(composed[i]).epsilon(1e-14));
}

TEST_CASE("laplacian stencils") {
    SUBCASE("linear vanishes, quadratic is exact") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto lap_lin = laplacian(M, sample(M, [](double x) { return 3.0 * x + 1.0; }));
        const auto lap_quad = laplacian(M, sample(M, [](double x) { return 0.5 * x * x; }));
        for (int i = 0; i < M.size(); ++i) {
            CHECK(lap_lin[i] == doctest::Approx(0.0));
            CHECK(lap_quad[i] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("2d radial quadratic") {
        const auto M = MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.1);
        const auto lap = laplacian(M, sample2(M, [](double x, double y) { return 0.5 * (x * x + y * y); }));
        for (int i = 0; i < M.size(); ++i)
            if (M.is_interior(i)) CHECK(lap[i] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("agrees with div grad on cubics away from the boundary") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto f = sample(M, [](double x) { return x * x * x - 0.2 * x; });
        const auto lap = laplacian(M, f);
        const auto composed = divergence(M, gradient(M, f));
        for (int i = 0; i < M.size(); ++i)
            if (M.boundary_distance(i) >= 2) CHECK(lap[i] == doctest::Approx(composed[i]).epsilon(1e-10));
    }
}

TEST_CASE("hessian") {
    const auto M = MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.1);
    SUBCASE("linear gives zero matrices") {
        const auto H = hessian(M, sample2(M, [](double x, double y) { return x - 2.0 * y; }));
        for (int i = 0; i < M.size(); ++i)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) CHECK(H.entry(i, a, b) == doctest::Approx(0.0));
    }
    SUBCASE("1d quadratic is exactly K") {
        const auto L = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto H = hessian(L, sample(L, [](double x) { return 1.5 * 0.5 * x * x; }));
        for (int i = 0; i < L.size(); ++i) CHECK(H.entry(i, 0, 0) == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("mixed stencil is exact on bilinear functions") {
        const auto H = hessian(M, sample2(M, [](double x, double y) { return x * y; }));
        for (int i = 0; i < M.size(); ++i) {
            if (!M.is_interior(i)) continue;
            CHECK(H.entry(i, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(H.entry(i, 1, 0) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(H.entry(i, 0, 0) == doctest::Approx(0.0));
        }
    }
    SUBCASE("trace equals the laplacian") {
        const auto f = sample2(M, [](double x, double y) { return std::sin(x) * std::cos(2.0 * y); });
        const auto H = hessian(M, f);
        const auto lap = laplacian(M, f);
        for (int i = 0; i < M.size(); ++i)
            if (M.is_interior(i)) CHECK(H.trace(i) == doctest::Approx(lap[i]).epsilon(1e-9));
    }
    SUBCASE("graph backend is unsupported") {
        std::vector<double> dist{0, 1, 1, 0};
        const auto G = MetricMeasureSpace::graph(dist, {1, 1});
        CHECK_THROWS_AS(hessian(G, ScalarField(2, 0.0)), std::domain_error);
    }
}

TEST_CASE("gamma2 margins") {
    const auto M = MetricMeasureSpace::grid(1, {{-2.0, 2.0}}, 0.05);
    const ScalarField phi = interior_bump(M, 42);
    double phi_mass = 0.0;
    for (int i = 0; i < M.size(); ++i) phi_mass += phi[i] * M.weight(i);

    SUBCASE("linear f on a flat grid has zero margin for any admissible phi") {
        const auto f = sample(M, [](double x) { return x; });
        CHECK(std::abs(gamma2_check(M, f, phi, 0.0, inf)) <= 1e-8);
    }
    SUBCASE("quadratic equality case at N = 1") {
        const auto f = sample(M, [](double x) { return 0.5 * x * x; });
        CHECK(std::abs(gamma2_check(M, f, phi, 0.0, 1.0)) <= 1e-6);
    }
    SUBCASE("quadratic at N = infinity leaves the Hessian term") {
        const auto f = sample(M, [](double x) { return 0.5 * x * x; });
        const double margin = gamma2_check(M, f, phi, 0.0, inf);
        CHECK(margin == doctest::Approx(phi_mass).epsilon(1e-9));
        CHECK(margin > 0.0);
    }
    SUBCASE("negative phi is rejected") {
        ScalarField bad(M.size(), 0.0);
        bad[M.size() / 2] = -1.0;
        CHECK_THROWS_AS(gamma2_check(M, ScalarField(M.size(), 0.0), bad, 0.0, inf),
                        std::invalid_argument);
    }
}

TEST_CASE("infinitesimal certification") {
    SUBCASE("gradient of x^2/2 is exactly 1-monotone") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.05);
        const auto f = sample(M, [](double x) { return 0.5 * x * x; });
        const auto r = infinitesimal_check(M, gradient(M, f), 1.0);
        CHECK(std::abs(r.worst_margin) <= 1e-9);
        CHECK(r.witness >= 0);
    }
    SUBCASE("saddle certifies exactly K = -1") {
        const auto M = MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.1);
        const auto f = sample2(M, [](double x, double y) { return 0.5 * (x * x - y * y); });
        const auto r = infinitesimal_check(M, gradient(M, f), -1.0);
        CHECK(std::abs(r.worst_margin) <= 1e-9);
        const auto fail = infinitesimal_check(M, gradient(M, f), -0.5);
        CHECK(fail.worst_margin == doctest::Approx(-0.5).epsilon(1e-9));
    }
    SUBCASE("constant fields are 0-monotone") {
        const auto M = MetricMeasureSpace::grid(1, {{-1.0, 1.0}}, 0.1);
        const auto r = infinitesimal_check(M, VectorField::grid_field(M, std::vector<double>(M.size(), 4.0)), 0.0);
        CHECK(r.worst_margin == doctest::Approx(0.0));
    }
    SUBCASE("matches the eigenvalue route on a random quadratic") {
        const auto M = MetricMeasureSpace::grid(2, {{-1.0, 1.0}, {-1.0, 1.0}}, 0.1);
        // u = 0.5 (a x^2 + 2 c x y + b y^2); Hessian [[a, c], [c, b]]
        const double a = 1.3, b = -0.4, c = 0.6;
        ScalarField u(M.size(), 0.0);
        for (int i = 0; i < M.size(); ++i) {
            const double x = M.point(i)[0], y = M.point(i)[1];
            u[i] = 0.5 * (a * x * x + b * y * y) + c * x * y;
        }
        const double lam_min =
            0.5 * (a + b) - std::sqrt(0.25 * (a - b) * (a - b) + c * c);
        const auto r = infinitesimal_check(M, gradient(M, u), 0.0);
        CHECK(r.worst_margin == doctest::Approx(lam_min).epsilon(1e-9));

        const auto H = hessian(M, u);
        double worst_eig = inf;
        for (int i = 0; i < M.size(); ++i) {
            if (!M.is_interior(i)) continue;
            std::vector<double> mat{H.entry(i, 0, 0), H.entry(i, 0, 1), H.entry(i, 1, 0),
                                    H.entry(i, 1, 1)};
            worst_eig = std::min(worst_eig, symmetric_eigenvalues(mat, 2).front());
        }
        CHECK(r.worst_margin == doctest::Approx(worst_eig).epsilon(1e-12));
    }
}

TEST_CASE("symmetric eigenvalues by jacobi rotations") {
    std::vector<double> m1{2.0};
    CHECK(symmetric_eigenvalues(m1, 1)[0] == doctest::Approx(2.0));
    std::vector<double> m2{0.0, 1.0, 1.0, 0.0};
    const auto e2 = symmetric_eigenvalues(m2, 2);
    CHECK(e2[0] == doctest::Approx(-1.0));
    CHECK(e2[1] == doctest::Approx(1.0));
    std::vector<double> m3{2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0};
    const auto e3 = symmetric_eigenvalues(m3, 3);
    CHECK(e3[0] == doctest::Approx(2.0 - std::sqrt(2.0)));
    CHECK(e3[1] == doctest::Approx(2.0));
    CHECK(e3[2] == doctest::Approx(2.0 + std::sqrt(2.0)));
}
