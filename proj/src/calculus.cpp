#include "kconv/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kconv {

namespace {

int axis_index(const GridLayout& L, int flat, int a) { return (flat / L.stride[a]) % L.extent[a]; }

// Per-axis first derivative: central where possible, one-sided at the edge.
// The edge stencils are the 3-point second-order ones, so linear and
// quadratic fields differentiate exactly everywhere.
double first_difference(const GridLayout& L, const std::vector<double>& f, int i, int a) {
    const int s = L.stride[a];
    const int ia = axis_index(L, i, a);
    const int ext = L.extent[a];
    const double h = L.spacing;
    if (ext < 2) return 0.0;
    if (ia == 0)
        return ext >= 3 ? (-3.0 * f[i] + 4.0 * f[i + s] - f[i + 2 * s]) / (2.0 * h)
                        : (f[i + s] - f[i]) / h;
    if (ia == ext - 1)
        return ext >= 3 ? (3.0 * f[i] - 4.0 * f[i - s] + f[i - 2 * s]) / (2.0 * h)
                        : (f[i] - f[i - s]) / h;
    return (f[i + s] - f[i - s]) / (2.0 * h);
}

// Per-axis second derivative; the stencil shifts inward at the boundary,
// which keeps it exact on quadratics.
double second_difference(const GridLayout& L, const std::vector<double>& f, int i, int a) {
    const int s = L.stride[a];
    const int ext = L.extent[a];
    if (ext < 3) return 0.0;
    const int ia = std::clamp(axis_index(L, i, a), 1, ext - 2);
    const int c = i + (ia - axis_index(L, i, a)) * s;
    const double h = L.spacing;
    return (f[c + s] - 2.0 * f[c] + f[c - s]) / (h * h);
}

// Normalized incident edge weights: hat_w[vertex][slot] sums to 1 per vertex.
std::vector<std::vector<double>> normalized_edge_weights(const MetricMeasureSpace& M) {
    const auto& inc = M.incident_edges();
    const auto& edges = M.edges();
    std::vector<std::vector<double>> hat(inc.size());
    for (std::size_t v = 0; v < inc.size(); ++v) {
        double total = 0.0;
        for (int e : inc[v]) total += edges[e].weight;
        hat[v].resize(inc[v].size());
        for (std::size_t k = 0; k < inc[v].size(); ++k)
            hat[v][k] = total > 0.0 ? edges[inc[v][k]].weight / total : 0.0;
    }
    return hat;
}

// Oriented edge value b(v -> other endpoint) for canonical edge e.
double oriented(const VectorField& b, const GraphEdge& e, int v, int edge_id) {
    return v == e.a ? b.edge_value(edge_id) : -b.edge_value(edge_id);
}

}  // namespace

// ============================================================================
// gradient / weak gradient norm
// ============================================================================

VectorField gradient(const MetricMeasureSpace& M, const ScalarField& f) {
    if (f.size() != M.size()) throw std::invalid_argument("gradient: field size mismatch");
    if (M.backend() == Backend::grid) {
        const auto& L = M.layout();
        std::vector<double> comps(static_cast<std::size_t>(M.size()) * L.dim);
        for (int i = 0; i < M.size(); ++i)
            for (int a = 0; a < L.dim; ++a)
                comps[static_cast<std::size_t>(i) * L.dim + a] = first_difference(L, f.values, i, a);
        return VectorField::grid_field(M, std::move(comps));
    }
    const auto& edges = M.edges();
    std::vector<double> vals(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e)
        vals[e] = (f[edges[e].b] - f[edges[e].a]) / edges[e].length;
    return VectorField::graph_field(M, std::move(vals));
}

ScalarField weak_gradient_norm(const MetricMeasureSpace& M, const ScalarField& f) {
    if (f.size() != M.size()) throw std::invalid_argument("weak_gradient_norm: field size mismatch");
    ScalarField out(M.size(), 0.0);
    if (M.backend() == Backend::grid) {
        const VectorField g = gradient(M, f);
        for (int i = 0; i < M.size(); ++i) {
            double s = 0.0;
            for (int a = 0; a < M.dim(); ++a) s += g.component(i, a) * g.component(i, a);
            out[i] = std::sqrt(s);
        }
        return out;
    }
    const auto hat = normalized_edge_weights(M);
    const auto& inc = M.incident_edges();
    const auto& edges = M.edges();
    for (int v = 0; v < M.size(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < inc[v].size(); ++k) {
            const auto& e = edges[inc[v][k]];
            const double q = (f[e.b] - f[e.a]) / e.length;
            s += hat[v][k] * q * q;
        }
        out[v] = std::sqrt(s);
    }
    return out;
}

// ============================================================================
// divergence and pairings
// ============================================================================

ScalarField divergence(const MetricMeasureSpace& M, const VectorField& b) {
    if (b.size() != M.size() && M.backend() == Backend::grid)
        throw std::invalid_argument("divergence: field size mismatch");
    ScalarField out(M.size(), 0.0);
    if (M.backend() == Backend::grid) {
        const auto& L = M.layout();
        std::vector<double> column(static_cast<std::size_t>(M.size()));
        for (int a = 0; a < L.dim; ++a) {
            for (int i = 0; i < M.size(); ++i) column[i] = b.component(i, a);
            for (int i = 0; i < M.size(); ++i) out[i] += first_difference(L, column, i, a);
        }
        return out;
    }
    const auto hat = normalized_edge_weights(M);
    const auto& inc = M.incident_edges();
    const auto& edges = M.edges();
    for (int v = 0; v < M.size(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < inc[v].size(); ++k) {
            const int eid = inc[v][k];
            const auto& e = edges[eid];
            const int other = v == e.a ? e.b : e.a;
            // find hat weight of this edge at the other endpoint
            double hat_other = 0.0;
            for (std::size_t k2 = 0; k2 < inc[other].size(); ++k2)
                if (inc[other][k2] == eid) {
                    hat_other = hat[other][k2];
                    break;
                }
            const double coeff = (M.weight(v) * hat[v][k] + M.weight(other) * hat_other) / e.length;
            s += coeff * oriented(b, e, v, eid);
        }
        out[v] = s / M.weight(v);
    }
    return out;
}

ScalarField field_gradient_inner(const MetricMeasureSpace& M, const VectorField& b, const ScalarField& g) {
    if (g.size() != M.size()) throw std::invalid_argument("field_gradient_inner: field size mismatch");
    ScalarField out(M.size(), 0.0);
    if (M.backend() == Backend::grid) {
        const VectorField dg = gradient(M, g);
        for (int i = 0; i < M.size(); ++i) {
            double s = 0.0;
            for (int a = 0; a < M.dim(); ++a) s += b.component(i, a) * dg.component(i, a);
            out[i] = s;
        }
        return out;
    }
    const auto hat = normalized_edge_weights(M);
    const auto& inc = M.incident_edges();
    const auto& edges = M.edges();
    for (int v = 0; v < M.size(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < inc[v].size(); ++k) {
            const int eid = inc[v][k];
            const auto& e = edges[eid];
            const int other = v == e.a ? e.b : e.a;
            const double dq = (g[other] - g[v]) / e.length;
            s += hat[v][k] * oriented(b, e, v, eid) * dq;
        }
        out[v] = s;
    }
    return out;
}

// ============================================================================
// laplacian / hessian
// ============================================================================

ScalarField laplacian(const MetricMeasureSpace& M, const ScalarField& f) {
    if (f.size() != M.size()) throw std::invalid_argument("laplacian: field size mismatch");
    if (M.backend() == Backend::graph) return divergence(M, gradient(M, f));
    const auto& L = M.layout();
    ScalarField out(M.size(), 0.0);
    for (int i = 0; i < M.size(); ++i) {
        double s = 0.0;
        for (int a = 0; a < L.dim; ++a) s += second_difference(L, f.values, i, a);
        out[i] = s;
    }
    return out;
}

double HessianField::trace(int i) const {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) s += entry(i, a, a);
    return s;
}

double HessianField::hs_norm(int i) const {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) s += entry(i, a, b) * entry(i, a, b);
    return std::sqrt(s);
}

HessianField hessian(const MetricMeasureSpace& M, const ScalarField& f) {
    if (M.backend() != Backend::grid)
        throw std::domain_error("hessian: unsupported backend (graph has no grid Hessian)");
    if (f.size() != M.size()) throw std::invalid_argument("hessian: field size mismatch");
    const auto& L = M.layout();
    const int d = L.dim;
    const double h = L.spacing;
    HessianField H(M.size(), d);
    for (int i = 0; i < M.size(); ++i) {
        for (int a = 0; a < d; ++a) H.entry(i, a, a) = second_difference(L, f.values, i, a);
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b) {
                if (L.extent[a] < 3 || L.extent[b] < 3) continue;
                const int sa = L.stride[a], sb = L.stride[b];
                const int ca = std::clamp(axis_index(L, i, a), 1, L.extent[a] - 2);
                const int cb = std::clamp(axis_index(L, i, b), 1, L.extent[b] - 2);
                const int c = i + (ca - axis_index(L, i, a)) * sa + (cb - axis_index(L, i, b)) * sb;
                const double cross = (f[c + sa + sb] - f[c + sa - sb] - f[c - sa + sb] + f[c - sa - sb]) /
                                     (4.0 * h * h);
                H.entry(i, a, b) = cross;
                H.entry(i, b, a) = cross;
            }
        // enforce exact symmetry after assembly
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b) {
                const double sym = 0.5 * (H.entry(i, a, b) + H.entry(i, b, a));
                H.entry(i, a, b) = sym;
                H.entry(i, b, a) = sym;
            }
    }
    return H;
}

// ============================================================================
// Gamma_2 and infinitesimal checks
// ============================================================================

double gamma2_check(const MetricMeasureSpace& M, const ScalarField& f, const ScalarField& phi,
                    double k, double N) {
    if (M.backend() != Backend::grid) throw std::domain_error("gamma2_check: grid backend required");
    if (f.size() != M.size() || phi.size() != M.size())
        throw std::invalid_argument("gamma2_check: field size mismatch");
    for (int i = 0; i < M.size(); ++i)
        if (phi[i] < 0.0)
            throw std::invalid_argument("gamma2_check: negative phi entry at index " + std::to_string(i));

    const ScalarField df_norm = weak_gradient_norm(M, f);
    const ScalarField lap_f = laplacian(M, f);
    const ScalarField lap_phi = laplacian(M, phi);
    const ScalarField grad_pair = field_gradient_inner(M, gradient(M, f), lap_f);

    // interior quantification: the compact Laplacian pairing telescopes
    // exactly for test functions supported two cells inside
    double gamma2 = 0.0, energy = 0.0, dim_term = 0.0;
    for (int i = 0; i < M.size(); ++i) {
        if (!M.is_interior(i)) continue;
        const double w = M.weight(i);
        gamma2 += (0.5 * df_norm[i] * df_norm[i] * lap_phi[i] - grad_pair[i] * phi[i]) * w;
        energy += df_norm[i] * df_norm[i] * phi[i] * w;
        dim_term += lap_f[i] * lap_f[i] * phi[i] * w;
    }
    const double inv_n = std::isinf(N) ? 0.0 : 1.0 / N;
    return gamma2 - k * energy - inv_n * dim_term;
}

std::vector<double> symmetric_eigenvalues(std::span<const double> mat, int dim) {
    std::vector<double> a(mat.begin(), mat.end());
    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * dim + c]; };
    if (dim == 1) return {a[0]};

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < dim; ++p)
            for (int q = p + 1; q < dim; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-28) break;
        for (int p = 0; p < dim; ++p)
            for (int q = p + 1; q < dim; ++q) {
                if (at(p, q) == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int r = 0; r < dim; ++r) {
                    const double arp = at(r, p), arq = at(r, q);
                    at(r, p) = c * arp - s * arq;
                    at(r, q) = s * arp + c * arq;
                }
                for (int r = 0; r < dim; ++r) {
                    const double apr = at(p, r), aqr = at(q, r);
                    at(p, r) = c * apr - s * aqr;
                    at(q, r) = s * apr + c * aqr;
                }
            }
    }
    std::vector<double> eig(dim);
    for (int i = 0; i < dim; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

InfinitesimalResult infinitesimal_check(const MetricMeasureSpace& M, const VectorField& b, double K) {
    if (M.backend() != Backend::grid)
        throw std::domain_error("infinitesimal_check: unsupported backend");
    const auto& L = M.layout();
    const int d = L.dim;
    const double h = L.spacing;

    InfinitesimalResult result;
    result.worst_margin = std::numeric_limits<double>::infinity();
    std::vector<double> sym(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < M.size(); ++i) {
        if (M.boundary_distance(i) < 1) continue;
        // J[a][c] = d(b_c)/dx_a by central differences
        for (int a = 0; a < d; ++a)
            for (int c = 0; c < d; ++c) {
                const int s = L.stride[a];
                const double dac = (b.component(i + s, c) - b.component(i - s, c)) / (2.0 * h);
                sym[static_cast<std::size_t>(a) * d + c] = dac;
            }
        for (int a = 0; a < d; ++a)
            for (int c = a + 1; c < d; ++c) {
                const double v = 0.5 * (sym[static_cast<std::size_t>(a) * d + c] +
                                        sym[static_cast<std::size_t>(c) * d + a]);
                sym[static_cast<std::size_t>(a) * d + c] = v;
                sym[static_cast<std::size_t>(c) * d + a] = v;
            }
        const auto eig = symmetric_eigenvalues(sym, d);
        const double margin = eig.front() - K;
        if (margin < result.worst_margin) {
            result.worst_margin = margin;
            result.witness = i;
        }
    }
    return result;
}

}  // namespace kconv
