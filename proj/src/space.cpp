#include "kconv/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kconv {

// ============================================================================
// GridLayout
// ============================================================================

int GridLayout::flat_index(std::span<const int> idx) const {
    int flat = 0;
    for (int a = 0; a < dim; ++a) flat += idx[a] * stride[a];
    return flat;
}

void GridLayout::unflatten(int flat, std::span<int> idx) const {
    for (int a = 0; a < dim; ++a) {
        idx[a] = flat / stride[a];
        flat -= idx[a] * stride[a];
    }
}

int GridLayout::point_count() const {
    int n = 1;
    for (int e : extent) n *= e;
    return n;
}

int GridLayout::boundary_distance(int flat) const {
    int best = std::numeric_limits<int>::max();
    for (int a = 0; a < dim; ++a) {
        const int ia = (flat / stride[a]) % extent[a];
        best = std::min(best, std::min(ia, extent[a] - 1 - ia));
    }
    return best;
}

// ============================================================================
// Fields
// ============================================================================

ScalarField::ScalarField(std::vector<double> v) : values(std::move(v)) {
    for (double x : values) {
        if (!std::isfinite(x)) throw std::invalid_argument("ScalarField: non-finite entry");
    }
}

Density::Density(std::vector<double> rho, const MetricMeasureSpace& space) : rho_(std::move(rho)) {
    if (static_cast<int>(rho_.size()) != space.size())
        throw std::invalid_argument("Density: size mismatch with space");
    double mass = 0.0;
    for (int i = 0; i < space.size(); ++i) {
        if (!(rho_[i] >= 0.0) || !std::isfinite(rho_[i]))
            throw std::invalid_argument("Density: entries must be finite and nonnegative");
        mass += rho_[i] * space.weight(i);
    }
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::invalid_argument("Density: total mass " + std::to_string(mass) + " != 1");
}

Density Density::normalized(std::vector<double> raw, const MetricMeasureSpace& space) {
    if (static_cast<int>(raw.size()) != space.size())
        throw std::invalid_argument("Density: size mismatch with space");
    double mass = 0.0;
    for (int i = 0; i < space.size(); ++i) {
        if (!(raw[i] >= 0.0) || !std::isfinite(raw[i]))
            throw std::invalid_argument("Density: entries must be finite and nonnegative");
        mass += raw[i] * space.weight(i);
    }
    if (mass <= 0.0) throw std::invalid_argument("Density: cannot normalize zero mass");
    for (double& x : raw) x /= mass;
    return Density(std::move(raw), space);
}

double Density::compression() const {
    double c = 0.0;
    for (double x : rho_) c = std::max(c, x);
    return c;
}

VectorField VectorField::grid_field(const MetricMeasureSpace& space, std::vector<double> components) {
    if (space.backend() != Backend::grid)
        throw std::invalid_argument("VectorField::grid_field: space is not a grid");
    const auto expect = static_cast<std::size_t>(space.size()) * space.dim();
    if (components.size() != expect)
        throw std::invalid_argument("VectorField: expected n*dim components");
    for (double x : components)
        if (!std::isfinite(x)) throw std::invalid_argument("VectorField: non-finite entry");
    return VectorField(Backend::grid, space.size(), space.dim(), std::move(components));
}

VectorField VectorField::graph_field(const MetricMeasureSpace& space, std::vector<double> edge_values) {
    if (space.backend() != Backend::graph)
        throw std::invalid_argument("VectorField::graph_field: space is not a graph");
    if (edge_values.size() != space.edges().size())
        throw std::invalid_argument("VectorField: one value per canonical edge expected");
    for (double x : edge_values)
        if (!std::isfinite(x)) throw std::invalid_argument("VectorField: non-finite entry");
    return VectorField(Backend::graph, space.size(), 0, std::move(edge_values));
}

VectorField VectorField::zero(const MetricMeasureSpace& space) {
    if (space.backend() == Backend::grid)
        return grid_field(space, std::vector<double>(static_cast<std::size_t>(space.size()) * space.dim(), 0.0));
    return graph_field(space, std::vector<double>(space.edges().size(), 0.0));
}

// ============================================================================
// MetricMeasureSpace
// ============================================================================

MetricMeasureSpace MetricMeasureSpace::grid(int dim, const std::vector<std::pair<double, double>>& bounds,
                                            double spacing, std::size_t point_cap) {
    if (dim < 1) throw std::invalid_argument("grid: dimension must be >= 1");
    if (!(spacing > 0.0)) throw std::invalid_argument("grid: spacing must be positive");
    if (static_cast<int>(bounds.size()) != dim)
        throw std::invalid_argument("grid: need one bound interval per axis");

    GridLayout layout;
    layout.dim = dim;
    layout.spacing = spacing;
    layout.origin.resize(dim);
    layout.extent.resize(dim);
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) {
        const auto [lo, hi] = bounds[a];
        if (!(hi > lo)) throw std::invalid_argument("grid: degenerate interval on axis " + std::to_string(a));
        layout.origin[a] = lo;
        // +1e-9 absorbs representation error in (hi-lo)/h for exact multiples
        layout.extent[a] = static_cast<int>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
        n *= static_cast<std::size_t>(layout.extent[a]);
        if (n > point_cap)
            throw std::length_error("grid: point count exceeds cap " + std::to_string(point_cap));
    }
    layout.stride.resize(dim);
    layout.stride[dim - 1] = 1;
    for (int a = dim - 2; a >= 0; --a) layout.stride[a] = layout.stride[a + 1] * layout.extent[a + 1];

    MetricMeasureSpace s;
    s.backend_ = Backend::grid;
    s.n_ = static_cast<int>(n);
    s.layout_ = layout;
    s.coords_.resize(n * static_cast<std::size_t>(dim));
    std::vector<int> idx(dim);
    for (int i = 0; i < s.n_; ++i) {
        layout.unflatten(i, idx);
        for (int a = 0; a < dim; ++a)
            s.coords_[static_cast<std::size_t>(i) * dim + a] = layout.origin[a] + idx[a] * spacing;
    }
    const double cell = std::pow(spacing, dim);
    s.weights_.assign(n, cell);

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.n_; ++i) {
        double r2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double x = s.coords_[static_cast<std::size_t>(i) * dim + a];
            r2 += x * x;
        }
        if (r2 < best) {
            best = r2;
            s.base_point_ = i;
        }
    }
    return s;
}

MetricMeasureSpace MetricMeasureSpace::graph(std::vector<double> dist, std::vector<double> weights,
                                             std::vector<GraphEdge> edges) {
    const auto n = weights.size();
    if (dist.size() != n * n) throw std::invalid_argument("graph: dist must be n*n");
    MetricMeasureSpace s;
    s.backend_ = Backend::graph;
    s.n_ = static_cast<int>(n);
    s.dist_ = std::move(dist);
    s.weights_ = std::move(weights);
    if (edges.empty()) {
        for (int i = 0; i < s.n_; ++i)
            for (int j = i + 1; j < s.n_; ++j)
                edges.push_back({i, j, s.dist_[static_cast<std::size_t>(i) * n + j], 1.0});
    }
    for (auto& e : edges) {
        if (e.a == e.b) throw std::invalid_argument("graph: self-loop edge");
        if (e.a > e.b) std::swap(e.a, e.b);
        if (e.a < 0 || e.b >= s.n_) throw std::invalid_argument("graph: edge endpoint out of range");
        if (!(e.length > 0.0)) throw std::invalid_argument("graph: edge length must be positive");
    }
    s.edges_ = std::move(edges);
    s.incident_.resize(n);
    for (int e = 0; e < static_cast<int>(s.edges_.size()); ++e) {
        s.incident_[s.edges_[e].a].push_back(e);
        s.incident_[s.edges_[e].b].push_back(e);
    }
    s.base_point_ = 0;
    return s;
}

double MetricMeasureSpace::distance(int i, int j) const {
    if (backend_ == Backend::graph) return dist_[static_cast<std::size_t>(i) * n_ + j];
    double r2 = 0.0;
    const int d = layout_.dim;
    const double* pi = coords_.data() + static_cast<std::size_t>(i) * d;
    const double* pj = coords_.data() + static_cast<std::size_t>(j) * d;
    for (int a = 0; a < d; ++a) {
        const double dx = pi[a] - pj[a];
        r2 += dx * dx;
    }
    return std::sqrt(r2);
}

double MetricMeasureSpace::squared_distance(int i, int j) const {
    if (backend_ == Backend::graph) {
        const double d = dist_[static_cast<std::size_t>(i) * n_ + j];
        return d * d;
    }
    double r2 = 0.0;
    const int d = layout_.dim;
    const double* pi = coords_.data() + static_cast<std::size_t>(i) * d;
    const double* pj = coords_.data() + static_cast<std::size_t>(j) * d;
    for (int a = 0; a < d; ++a) {
        const double dx = pi[a] - pj[a];
        r2 += dx * dx;
    }
    return r2;
}

double MetricMeasureSpace::total_mass() const {
    double m = 0.0;
    for (double w : weights_) m += w;
    return m;
}

const GridLayout& MetricMeasureSpace::layout() const {
    if (backend_ != Backend::grid) throw std::domain_error("layout: graph backend has no grid layout");
    return layout_;
}

std::span<const double> MetricMeasureSpace::point(int i) const {
    if (backend_ != Backend::grid) throw std::domain_error("point: graph backend has no coordinates");
    return {coords_.data() + static_cast<std::size_t>(i) * layout_.dim, static_cast<std::size_t>(layout_.dim)};
}

int MetricMeasureSpace::boundary_distance(int i) const {
    if (backend_ != Backend::grid) return 1;  // graphs have no boundary layer
    return layout_.boundary_distance(i);
}

MetricMeasureSpace MetricMeasureSpace::with_weights(std::vector<double> weights) const {
    if (static_cast<int>(weights.size()) != n_)
        throw std::invalid_argument("with_weights: size mismatch");
    MetricMeasureSpace s(*this);
    s.weights_ = std::move(weights);
    return s;
}

// ============================================================================
// validate_metric / reweight / completion
// ============================================================================

std::string MetricViolation::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::asymmetry:
            os << "asymmetry at (" << where[0] << "," << where[1] << "), |d_ij - d_ji| = " << magnitude;
            break;
        case Kind::nonzero_diagonal:
            os << "nonzero diagonal at " << where[0] << ", d_ii = " << magnitude;
            break;
        case Kind::negative_distance:
            os << "negative distance at (" << where[0] << "," << where[1] << ") = " << magnitude;
            break;
        case Kind::triangle:
            os << "triangle violation witness (" << where[0] << "," << where[1] << "," << where[2]
               << "), excess = " << magnitude;
            break;
        case Kind::nonpositive_weight:
            os << "nonpositive weight at index " << where[0] << " = " << magnitude;
            break;
    }
    return os.str();
}

ValidationReport validate_metric(const MetricMeasureSpace& space) {
    ValidationReport report;
    const int n = space.size();
    for (int i = 0; i < n; ++i) {
        if (!(space.weight(i) > 0.0))
            report.violations.push_back({MetricViolation::Kind::nonpositive_weight, {i, -1, -1}, space.weight(i)});
    }
    if (space.backend() == Backend::grid) return report;  // Euclidean by construction

    const auto& d = space.dist_matrix();
    const auto at = [&](int i, int j) { return d[static_cast<std::size_t>(i) * n + j]; };
    for (int i = 0; i < n; ++i) {
        if (at(i, i) != 0.0)
            report.violations.push_back({MetricViolation::Kind::nonzero_diagonal, {i, -1, -1}, at(i, i)});
        for (int j = i + 1; j < n; ++j) {
            if (at(i, j) != at(j, i))
                report.violations.push_back(
                    {MetricViolation::Kind::asymmetry, {i, j, -1}, std::abs(at(i, j) - at(j, i))});
            if (at(i, j) < 0.0)
                report.violations.push_back({MetricViolation::Kind::negative_distance, {i, j, -1}, at(i, j)});
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            for (int k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                const double excess = at(i, j) - at(i, k) - at(k, j);
                if (excess > 1e-12 * std::max(1.0, at(i, j)))
                    report.violations.push_back({MetricViolation::Kind::triangle, {i, k, j}, excess});
            }
        }
    return report;
}

MetricMeasureSpace reweight_exponential(const MetricMeasureSpace& space, const ScalarField& u,
                                        double m_factor) {
    if (u.size() != space.size()) throw std::invalid_argument("reweight_exponential: field size mismatch");
    if (!(m_factor >= 0.0)) throw std::invalid_argument("reweight_exponential: m_factor must be >= 0");
    std::vector<double> w(space.weights());
    for (int i = 0; i < space.size(); ++i) {
        const double f = std::exp(-m_factor * u[i]);
        if (!std::isfinite(f))
            throw std::range_error("reweight_exponential: exp overflow at index " + std::to_string(i));
        w[i] *= f;
    }
    return space.with_weights(std::move(w));
}

std::vector<double> floyd_warshall_complete(int n, const std::vector<GraphEdge>& edges) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(static_cast<std::size_t>(n) * n, inf);
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i) * n + i] = 0.0;
    for (const auto& e : edges) {
        auto& fwd = d[static_cast<std::size_t>(e.a) * n + e.b];
        auto& bwd = d[static_cast<std::size_t>(e.b) * n + e.a];
        fwd = std::min(fwd, e.length);
        bwd = std::min(bwd, e.length);
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            const double dik = d[static_cast<std::size_t>(i) * n + k];
            if (dik == inf) continue;
            for (int j = 0; j < n; ++j) {
                const double via = dik + d[static_cast<std::size_t>(k) * n + j];
                auto& dij = d[static_cast<std::size_t>(i) * n + j];
                if (via < dij) dij = via;
            }
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (d[static_cast<std::size_t>(i) * n + j] == inf)
                throw std::runtime_error("floyd_warshall_complete: graph is disconnected");
    return d;
}

}  // namespace kconv
