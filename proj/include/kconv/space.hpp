#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kconv {

enum class Backend { grid, graph };

// ============================================================================
// Grid layout
// ============================================================================

/// Uniform lattice embedded in R^d. Points are ordered row-major with the
/// last axis fastest; point i has coordinate origin[a] + idx[a]*spacing.
struct GridLayout {
    int dim = 0;
    double spacing = 0.0;
    std::vector<double> origin;  // per-axis lower bound
    std::vector<int> extent;     // points per axis
    std::vector<int> stride;

    int flat_index(std::span<const int> idx) const;
    void unflatten(int flat, std::span<int> idx) const;
    int point_count() const;

    /// Cells from the nearest boundary along any axis (0 on the boundary).
    int boundary_distance(int flat) const;
};

// ============================================================================
// Fields over a space
// ============================================================================

/// Plain per-point values. Entries must be finite.
struct ScalarField {
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(std::vector<double> v);
    ScalarField(int n, double fill) : values(static_cast<std::size_t>(n), fill) {}

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
};

class MetricMeasureSpace;

/// Probability density with respect to the reference weights.
/// Sum(rho * weights) must equal 1 to 1e-10; compression is never cached.
class Density {
public:
    Density(std::vector<double> rho, const MetricMeasureSpace& space);

    /// Normalize nonnegative raw values to unit total mass.
    static Density normalized(std::vector<double> raw, const MetricMeasureSpace& space);

    const std::vector<double>& rho() const { return rho_; }
    double operator[](int i) const { return rho_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(rho_.size()); }
    double compression() const;

private:
    std::vector<double> rho_;
};

/// Velocity-like field. Grid backend stores n x d components; graph backend
/// stores one value per canonical edge (i<j), oriented i -> j, so
/// antisymmetry b(i->j) = -b(j->i) holds by construction.
class VectorField {
public:
    static VectorField grid_field(const MetricMeasureSpace& space, std::vector<double> components);
    static VectorField graph_field(const MetricMeasureSpace& space, std::vector<double> edge_values);
    static VectorField zero(const MetricMeasureSpace& space);

    Backend backend() const { return backend_; }
    int dim() const { return dim_; }
    int size() const { return n_; }

    // grid access
    double component(int i, int axis) const { return data_[static_cast<std::size_t>(i) * dim_ + axis]; }
    double& component(int i, int axis) { return data_[static_cast<std::size_t>(i) * dim_ + axis]; }
    std::span<const double> at(int i) const { return {data_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)}; }

    // graph access
    double edge_value(int e) const { return data_[static_cast<std::size_t>(e)]; }
    double& edge_value(int e) { return data_[static_cast<std::size_t>(e)]; }

    const std::vector<double>& raw() const { return data_; }

private:
    VectorField(Backend b, int n, int dim, std::vector<double> data)
        : backend_(b), n_(n), dim_(dim), data_(std::move(data)) {}

    Backend backend_;
    int n_;
    int dim_;
    std::vector<double> data_;
};

// ============================================================================
// Metric measure space
// ============================================================================

struct GraphEdge {
    int a = 0;  // canonical orientation a < b
    int b = 0;
    double length = 0.0;
    double weight = 1.0;  // combinatorial edge weight used by graph calculus
};

class MetricMeasureSpace {
public:
    /// Uniform lattice on a box. weights[i] = spacing^dim for every cell.
    static MetricMeasureSpace grid(int dim, const std::vector<std::pair<double, double>>& bounds,
                                   double spacing, std::size_t point_cap = 1'000'000);

    /// Explicit metric: dist is n x n row-major. Distances are taken as
    /// given; see floyd_warshall_complete for edge-length completion.
    /// If edges is empty, the complete graph on off-diagonal pairs is used.
    static MetricMeasureSpace graph(std::vector<double> dist, std::vector<double> weights,
                                    std::vector<GraphEdge> edges = {});

    Backend backend() const { return backend_; }
    int size() const { return n_; }
    int dim() const { return backend_ == Backend::grid ? layout_.dim : 0; }

    double distance(int i, int j) const;
    double squared_distance(int i, int j) const;

    double weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& weights() const { return weights_; }
    double total_mass() const;

    // grid-only accessors
    const GridLayout& layout() const;
    std::span<const double> point(int i) const;
    const std::vector<double>& coords() const { return coords_; }
    int boundary_distance(int i) const;
    bool is_interior(int i) const { return boundary_distance(i) >= 1; }

    // graph-only accessors
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const std::vector<std::vector<int>>& incident_edges() const { return incident_; }
    const std::vector<double>& dist_matrix() const { return dist_; }

    /// Index of the point nearest the coordinate origin (grid); 0 for graphs.
    int base_point() const { return base_point_; }

    MetricMeasureSpace with_weights(std::vector<double> weights) const;

private:
    MetricMeasureSpace() = default;

    Backend backend_ = Backend::grid;
    int n_ = 0;
    GridLayout layout_;
    std::vector<double> coords_;   // grid: n*dim
    std::vector<double> dist_;     // graph: n*n
    std::vector<double> weights_;
    std::vector<GraphEdge> edges_;          // graph
    std::vector<std::vector<int>> incident_;  // graph: per-vertex edge ids
    int base_point_ = 0;
};

// ============================================================================
// Operations
// ============================================================================

struct MetricViolation {
    enum class Kind { asymmetry, nonzero_diagonal, negative_distance, triangle, nonpositive_weight };
    Kind kind;
    std::array<int, 3> where{-1, -1, -1};
    double magnitude = 0.0;
    std::string describe() const;
};

struct ValidationReport {
    std::vector<MetricViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Check metric axioms and weight positivity. Grid distances are Euclidean by
/// construction, so only weights are scanned there; graph backends get the
/// full O(n^3) triangle scan.
ValidationReport validate_metric(const MetricMeasureSpace& space);

/// weights'[i] = exp(-m_factor * u[i]) * weights[i]; distances unchanged.
MetricMeasureSpace reweight_exponential(const MetricMeasureSpace& space, const ScalarField& u,
                                        double m_factor);

/// All-pairs shortest paths over an edge-length graph; infinite entries mean
/// a disconnected pair and are reported as an error.
std::vector<double> floyd_warshall_complete(int n, const std::vector<GraphEdge>& edges);

}  // namespace kconv
