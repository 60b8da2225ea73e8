#pragma once

#include "kconv/space.hpp"

namespace kconv {

// ============================================================================
// First-order operators
// ============================================================================

/// Discrete gradient. Grid: central differences at interior points along each
/// axis, one-sided at the boundary. Graph: edge difference quotients
/// (f[j]-f[i])/d_ij on the canonical orientation.
VectorField gradient(const MetricMeasureSpace& space, const ScalarField& f);

/// Pointwise norm |Df|. Grid: Euclidean norm of the gradient. Graph: square
/// root of the per-vertex weighted mean of squared difference quotients, with
/// incident edge weights normalized to sum 1.
ScalarField weak_gradient_norm(const MetricMeasureSpace& space, const ScalarField& f);

/// Negative adjoint of the gradient: sum_i div(b)[i] g[i] w[i] equals
/// -sum_i <b, grad g>[i] w[i] exactly for g supported three cells into the
/// interior (grid; the one-sided edge stencils reach two cells in) and for
/// all g (graph).
ScalarField divergence(const MetricMeasureSpace& space, const VectorField& b);

/// <b, grad g> evaluated per point (grid: Euclidean pairing; graph: weighted
/// edge pairing matching weak_gradient_norm).
ScalarField field_gradient_inner(const MetricMeasureSpace& space, const VectorField& b,
                                 const ScalarField& g);

// ============================================================================
// Second-order operators
// ============================================================================

/// Grid: compact (2d+1)-point stencil, shifted at the boundary. Graph:
/// weighted graph Laplacian, identical to divergence(gradient(f)).
ScalarField laplacian(const MetricMeasureSpace& space, const ScalarField& f);

/// Per-point symmetric d x d second-derivative matrices (grid backend only).
class HessianField {
public:
    HessianField(int n, int dim) : n_(n), dim_(dim), mats_(static_cast<std::size_t>(n) * dim * dim, 0.0) {}

    int size() const { return n_; }
    int dim() const { return dim_; }
    double entry(int i, int a, int b) const {
        return mats_[(static_cast<std::size_t>(i) * dim_ + a) * dim_ + b];
    }
    double& entry(int i, int a, int b) { return mats_[(static_cast<std::size_t>(i) * dim_ + a) * dim_ + b]; }

    double trace(int i) const;
    /// Frobenius norm of the matrix at point i.
    double hs_norm(int i) const;

private:
    int n_;
    int dim_;
    std::vector<double> mats_;
};

/// Second differences on the diagonal, 4-point cross stencils off-diagonal,
/// symmetrized. Stencils shift inward at the boundary (still exact on
/// quadratics). Graph backend is unsupported.
HessianField hessian(const MetricMeasureSpace& space, const ScalarField& f);

// ============================================================================
// Curvature-dimension checks
// ============================================================================

/// Gamma_2(f; phi) - k * int |Df|^2 phi dm - (1/N) * int (Delta f)^2 phi dm,
/// with Gamma_2(f; phi) = 1/2 int |Df|^2 Delta phi dm - int <grad f, grad
/// Delta f> phi dm. Pass N = infinity for the dimension-free case. phi must
/// be nonnegative and supported two cells into the interior.
double gamma2_check(const MetricMeasureSpace& space, const ScalarField& f, const ScalarField& phi,
                    double k, double N);

struct InfinitesimalResult {
    double worst_margin = 0.0;  // min over interior points of lambda_min(sym Jacobian) - K
    int witness = -1;
};

/// Certify the pointwise lower bound K on the symmetrized Jacobian of b.
/// Nonnegative worst_margin means b is infinitesimally K-monotone; applied to
/// b = gradient(u) this certifies infinitesimal K-convexity of u.
InfinitesimalResult infinitesimal_check(const MetricMeasureSpace& space, const VectorField& b, double K);

/// Eigenvalues of a symmetric d x d matrix (row-major), ascending. Cyclic
/// Jacobi; intended for the small per-point matrices above.
std::vector<double> symmetric_eigenvalues(std::span<const double> mat, int dim);

}  // namespace kconv
