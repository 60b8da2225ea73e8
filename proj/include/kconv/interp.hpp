#pragma once

#include "kconv/space.hpp"

namespace kconv {

/// Multilinear interpolation of a scalar field at an arbitrary position
/// (grid backend). Positions outside the box are clamped to it.
double interpolate_scalar(const MetricMeasureSpace& space, const ScalarField& f,
                          std::span<const double> position);

/// Multilinear interpolation of a grid vector field; writes dim components.
void interpolate_vector(const MetricMeasureSpace& space, const VectorField& b,
                        std::span<const double> position, std::span<double> out);

/// Cloud-in-cell deposit: distributes each mass onto the 2^d surrounding
/// nodes with multilinear weights. Total deposited mass equals the input
/// total exactly (weights sum to 1 per particle).
std::vector<double> cic_deposit(const MetricMeasureSpace& space, std::span<const double> positions,
                                std::span<const double> masses);

/// Quadratic B-spline (triangular-shaped cloud) deposit over the 3^d nearest
/// nodes. Mass-conserving like cic_deposit but free of the node-phase beat
/// that makes linear deposits overshoot density maxima; used for kernel
/// density estimates.
std::vector<double> tsc_deposit(const MetricMeasureSpace& space, std::span<const double> positions,
                                std::span<const double> masses);

}  // namespace kconv
