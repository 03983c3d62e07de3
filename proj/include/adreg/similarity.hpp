#pragma once

#include "adreg/field.hpp"

namespace adreg {

/// J resampled at x + u(x) with multilinear interpolation. Sample
/// coordinates are clamped to the grid box (replicate border).
ScalarField warp(const ScalarField& image, const VectorField& u);

/// Multilinear interpolation of `image` at a continuous voxel coordinate.
double sample(const ScalarField& image, std::span<const double> point);

/// Sum of squared differences.
double ssd(const ScalarField& reference, const ScalarField& warped);

/// (J(x + u) - I(x)) * dJ/dx_i at x + u, per axis i.
///
/// The image derivative is the exact derivative of the multilinear
/// interpolant, so this is one half of the derivative of
/// ssd(I, warp(J, u)) with respect to u. Where a sample lands exactly on an
/// interior grid plane the two one-sided cell derivatives are averaged,
/// which reduces to central differences of J at grid nodes. Clamped
/// coordinates have zero derivative.
VectorField ssd_gradient(const ScalarField& reference, const ScalarField& image, const VectorField& u);

/// Warped image and SSD gradient from a single pass over the grid.
struct WarpAndGradient {
    ScalarField warped;
    VectorField gradient;
};
WarpAndGradient warp_and_gradient(const ScalarField& reference, const ScalarField& image, const VectorField& u);

} // namespace adreg
