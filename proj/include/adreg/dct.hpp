#pragma once

#include <memory>
#include <vector>

#include "adreg/field.hpp"

namespace adreg {

/// Coefficients of a field in the orthonormal multidimensional DCT-II basis.
/// Frequency indices are zero-based and laid out like the spatial grid.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(GridShape shape) : shape_(std::move(shape)), coef_(shape_.count(), 0.0) {}
    SpectralField(GridShape shape, std::vector<double> coef);

    const GridShape& shape() const { return shape_; }
    std::size_t count() const { return coef_.size(); }
    std::span<const double> data() const { return coef_; }
    std::span<double> data() { return coef_; }
    double operator[](std::size_t i) const { return coef_[i]; }
    double& operator[](std::size_t i) { return coef_[i]; }

private:
    GridShape shape_;
    std::vector<double> coef_;
};

/// Precomputed orthonormal DCT-II / DCT-III pair for one grid shape.
///
/// Axis basis vector k of length N is s_k cos(pi k (j + 1/2) / N) with
/// s_0 = sqrt(1/N) and s_k = sqrt(2/N) otherwise, so the transform matrix is
/// orthogonal and the inverse is its transpose. The transforms run through
/// FFTW's REDFT10/REDFT01 kernels (O(N log N)) with the orthonormal scaling
/// applied separately. A plan is immutable once built; concurrent transforms
/// on one plan are safe.
class DctPlan {
public:
    explicit DctPlan(GridShape shape);
    ~DctPlan();
    DctPlan(DctPlan&&) noexcept;
    DctPlan& operator=(DctPlan&&) noexcept;
    DctPlan(const DctPlan&) = delete;
    DctPlan& operator=(const DctPlan&) = delete;

    const GridShape& shape() const { return shape_; }

    SpectralField forward(std::span<const double> field) const;
    SpectralField forward(const ScalarField& field) const;
    ScalarField inverse(const SpectralField& spec) const;

    /// In-place variants on raw buffers of length shape().count().
    void forward_inplace(std::span<double> data) const;
    void inverse_inplace(std::span<double> data) const;

private:
    struct Impl;
    GridShape shape_;
    std::unique_ptr<Impl> impl_;
};

SpectralField forward_dct(const DctPlan& plan, const ScalarField& field);
ScalarField inverse_dct(const DctPlan& plan, const SpectralField& spec);

} // namespace adreg
