#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace adreg {

/// Per-axis voxel counts of a 1D, 2D or 3D grid. Storage is row-major with
/// the last axis fastest everywhere in the library.
class GridShape {
public:
    GridShape() = default;
    explicit GridShape(std::vector<std::size_t> dims);
    GridShape(std::initializer_list<std::size_t> dims)
        : GridShape(std::vector<std::size_t>(dims)) {}

    std::size_t rank() const { return dims_.size(); }
    std::size_t size(std::size_t axis) const { return dims_.at(axis); }
    std::size_t count() const { return count_; }
    std::size_t stride(std::size_t axis) const { return strides_.at(axis); }
    const std::vector<std::size_t>& dims() const { return dims_; }

    std::size_t index(std::span<const std::size_t> coord) const;
    void coordinate(std::size_t flat, std::span<std::size_t> coord) const;

    bool operator==(const GridShape& other) const { return dims_ == other.dims_; }

    std::string str() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::size_t count_ = 0;
};

class ShapeMismatch : public std::invalid_argument {
public:
    explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// Throws ShapeMismatch naming `context` when the two shapes differ.
void require_same_shape(const GridShape& a, const GridShape& b, const char* context);

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridShape shape, double value = 0.0);
    ScalarField(GridShape shape, std::vector<double> data);

    const GridShape& shape() const { return shape_; }
    std::size_t count() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

private:
    GridShape shape_;
    std::vector<double> data_;
};

/// Displacement field in voxel units: one plane per grid axis, plane i
/// holding the displacement along axis i.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(GridShape shape);
    VectorField(GridShape shape, std::vector<std::vector<double>> planes);

    const GridShape& shape() const { return shape_; }
    std::size_t components() const { return planes_.size(); }

    std::span<const double> component(std::size_t c) const { return planes_.at(c); }
    std::span<double> component(std::size_t c) { return planes_.at(c); }

    ScalarField plane(std::size_t c) const { return ScalarField(shape_, planes_.at(c)); }

private:
    GridShape shape_;
    std::vector<std::vector<double>> planes_;
};

class MaskField {
public:
    MaskField() = default;
    explicit MaskField(GridShape shape, bool value = false);

    const GridShape& shape() const { return shape_; }
    bool operator[](std::size_t i) const { return data_[i] != 0; }
    void set(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }
    std::size_t count_true() const;

private:
    GridShape shape_;
    std::vector<std::uint8_t> data_;
};

/// Affine rescale of intensities onto [0, 1]. A constant field maps to zeros.
ScalarField normalize_intensity(const ScalarField& field);

// ---------------------------------------------------------------------------
// File I/O

class FormatError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, bad_header, size_mismatch, truncated, unsupported, bad_maxval };

    FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

using AnyField = std::variant<ScalarField, VectorField>;

/// NDF layout (little-endian): "NDF1" | u8 axes | u8 components |
/// axes x u32 sizes | components x N float64, component-planar.
AnyField read_ndf(const std::filesystem::path& path);
ScalarField read_ndf_scalar(const std::filesystem::path& path);
VectorField read_ndf_vector(const std::filesystem::path& path);
void write_ndf(const ScalarField& field, const std::filesystem::path& path);
void write_ndf(const VectorField& field, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_ndf(const AnyField& field);
AnyField decode_ndf(std::span<const std::uint8_t> bytes);

/// Binary P5 with maxval 255 or 65535; pixels map to p / maxval.
ScalarField read_pgm(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and quantized with round-half-up.
void write_pgm(const ScalarField& field, const std::filesystem::path& path, unsigned maxval = 255);

} // namespace adreg
