#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "adreg/field.hpp"

namespace adreg {

/// Reproducible normal deviates: std::mt19937_64 (bit-exact across
/// platforms by definition) feeding 53-bit uniforms into the Marsaglia polar
/// method. std::normal_distribution is avoided because its algorithm is
/// implementation-defined.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double uniform(); ///< in [0, 1)
    double normal();  ///< zero mean, unit variance

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

using Point = std::array<double, 3>;

struct SynthConfig {
    double spacing_frac = 0.15;
    double sigma = 6.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Control points and per-component coefficients of a polyharmonic spline
///
///     u_c(x) = a_c0 + sum_i a_c(i+1) x_i + sum_j w_cj U(|x - p_j|)
///
/// with U(r) = r^2 log r in 2D, r in 3D and r^3 in 1D.
struct TpsModel {
    std::size_t rank = 0;
    std::vector<Point> points;
    std::vector<std::vector<double>> weights; ///< [component][point]
    std::vector<std::vector<double>> affine;  ///< [component][1 + rank]

    Point evaluate(const Point& x) const;
};

class SingularSystem : public std::runtime_error {
public:
    explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

double tps_kernel(std::size_t rank, double r);

/// Uniform lattice with spacing max(1, floor(size * frac)) per axis; the far
/// boundary voxel is appended when the lattice does not land on it. Points
/// are returned in row-major order of their lattice index.
std::vector<Point> control_grid(const GridShape& shape, double spacing_frac);
std::vector<double> control_axis(std::size_t size, double spacing_frac);

/// i.i.d. N(0, sigma^2) per point and axis, drawn point by point.
std::vector<Point> perturb(const std::vector<Point>& points, std::size_t rank, double sigma, std::uint64_t seed);

/// Exact interpolation of `displacements` at `points`, with the kernel
/// weights orthogonal to the affine polynomials.
TpsModel tps_fit(const std::vector<Point>& points, const std::vector<Point>& displacements, std::size_t rank);

VectorField tps_evaluate(const TpsModel& model, const GridShape& shape);

struct SynthCase {
    ScalarField source;
    VectorField u_true;
    TpsModel model;
};

/// Builds a synthetic pair: source = warp(image, u_true), i.e.
/// source(x) = image(x + u_true(x)). Registering with source as the fixed
/// image I and the undeformed image as the moving image J has its data-term
/// minimum exactly at u_true, so u_true is the ground truth for the
/// estimated field even where the spline folds.
SynthCase make_case(const ScalarField& image, const SynthConfig& config);

} // namespace adreg
