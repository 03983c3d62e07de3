#pragma once

#include <limits>
#include <vector>

#include "adreg/dct.hpp"

namespace adreg {

/// Default magnitude guard: 64-bit machine epsilon.
inline constexpr double default_epsilon = std::numeric_limits<double>::epsilon();

/// Eigenvalues k of the Neumann-boundary discrete Laplacian on a grid, one
/// per DCT frequency. The model prior uses the squared Laplacian, so its
/// inverse-covariance eigenvalues are k^2 and the filters use k directly.
struct ModelSpectrum {
    GridShape shape;
    std::vector<double> k;
};

/// Per-frequency eigenvalues of the estimated prior's inverse covariance.
struct AdaptiveSpectrum {
    GridShape shape;
    std::vector<double> lambda;
};

/// sqrt(sum over components of coef^2 + eps), never below sqrt(eps).
struct CoefficientMagnitude {
    GridShape shape;
    std::vector<double> mag;
};

/// k_n = 2 (1 - cos(pi n / N)) for zero-based n; strictly increasing.
std::vector<double> laplacian_eigen_1d(std::size_t n);

ModelSpectrum model_spectrum(const GridShape& shape);

CoefficientMagnitude coefficient_magnitude(std::span<const SpectralField> spectra, double epsilon = default_epsilon);

/// Closed-form minimizer of 1/2 lambda m^2 + 1/2 k^2 / lambda: lambda = k / m.
AdaptiveSpectrum solve_lambda(const ModelSpectrum& model, const CoefficientMagnitude& mag);

/// sum_i k_i sqrt(sum_c coef_{c,i}^2), evaluated without the guard.
double adaptive_penalty(std::span<const SpectralField> spectra, const ModelSpectrum& model);

/// sum_c sum_i k_i^2 coef_{c,i}^2, i.e. ||L u||^2 for the Neumann Laplacian L.
double quadratic_penalty(std::span<const SpectralField> spectra, const ModelSpectrum& model);

/// The prior-dependent part of the adaptive objective for a given Lambda:
/// 1/2 sum lambda_i m_i^2 + 1/2 sum k_i^2 / lambda_i over indices with k_i > 0.
double reweighted_penalty(const AdaptiveSpectrum& lambda, const CoefficientMagnitude& mag, const ModelSpectrum& model);

/// Gaussian KL divergence between N(0, Lambda^-1) and N(0, (K^2)^-1), both
/// diagonal in the DCT basis. Frequencies with k = 0 are flat directions of
/// the model prior and are left out of the sum.
double kl_spectra(const AdaptiveSpectrum& lambda, const ModelSpectrum& model);

/// gain_i = m_i / (m_i + gamma w k_i) in (0, 1]; recomputed every iteration.
std::vector<double> adaptive_filter_gains(const CoefficientMagnitude& mag, const ModelSpectrum& model, double gamma, double w);

/// gain_i = 1 / (1 + gamma w k_i^2); fixed for a given grid.
std::vector<double> quadratic_filter_gains(const ModelSpectrum& model, double gamma, double w);

} // namespace adreg
