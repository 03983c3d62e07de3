#include "adreg/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adreg {

std::vector<double> laplacian_eigen_1d(std::size_t n)
{
    if (n < 2)
        throw std::invalid_argument("laplacian_eigen_1d: axis length must be at least 2");
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i)
        k[i] = 2.0 * (1.0 - std::cos(std::numbers::pi * double(i) / double(n)));
    return k;
}

ModelSpectrum model_spectrum(const GridShape& shape)
{
    std::vector<std::vector<double>> axis(shape.rank());
    for (std::size_t a = 0; a < shape.rank(); ++a)
        axis[a] = laplacian_eigen_1d(shape.size(a));

    ModelSpectrum out{shape, std::vector<double>(shape.count(), 0.0)};
    std::vector<std::size_t> coord(shape.rank());
    for (std::size_t i = 0; i < shape.count(); ++i) {
        shape.coordinate(i, coord);
        double sum = 0.0;
        for (std::size_t a = 0; a < shape.rank(); ++a)
            sum += axis[a][coord[a]];
        out.k[i] = sum;
    }
    return out;
}

namespace {

void check_spectra(std::span<const SpectralField> spectra, const char* context)
{
    if (spectra.empty())
        throw std::invalid_argument(std::string(context) + ": no spectra given");
    for (const auto& s : spectra)
        require_same_shape(s.shape(), spectra.front().shape(), context);
}

} // namespace

CoefficientMagnitude coefficient_magnitude(std::span<const SpectralField> spectra, double epsilon)
{
    check_spectra(spectra, "coefficient_magnitude");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("coefficient_magnitude: epsilon must be positive");
    const auto& shape = spectra.front().shape();
    CoefficientMagnitude out{shape, std::vector<double>(shape.count(), epsilon)};
    for (const auto& s : spectra)
        for (std::size_t i = 0; i < out.mag.size(); ++i)
            out.mag[i] += s[i] * s[i];
    for (auto& m : out.mag)
        m = std::sqrt(m);
    return out;
}

AdaptiveSpectrum solve_lambda(const ModelSpectrum& model, const CoefficientMagnitude& mag)
{
    require_same_shape(model.shape, mag.shape, "solve_lambda");
    AdaptiveSpectrum out{model.shape, std::vector<double>(model.k.size())};
    for (std::size_t i = 0; i < out.lambda.size(); ++i)
        out.lambda[i] = model.k[i] / mag.mag[i];
    return out;
}

double adaptive_penalty(std::span<const SpectralField> spectra, const ModelSpectrum& model)
{
    check_spectra(spectra, "adaptive_penalty");
    require_same_shape(spectra.front().shape(), model.shape, "adaptive_penalty");
    double total = 0.0;
    for (std::size_t i = 0; i < model.k.size(); ++i) {
        if (model.k[i] == 0.0)
            continue;
        double sq = 0.0;
        for (const auto& s : spectra)
            sq += s[i] * s[i];
        total += model.k[i] * std::sqrt(sq);
    }
    return total;
}

double quadratic_penalty(std::span<const SpectralField> spectra, const ModelSpectrum& model)
{
    check_spectra(spectra, "quadratic_penalty");
    require_same_shape(spectra.front().shape(), model.shape, "quadratic_penalty");
    double total = 0.0;
    for (const auto& s : spectra)
        for (std::size_t i = 0; i < model.k.size(); ++i) {
            const double kc = model.k[i] * s[i];
            total += kc * kc;
        }
    return total;
}

double reweighted_penalty(const AdaptiveSpectrum& lambda, const CoefficientMagnitude& mag, const ModelSpectrum& model)
{
    require_same_shape(lambda.shape, mag.shape, "reweighted_penalty");
    require_same_shape(lambda.shape, model.shape, "reweighted_penalty");
    double total = 0.0;
    for (std::size_t i = 0; i < model.k.size(); ++i) {
        if (model.k[i] == 0.0)
            continue;
        const double m = mag.mag[i];
        total += 0.5 * lambda.lambda[i] * m * m + 0.5 * model.k[i] * model.k[i] / lambda.lambda[i];
    }
    return total;
}

double kl_spectra(const AdaptiveSpectrum& lambda, const ModelSpectrum& model)
{
    require_same_shape(lambda.shape, model.shape, "kl_spectra");
    double total = 0.0;
    for (std::size_t i = 0; i < model.k.size(); ++i) {
        if (model.k[i] == 0.0)
            continue;
        const double l = lambda.lambda[i];
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::domain_error("kl_spectra: prior eigenvalue at index " + std::to_string(i) + " is not positive");
        const double kmodel = model.k[i] * model.k[i];
        total += kmodel / l - std::log(kmodel) + std::log(l) - 1.0;
    }
    return 0.5 * total;
}

namespace {

void check_step(double gamma, double w, const char* context)
{
    if (!(gamma > 0.0) || !(w > 0.0))
        throw std::invalid_argument(std::string(context) + ": gamma and w must be positive");
}

} // namespace

std::vector<double> adaptive_filter_gains(const CoefficientMagnitude& mag, const ModelSpectrum& model, double gamma, double w)
{
    check_step(gamma, w, "adaptive_filter_gains");
    require_same_shape(mag.shape, model.shape, "adaptive_filter_gains");
    const double gw = gamma * w;
    std::vector<double> gain(model.k.size());
    for (std::size_t i = 0; i < gain.size(); ++i)
        gain[i] = mag.mag[i] / (mag.mag[i] + gw * model.k[i]);
    return gain;
}

std::vector<double> quadratic_filter_gains(const ModelSpectrum& model, double gamma, double w)
{
    check_step(gamma, w, "quadratic_filter_gains");
    const double gw = gamma * w;
    std::vector<double> gain(model.k.size());
    for (std::size_t i = 0; i < gain.size(); ++i)
        gain[i] = 1.0 / (1.0 + gw * model.k[i] * model.k[i]);
    return gain;
}

} // namespace adreg
