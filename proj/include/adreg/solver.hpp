#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adreg/dct.hpp"
#include "adreg/spectral.hpp"

namespace adreg {

enum class RegularizerMode { adaptive, quadratic };

std::string_view to_string(RegularizerMode mode);
RegularizerMode parse_mode(std::string_view text);

struct SolverConfig {
    RegularizerMode mode = RegularizerMode::adaptive;
    double w = 1.0;
    double gamma = 0.2;
    double epsilon = default_epsilon;
    int max_iter = 1000;
    double rel_tol = 1e-8;
    bool step_safeguard = true;

    /// Throws std::invalid_argument on non-positive parameters.
    void validate() const;
};

enum class Termination { max_iter, tolerance, stalled };

std::string_view to_string(Termination t);

struct RegistrationResult {
    VectorField u;
    std::vector<double> objective_trace; ///< initial value first, then one per accepted step
    int iterations = 0;
    Termination termination = Termination::max_iter;
    double final_gamma = 0.0;
};

/// One record per attempted iteration.
struct IterationRecord {
    int iteration;
    double objective;
    double gamma;
    double min_gain;
    bool accepted;
};

using IterationLogger = std::function<void(const IterationRecord&)>;

/// Formats a record as "iter <n> objective <E> gamma <g> min_gain <m> [rejected]".
std::string format_record(const IterationRecord& rec);

class NonFiniteObjective : public std::runtime_error {
public:
    explicit NonFiniteObjective(const std::string& what) : std::runtime_error(what) {}
};

/// Semi-implicit registration of a source image J onto a reference I.
///
/// Each step takes an explicit gradient step on the SSD term and then
/// applies the regularizer implicitly as a per-frequency filter in the DCT
/// domain:
///
///     u <- IDCT( gain * DCT(u_t - gamma * grad D(u_t)) )   per component
///
/// Adaptive mode uses gain = m / (m + gamma w k) with m the coupled DCT
/// magnitude of the current iterate u_t; quadratic mode uses the fixed
/// gain 1 / (1 + gamma w k^2). The objectives are (1/w) SSD + sum k m
/// and SSD + w sum k^2 coef^2 respectively.
class Registration {
public:
    Registration(ScalarField reference, ScalarField source, SolverConfig config);

    const SolverConfig& config() const { return config_; }
    const GridShape& shape() const { return reference_.shape(); }

    double objective(const VectorField& u) const;

    /// One filtered step with an explicit time step.
    VectorField step(const VectorField& u, double gamma, double* min_gain = nullptr) const;

    RegistrationResult run(const VectorField& u0, const IterationLogger& log = {}) const;

private:
    double objective_from_spectra(double ssd_value, std::span<const SpectralField> spectra) const;
    std::vector<SpectralField> spectra(const VectorField& u) const;

    ScalarField reference_;
    ScalarField source_;
    SolverConfig config_;
    DctPlan plan_;
    ModelSpectrum model_;
};

double objective(const ScalarField& reference, const ScalarField& source, const VectorField& u, const SolverConfig& config);

VectorField step(const ScalarField& reference, const ScalarField& source, const VectorField& u, const SolverConfig& config);

RegistrationResult register_images(const ScalarField& reference, const ScalarField& source,
                                   const std::optional<VectorField>& u0, const SolverConfig& config,
                                   const IterationLogger& log = {});

} // namespace adreg
