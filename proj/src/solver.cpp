#include "adreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "adreg/similarity.hpp"

namespace adreg {

namespace {

constexpr int max_step_retries = 10;
constexpr double tolerance_floor = 1e-30;

} // namespace

std::string_view to_string(RegularizerMode mode)
{
    return mode == RegularizerMode::adaptive ? "adaptive" : "quadratic";
}

RegularizerMode parse_mode(std::string_view text)
{
    if (text == "adaptive")
        return RegularizerMode::adaptive;
    if (text == "quadratic")
        return RegularizerMode::quadratic;
    throw std::invalid_argument("unknown regularizer mode '" + std::string(text) + "'");
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::max_iter: return "max_iter";
    case Termination::tolerance: return "tolerance";
    case Termination::stalled: return "stalled";
    }
    return "unknown";
}

void SolverConfig::validate() const
{
    if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("solver: w must be positive");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("solver: gamma must be positive");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("solver: epsilon must be positive");
    if (max_iter < 1)
        throw std::invalid_argument("solver: max_iter must be at least 1");
    if (!(rel_tol > 0.0))
        throw std::invalid_argument("solver: rel_tol must be positive");
}

std::string format_record(const IterationRecord& rec)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "iter %d objective %.17g gamma %.17g min_gain %.17g%s", rec.iteration,
                  rec.objective, rec.gamma, rec.min_gain, rec.accepted ? "" : " rejected");
    return buf;
}

Registration::Registration(ScalarField reference, ScalarField source, SolverConfig config)
    : reference_(std::move(reference)), source_(std::move(source)), config_(config),
      plan_(reference_.shape()), model_(model_spectrum(reference_.shape()))
{
    require_same_shape(reference_.shape(), source_.shape(), "register");
    config_.validate();
}

std::vector<SpectralField> Registration::spectra(const VectorField& u) const
{
    std::vector<SpectralField> out;
    out.reserve(u.components());
    for (std::size_t c = 0; c < u.components(); ++c)
        out.push_back(plan_.forward(u.component(c)));
    return out;
}

double Registration::objective_from_spectra(double ssd_value, std::span<const SpectralField> s) const
{
    if (config_.mode == RegularizerMode::adaptive)
        return ssd_value / config_.w + adaptive_penalty(s, model_);
    return ssd_value + config_.w * quadratic_penalty(s, model_);
}

double Registration::objective(const VectorField& u) const
{
    require_same_shape(u.shape(), shape(), "objective");
    const double d = ssd(reference_, warp(source_, u));
    return objective_from_spectra(d, spectra(u));
}

VectorField Registration::step(const VectorField& u, double gamma, double* min_gain) const
{
    require_same_shape(u.shape(), shape(), "step");
    const auto grad = ssd_gradient(reference_, source_, u);

    std::vector<double> gain;
    if (config_.mode == RegularizerMode::adaptive) {
        const auto current = spectra(u);
        gain = adaptive_filter_gains(coefficient_magnitude(current, config_.epsilon), model_, gamma, config_.w);
    } else {
        gain = quadratic_filter_gains(model_, gamma, config_.w);
    }

    VectorField next(shape());
    for (std::size_t c = 0; c < u.components(); ++c) {
        auto out = next.component(c);
        const auto uc = u.component(c);
        const auto gc = grad.component(c);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = uc[i] - gamma * gc[i];
        plan_.forward_inplace(out);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= gain[i];
        plan_.inverse_inplace(out);
    }
    if (min_gain)
        *min_gain = gain.empty() ? 1.0 : *std::min_element(gain.begin(), gain.end());
    return next;
}

RegistrationResult Registration::run(const VectorField& u0, const IterationLogger& log) const
{
    require_same_shape(u0.shape(), shape(), "register");
    RegistrationResult result;
    result.u = u0;
    double current = objective(result.u);
    if (!std::isfinite(current))
        throw NonFiniteObjective("register: initial objective is not finite");
    result.objective_trace.push_back(current);

    double gamma = config_.gamma;
    int rejected = 0;
    result.termination = Termination::max_iter;
    while (result.iterations < config_.max_iter) {
        double min_gain = 1.0;
        VectorField candidate = step(result.u, gamma, &min_gain);
        const double next = objective(candidate);
        if (!std::isfinite(next))
            throw NonFiniteObjective("register: objective became non-finite at iteration " +
                                     std::to_string(result.iterations + 1) + " (gamma " + std::to_string(gamma) + ")");

        if (config_.step_safeguard && next > current) {
            if (log)
                log({result.iterations + 1, next, gamma, min_gain, false});
            gamma *= 0.5;
            if (++rejected > max_step_retries) {
                result.termination = Termination::stalled;
                break;
            }
            continue;
        }
        rejected = 0;
        result.u = std::move(candidate);
        ++result.iterations;
        result.objective_trace.push_back(next);
        if (log)
            log({result.iterations, next, gamma, min_gain, true});

        const double change = std::abs(next - current) / std::max(std::abs(current), tolerance_floor);
        current = next;
        if (change < config_.rel_tol) {
            result.termination = Termination::tolerance;
            break;
        }
    }
    result.final_gamma = gamma;
    return result;
}

double objective(const ScalarField& reference, const ScalarField& source, const VectorField& u, const SolverConfig& config)
{
    return Registration(reference, source, config).objective(u);
}

VectorField step(const ScalarField& reference, const ScalarField& source, const VectorField& u, const SolverConfig& config)
{
    return Registration(reference, source, config).step(u, config.gamma);
}

RegistrationResult register_images(const ScalarField& reference, const ScalarField& source,
                                   const std::optional<VectorField>& u0, const SolverConfig& config,
                                   const IterationLogger& log)
{
    Registration reg(reference, source, config);
    return reg.run(u0 ? *u0 : VectorField(reference.shape()), log);
}

} // namespace adreg
