#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adreg/field.hpp"
#include "adreg/solver.hpp"
#include "adreg/synth.hpp"

namespace adreg {

struct ErrorMetrics {
    double rmse = 0.0;      ///< sqrt(sum |du|^2 / (d N)), voxels
    double mse_paper = 0.0; ///< sum |du|^2 / (d N), no square root
    std::size_t voxels = 0; ///< N, the voxels inside the mask
};

/// Displacement error between two fields over the mask (all voxels when no
/// mask is given). Throws std::invalid_argument on an empty mask.
ErrorMetrics displacement_error(const VectorField& u_true, const VectorField& u_est, const MaskField* mask = nullptr);

inline double rmse(const VectorField& u_true, const VectorField& u_est, const MaskField* mask = nullptr)
{
    return displacement_error(u_true, u_est, mask).rmse;
}

/// image > tau, then one binary closing with the 3^d neighbourhood.
/// Neighbours outside the grid are ignored by both the dilation and the
/// erosion.
MaskField threshold_mask(const ScalarField& image, double tau);

inline constexpr double default_mask_threshold = 0.1;

// ---------------------------------------------------------------------------
// Phantoms

enum class PhantomKind { disk, rings, blobs };

PhantomKind parse_phantom(const std::string& name);

/// Built-in test images. `disk` has intensity 0.8 inside a centred
/// disk/ball of radius 0.3 * min size on a zero background; `rings` and
/// `blobs` are normalized to [0, 1]. `blobs` is Gaussian-smoothed noise
/// (sigma 2 voxels at size 64, scaled with the grid), standardized and
/// passed through the soft threshold (1 + tanh(2 z)) / 2, under a soft
/// circular envelope; it depends on the seed.
ScalarField make_phantom(PhantomKind kind, const GridShape& shape, std::uint64_t seed = 1);

/// Separable Gaussian smoothing with replicate borders.
ScalarField gaussian_smooth(const ScalarField& field, double sigma);

// ---------------------------------------------------------------------------
// Weight sweeps

inline constexpr double default_sweep_gamma = 20.0;

struct SweepSpec {
    RegularizerMode mode = RegularizerMode::adaptive;
    std::vector<double> weights;
    int trials = 1;
    double sigma = 3.0;
    double spacing_frac = 0.15;
    std::vector<std::uint64_t> seeds; ///< trial t uses seeds[t] when given, else t + 1
    std::string image;                ///< NDF/PGM path; empty uses `phantom`

    // Image when no path is given.
    std::string phantom = "blobs";
    std::vector<std::size_t> phantom_shape{64, 64};
    bool phantom_per_seed = true; ///< blobs phantom regenerated with each trial seed

    /// Sweep time step. Larger than the solver default because the SSD
    /// gradient of [0, 1] images is small; both modes share it.
    double gamma = default_sweep_gamma;
    int max_iter = 1000;
    double rel_tol = 1e-8;
    double mask_threshold = default_mask_threshold;
    int jobs = 1;

    void validate() const;
    std::uint64_t seed_for(int trial) const;
};

struct SweepRow {
    RegularizerMode mode = RegularizerMode::adaptive;
    double w = 0.0;
    std::uint64_t seed = 0;
    double initial_rmse = 0.0;
    double final_rmse = 0.0;
    int iterations = 0;
    std::string termination;
    double wall_time_seconds = 0.0;
};

SweepSpec sweep_spec_from_json(const std::string& text);
std::string sweep_spec_to_json(const SweepSpec& spec);

/// Image for trial `trial` of the sweep, normalized.
ScalarField sweep_image(const SweepSpec& spec, int trial);

/// Rows in (w, seed) order. Failed runs are reported through their
/// termination field ("error: ...") rather than thrown.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

/// CSV with header mode,w,seed,initial_rmse,final_rmse,iterations,termination,wall_time_seconds.
/// Wall time is the only non-deterministic column; `include_timing = false`
/// writes it as 0 so reruns are byte-identical.
std::string sweep_csv(const std::vector<SweepRow>& rows, bool include_timing = false);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

struct SweepSummary {
    double w;
    double median_initial;
    double median_final;
    double q1_final;
    double q3_final;
    std::size_t runs;
};

/// Per-weight medians and quartiles of the rows, in weight order.
std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Command line

/// Entry point of the `adreg` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv);

} // namespace adreg
