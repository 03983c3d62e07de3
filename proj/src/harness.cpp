#include "adreg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace adreg {

ErrorMetrics displacement_error(const VectorField& u_true, const VectorField& u_est, const MaskField* mask)
{
    require_same_shape(u_true.shape(), u_est.shape(), "rmse");
    if (mask)
        require_same_shape(u_true.shape(), mask->shape(), "rmse mask");
    const std::size_t count = u_true.shape().count();
    const std::size_t d = u_true.components();
    double total = 0.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (mask && !(*mask)[i])
            continue;
        ++inside;
        for (std::size_t c = 0; c < d; ++c) {
            const double e = u_true.component(c)[i] - u_est.component(c)[i];
            total += e * e;
        }
    }
    if (inside == 0)
        throw std::invalid_argument("rmse: mask selects no voxels");
    ErrorMetrics m;
    m.voxels = inside;
    m.mse_paper = total / (double(d) * double(inside));
    m.rmse = std::sqrt(m.mse_paper);
    return m;
}

namespace {

// Visits the in-grid 3^d neighbourhood of voxel `i` (including itself).
template <typename Fn>
void for_neighbours(const GridShape& shape, std::size_t i, Fn&& fn)
{
    const std::size_t rank = shape.rank();
    std::array<std::size_t, 3> coord{};
    shape.coordinate(i, std::span(coord.data(), rank));
    const std::size_t total = rank == 1 ? 3 : rank == 2 ? 9 : 27;
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t rest = n;
        std::size_t flat = 0;
        bool inside = true;
        for (std::size_t a = 0; a < rank; ++a) {
            const int off = int(rest % 3) - 1;
            rest /= 3;
            const long long c = (long long)coord[a] + off;
            if (c < 0 || c >= (long long)shape.size(a)) {
                inside = false;
                break;
            }
            flat += std::size_t(c) * shape.stride(a);
        }
        if (inside && !fn(flat))
            return;
    }
}

MaskField dilate(const MaskField& in)
{
    const auto& shape = in.shape();
    MaskField out(shape);
    for (std::size_t i = 0; i < shape.count(); ++i) {
        bool any = false;
        for_neighbours(shape, i, [&](std::size_t j) { return !(any = in[j]); });
        out.set(i, any);
    }
    return out;
}

MaskField erode(const MaskField& in)
{
    const auto& shape = in.shape();
    MaskField out(shape);
    for (std::size_t i = 0; i < shape.count(); ++i) {
        bool all = true;
        for_neighbours(shape, i, [&](std::size_t j) { return (all = in[j]); });
        out.set(i, all);
    }
    return out;
}

} // namespace

MaskField threshold_mask(const ScalarField& image, double tau)
{
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("threshold_mask: tau must lie in [0, 1]");
    MaskField raw(image.shape());
    for (std::size_t i = 0; i < image.count(); ++i)
        raw.set(i, image[i] > tau);
    return erode(dilate(raw));
}

// ---------------------------------------------------------------------------
// Phantoms

PhantomKind parse_phantom(const std::string& name)
{
    if (name == "disk")
        return PhantomKind::disk;
    if (name == "rings")
        return PhantomKind::rings;
    if (name == "blobs")
        return PhantomKind::blobs;
    throw std::invalid_argument("unknown phantom '" + name + "' (disk, rings, blobs)");
}

ScalarField gaussian_smooth(const ScalarField& field, double sigma)
{
    if (!(sigma > 0.0))
        return field;
    const int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t)
        sum += kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    for (auto& k : kernel)
        k /= sum;

    const auto& shape = field.shape();
    std::vector<double> cur(field.values()), next(cur.size());
    std::vector<std::size_t> coord(shape.rank());
    for (std::size_t a = 0; a < shape.rank(); ++a) {
        const long long n = (long long)shape.size(a);
        const std::size_t stride = shape.stride(a);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            shape.coordinate(i, coord);
            const std::size_t base = i - coord[a] * stride;
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                const long long c = std::clamp<long long>((long long)coord[a] + t, 0, n - 1);
                acc += kernel[t + radius] * cur[base + std::size_t(c) * stride];
            }
            next[i] = acc;
        }
        std::swap(cur, next);
    }
    return ScalarField(shape, std::move(cur));
}

namespace {

// Distance from the grid centre, in voxels.
std::vector<double> radius_map(const GridShape& shape)
{
    std::vector<double> r(shape.count());
    std::vector<std::size_t> coord(shape.rank());
    for (std::size_t i = 0; i < shape.count(); ++i) {
        shape.coordinate(i, coord);
        double s = 0.0;
        for (std::size_t a = 0; a < shape.rank(); ++a) {
            const double c = double(coord[a]) - 0.5 * double(shape.size(a) - 1);
            s += c * c;
        }
        r[i] = std::sqrt(s);
    }
    return r;
}

constexpr double blob_smoothing = 2.0; // voxels at size 64, scaled with the grid
constexpr double blob_edge_slope = 2.0;

double min_size(const GridShape& shape)
{
    return double(*std::min_element(shape.dims().begin(), shape.dims().end()));
}

// 1 inside `inner`, cosine taper to 0 at `outer`.
double envelope(double r, double inner, double outer)
{
    if (r <= inner)
        return 1.0;
    if (r >= outer)
        return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (r - inner) / (outer - inner)));
}

} // namespace

ScalarField make_phantom(PhantomKind kind, const GridShape& shape, std::uint64_t seed)
{
    const auto r = radius_map(shape);
    const double size = min_size(shape);
    ScalarField out(shape);
    switch (kind) {
    case PhantomKind::disk:
        for (std::size_t i = 0; i < out.count(); ++i)
            out[i] = r[i] <= 0.3 * size ? 0.8 : 0.0;
        return out;
    case PhantomKind::rings: {
        const double period = std::max(4.0, size / 8.0);
        for (std::size_t i = 0; i < out.count(); ++i)
            out[i] = envelope(r[i], 0.35 * size, 0.45 * size) * (0.6 + 0.4 * std::cos(2.0 * std::numbers::pi * r[i] / period));
        return normalize_intensity(out);
    }
    case PhantomKind::blobs: {
        // Smoothed white noise, standardized and passed through a soft
        // threshold so the blobs have well-defined edges.
        GaussianSource rng(seed);
        for (std::size_t i = 0; i < out.count(); ++i)
            out[i] = rng.normal();
        out = gaussian_smooth(out, std::max(1.0, blob_smoothing * size / 64.0));
        double mean = 0.0, var = 0.0;
        for (double v : out.data())
            mean += v;
        mean /= double(out.count());
        for (double v : out.data())
            var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / double(out.count()));
        for (std::size_t i = 0; i < out.count(); ++i) {
            const double z = sd > 0.0 ? (out[i] - mean) / sd : 0.0;
            out[i] = 0.5 * (1.0 + std::tanh(blob_edge_slope * z)) * envelope(r[i], 0.35 * size, 0.45 * size);
        }
        return normalize_intensity(out);
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps

void SweepSpec::validate() const
{
    if (weights.empty())
        throw std::invalid_argument("sweep: at least one weight is required");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("sweep: weights must be positive");
    if (trials < 1)
        throw std::invalid_argument("sweep: trials must be at least 1");
    if (!seeds.empty() && seeds.size() < std::size_t(trials))
        throw std::invalid_argument("sweep: fewer seeds than trials");
    if (jobs < 1)
        throw std::invalid_argument("sweep: jobs must be at least 1");
    SynthConfig{spacing_frac, sigma, 1}.validate();
    SolverConfig cfg;
    cfg.gamma = gamma;
    cfg.max_iter = max_iter;
    cfg.rel_tol = rel_tol;
    cfg.validate();
    if (!(mask_threshold >= 0.0 && mask_threshold <= 1.0))
        throw std::invalid_argument("sweep: mask threshold must lie in [0, 1]");
    if (image.empty()) {
        [[maybe_unused]] const GridShape shape(phantom_shape);
        parse_phantom(phantom);
    }
}

std::uint64_t SweepSpec::seed_for(int trial) const
{
    return seeds.empty() ? std::uint64_t(trial) + 1 : seeds.at(std::size_t(trial));
}

SweepSpec sweep_spec_from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    SweepSpec s;
    if (j.contains("mode"))
        s.mode = parse_mode(j.at("mode").get<std::string>());
    s.weights = j.at("weights").get<std::vector<double>>();
    s.trials = j.value("trials", s.trials);
    s.sigma = j.value("sigma", s.sigma);
    s.spacing_frac = j.value("spacing_frac", s.spacing_frac);
    s.seeds = j.value("seeds", s.seeds);
    s.image = j.value("image", s.image);
    s.phantom = j.value("phantom", s.phantom);
    s.phantom_shape = j.value("phantom_shape", s.phantom_shape);
    s.phantom_per_seed = j.value("phantom_per_seed", s.phantom_per_seed);
    s.gamma = j.value("gamma", s.gamma);
    s.max_iter = j.value("max_iter", s.max_iter);
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.mask_threshold = j.value("mask_threshold", s.mask_threshold);
    s.jobs = j.value("jobs", s.jobs);
    if (s.seeds.size() > std::size_t(s.trials) && !j.contains("trials"))
        s.trials = int(s.seeds.size());
    return s;
}

std::string sweep_spec_to_json(const SweepSpec& s)
{
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(s.mode));
    j["weights"] = s.weights;
    j["trials"] = s.trials;
    j["sigma"] = s.sigma;
    j["spacing_frac"] = s.spacing_frac;
    j["seeds"] = s.seeds;
    j["image"] = s.image;
    j["phantom"] = s.phantom;
    j["phantom_shape"] = s.phantom_shape;
    j["phantom_per_seed"] = s.phantom_per_seed;
    j["gamma"] = s.gamma;
    j["max_iter"] = s.max_iter;
    j["rel_tol"] = s.rel_tol;
    j["mask_threshold"] = s.mask_threshold;
    j["jobs"] = s.jobs;
    return j.dump(2);
}

namespace {

ScalarField load_image(const std::string& path)
{
    const std::filesystem::path p(path);
    if (p.extension() == ".pgm")
        return read_pgm(p);
    return read_ndf_scalar(p);
}

} // namespace

ScalarField sweep_image(const SweepSpec& spec, int trial)
{
    if (!spec.image.empty())
        return normalize_intensity(load_image(spec.image));
    const std::uint64_t seed = spec.phantom_per_seed ? spec.seed_for(trial) : 1;
    return normalize_intensity(make_phantom(parse_phantom(spec.phantom), GridShape(spec.phantom_shape), seed));
}

namespace {

SweepRow run_trial(const SweepSpec& spec, double w, int trial, const ScalarField* shared_image)
{
    SweepRow row;
    row.mode = spec.mode;
    row.w = w;
    row.seed = spec.seed_for(trial);
    const auto start = std::chrono::steady_clock::now();
    try {
        const ScalarField image = shared_image ? *shared_image : sweep_image(spec, trial);
        const SynthCase synth = make_case(image, SynthConfig{spec.spacing_frac, spec.sigma, row.seed});
        // The deformed image is the fixed grid on which u is estimated.
        const MaskField mask = threshold_mask(normalize_intensity(synth.source), spec.mask_threshold);

        SolverConfig cfg;
        cfg.mode = spec.mode;
        cfg.w = w;
        cfg.gamma = spec.gamma;
        cfg.max_iter = spec.max_iter;
        cfg.rel_tol = spec.rel_tol;
        const VectorField zero(image.shape());
        row.initial_rmse = rmse(synth.u_true, zero, &mask);
        const auto result = register_images(synth.source, image, zero, cfg);
        row.final_rmse = rmse(synth.u_true, result.u, &mask);
        row.iterations = result.iterations;
        row.termination = std::string(to_string(result.termination));
    } catch (const std::exception& e) {
        row.termination = std::string("error: ") + e.what();
    }
    row.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

} // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec)
{
    spec.validate();
    std::optional<ScalarField> shared;
    if (!spec.image.empty())
        shared = sweep_image(spec, 0);

    const std::size_t trials = std::size_t(spec.trials);
    const std::size_t total = spec.weights.size() * trials;
    std::vector<SweepRow> rows(total);
    auto work = [&](std::size_t k) {
        rows[k] = run_trial(spec, spec.weights[k / trials], int(k % trials), shared ? &*shared : nullptr);
    };

    const std::size_t workers = std::min<std::size_t>(std::size_t(spec.jobs), total);
    if (workers <= 1) {
        for (std::size_t k = 0; k < total; ++k)
            work(k);
        return rows;
    }
    // Static interleaved assignment; each row has exactly one writer.
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t k = t; k < total; k += workers)
                work(k);
        });
    for (auto& th : pool)
        th.join();
    return rows;
}

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\r\n") == std::string::npos)
        return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::string sweep_csv(const std::vector<SweepRow>& rows, bool include_timing)
{
    std::ostringstream os;
    os << "mode,w,seed,initial_rmse,final_rmse,iterations,termination,wall_time_seconds\r\n";
    for (const auto& r : rows)
        os << to_string(r.mode) << ',' << format_double(r.w) << ',' << r.seed << ',' << format_double(r.initial_rmse)
           << ',' << format_double(r.final_rmse) << ',' << r.iterations << ',' << csv_field(r.termination) << ','
           << format_double(include_timing ? r.wall_time_seconds : 0.0) << "\r\n";
    return os.str();
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        throw std::invalid_argument("quantile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * double(values.size() - 1);
    const auto lo = std::size_t(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - double(lo);
    return values[lo] * (1.0 - t) + values[hi] * t;
}

double median(std::vector<double> values)
{
    return quantile(std::move(values), 0.5);
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows)
{
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_weight;
    for (const auto& r : rows) {
        if (r.termination.rfind("error", 0) == 0)
            continue;
        by_weight[r.w].first.push_back(r.initial_rmse);
        by_weight[r.w].second.push_back(r.final_rmse);
    }
    std::vector<SweepSummary> out;
    for (const auto& [w, v] : by_weight)
        out.push_back({w, median(v.first), median(v.second), quantile(v.second, 0.25), quantile(v.second, 0.75),
                       v.second.size()});
    return out;
}

} // namespace adreg
