// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adreg/dct.hpp"
#include "adreg/harness.hpp"
#include "adreg/similarity.hpp"
#include "adreg/solver.hpp"
#include "adreg/spectral.hpp"
#include "adreg/synth.hpp"
#include "oracles.hpp"

using namespace adreg;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome dct_correctness()
{
    std::mt19937_64 rng(101);
    double round_trip = 0.0, oracle_err = 0.0, parseval = 0.0;
    for (const auto& shape : {GridShape{64}, GridShape{1000}, GridShape{17, 31}, GridShape{64, 64}, GridShape{9, 10, 11},
                              GridShape{64, 64, 64}}) {
        const DctPlan plan(shape);
        const auto x = oracle::random_field(rng, shape);
        const auto c = forward_dct(plan, x);
        round_trip = std::max(round_trip, oracle::max_abs_diff(inverse_dct(plan, c).data(), x.data()));
        double sx = 0.0, sc = 0.0;
        for (std::size_t i = 0; i < shape.count(); ++i) {
            sx += x[i] * x[i];
            sc += c[i] * c[i];
        }
        parseval = std::max(parseval, std::abs(sc - sx) / sx);
    }
    std::vector<GridShape> small;
    for (std::size_t n = 2; n <= 16; ++n)
        small.push_back(GridShape{n});
    for (const auto& s : {GridShape{16, 16}, GridShape{5, 12}, GridShape{4, 6, 8}})
        small.push_back(s);
    for (const auto& shape : small) {
        const DctPlan plan(shape);
        const auto x = oracle::random_field(rng, shape);
        const Eigen::VectorXd expect = oracle::dct_matrix(shape) * oracle::as_vector(x.data());
        oracle_err = std::max(oracle_err, (oracle::as_vector(forward_dct(plan, x).data()) - expect).cwiseAbs().maxCoeff());
    }

    const GridShape big{64, 64, 64};
    const auto x = oracle::random_field(rng, big);
    const auto t0 = std::chrono::steady_clock::now();
    const DctPlan plan(big);
    const auto back = inverse_dct(plan, forward_dct(plan, x));
    const double elapsed = seconds_since(t0);

    Outcome o;
    o.pass = round_trip < 1e-12 && oracle_err < 1e-12 && parseval < 1e-10 && elapsed < 1.0 && back.count() == big.count();
    o.detail = "round trip " + fmt("%.2e", round_trip) + ", oracle " + fmt("%.2e", oracle_err) + ", Parseval " +
               fmt("%.2e", parseval) + ", 64^3 forward+inverse " + fmt("%.3f", elapsed) + " s";
    return o;
}

Outcome spectrum_oracle()
{
    double worst = 0.0;
    for (std::size_t n = 2; n <= 16; ++n) {
        const Eigen::MatrixXd l = oracle::neumann_laplacian(n);
        const Eigen::MatrixXd c = oracle::dct_matrix(n);
        const auto k = laplacian_eigen_1d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double expect = 2.0 * (1.0 - std::cos(std::numbers::pi * double(i) / double(n)));
            worst = std::max(worst, std::abs(k[i] - expect));
            const Eigen::VectorXd q = c.row(Eigen::Index(i)).transpose();
            worst = std::max(worst, (l * q - k[i] * q).cwiseAbs().maxCoeff());
        }
    }
    for (const auto& shape : {GridShape{4, 7}, GridShape{3, 4, 5}}) {
        const Eigen::MatrixXd l = oracle::neumann_laplacian(shape);
        const Eigen::MatrixXd c = oracle::dct_matrix(shape);
        const auto k = model_spectrum(shape).k;
        for (std::size_t i = 0; i < shape.count(); ++i) {
            const Eigen::VectorXd q = c.row(Eigen::Index(i)).transpose();
            worst = std::max(worst, (l * q - k[i] * q).cwiseAbs().maxCoeff());
        }
    }
    return {worst < 1e-10, "max eigen-residual " + fmt("%.2e", worst) + " for N <= 16 (plus 2D/3D grids)"};
}

// Per-frequency objective of the adaptive prior for model eigenvalue K = k^2.
double per_frequency(double lambda, double m, double kmodel)
{
    return 0.5 * lambda * m * m + 0.5 * kmodel / lambda;
}

Outcome lambda_optimality()
{
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> kd(0.05, 8.0), md(0.05, 10.0);
    const std::size_t n = 1000;
    ModelSpectrum model{GridShape{n}, std::vector<double>(n)};
    CoefficientMagnitude mag{GridShape{n}, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        model.k[i] = kd(rng);
        mag.mag[i] = md(rng);
    }
    const auto lambda = solve_lambda(model, mag);

    // log-spaced scan over [1e-4, 1e4]
    constexpr int steps = 40000;
    const double ratio = std::pow(10.0, 8.0 / steps);
    int beaten = 0, scan_miss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = mag.mag[i], kk = model.k[i] * model.k[i], l = lambda.lambda[i];
        const double f = per_frequency(l, m, kk);
        if (!(f < per_frequency(1.01 * l, m, kk) && f < per_frequency(0.99 * l, m, kk)))
            ++beaten;
        double best = 1e-4, best_f = per_frequency(best, m, kk);
        for (int s = 1; s <= steps; ++s) {
            const double cand = 1e-4 * std::pow(ratio, s);
            const double fc = per_frequency(cand, m, kk);
            if (fc < best_f) {
                best_f = fc;
                best = cand;
            }
        }
        if (std::abs(best - l) > l * (ratio - 1.0))
            ++scan_miss;
    }
    return {beaten == 0 && scan_miss == 0, std::to_string(n) + " pairs: " + std::to_string(beaten) +
                                               " beaten by a 1% perturbation, " + std::to_string(scan_miss) +
                                               " scan argmins off by more than one grid step"};
}

Outcome reweighted_identity()
{
    std::mt19937_64 rng(104);
    double worst = 0.0;
    for (const auto& shape : {GridShape{32}, GridShape{16, 16}, GridShape{6, 7, 8}}) {
        const auto model = model_spectrum(shape);
        for (int t = 0; t < 20; ++t) {
            std::vector<SpectralField> s;
            for (std::size_t c = 0; c < shape.rank(); ++c)
                s.emplace_back(shape, oracle::random_values(rng, shape.count(), -5.0, 5.0));
            const auto mag = coefficient_magnitude(s);
            const double direct = adaptive_penalty(s, model);
            const double via = reweighted_penalty(solve_lambda(model, mag), mag, model);
            worst = std::max(worst, std::abs(via - direct) / direct);
        }
    }
    return {worst < 1e-10, "max relative difference " + fmt("%.2e", worst) + " over 60 random spectra"};
}

Outcome l1_equivalence()
{
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> ud(-10.0, 10.0);
    double worst = 0.0, worst_arg = 0.0;
    for (int t = 0; t < 100; ++t) {
        double u = ud(rng);
        if (std::abs(u) < 1e-3)
            u = 1e-3;
        const double au = std::abs(u);
        // scan a over a log grid around the expected minimizer's range
        double best = std::numeric_limits<double>::infinity(), best_a = 0.0;
        for (int s = 0; s <= 60000; ++s) {
            const double a = std::pow(10.0, -4.0 + 8.0 * s / 60000.0);
            const double v = a * u * u + 1.0 / a;
            if (v < best) {
                best = v;
                best_a = a;
            }
        }
        worst = std::max(worst, std::abs(best - 2.0 * au) / (2.0 * au));
        worst_arg = std::max(worst_arg, std::abs(best_a * au - 1.0));
    }
    return {worst < 1e-3 && worst_arg < 1e-3,
            "scanned minimum vs 2|u| " + fmt("%.2e", worst) + " relative, argmin |a|u| - 1| " + fmt("%.2e", worst_arg) + " over 100 u"};
}

Outcome gradient_check()
{
    constexpr double h = 1e-5;
    std::mt19937_64 rng(106);
    const GridShape shape{8, 8};
    std::uniform_real_distribution<double> ud(-0.8, 0.8);
    double worst = 0.0;
    int checked = 0;
    for (int t = 0; t < 25; ++t) {
        const auto i = oracle::smooth_random_image(rng, shape);
        const auto j = oracle::smooth_random_image(rng, shape);
        VectorField u(shape);
        for (std::size_t c = 0; c < 2; ++c)
            for (auto& x : u.component(c))
                x = ud(rng);
        const auto g = ssd_gradient(i, j, u);
        std::vector<std::size_t> coord(2);
        for (std::size_t v = 0; v < shape.count(); ++v) {
            shape.coordinate(v, coord);
            if (coord[0] == 0 || coord[1] == 0 || coord[0] == 7 || coord[1] == 7)
                continue;
            for (std::size_t c = 0; c < 2; ++c) {
                // skip samples next to the clamp box or on a cell face
                const double p = double(coord[c]) + u.component(c)[v];
                const double frac = p - std::floor(p);
                if (p < 0.5 || p > 6.5 || frac < 0.01 || frac > 0.99)
                    continue;
                const double keep = u.component(c)[v];
                u.component(c)[v] = keep + h;
                const double up = ssd(i, warp(j, u));
                u.component(c)[v] = keep - h;
                const double down = ssd(i, warp(j, u));
                u.component(c)[v] = keep;
                // the analytic gradient carries half the derivative of the square
                const double fd = 0.5 * (up - down) / (2.0 * h);
                worst = std::max(worst, std::abs(g.component(c)[v] - fd) / std::max(std::abs(fd), 1e-6));
                ++checked;
            }
        }
    }
    return {worst < 1e-3 && checked > 0,
            "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " interior entries, 25 cases"};
}

Outcome monotonicity()
{
    int runs = 0, violations = 0, rejected = 0;
    const auto check = [&](const ScalarField& image, const SynthConfig& sc, RegularizerMode mode, double w) {
        const auto c = make_case(image, sc);
        SolverConfig cfg;
        cfg.mode = mode;
        cfg.w = w;
        cfg.gamma = default_sweep_gamma;
        const auto r = register_images(c.source, image, std::nullopt, cfg,
                                       [&](const IterationRecord& rec) { rejected += !rec.accepted; });
        for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
            if (r.objective_trace[t] > r.objective_trace[t - 1])
                ++violations;
        ++runs;
    };
    for (auto kind : {PhantomKind::disk, PhantomKind::rings, PhantomKind::blobs})
        for (std::uint64_t seed : {1, 2}) {
            const auto image = make_phantom(kind, GridShape{64, 64}, seed);
            check(image, SynthConfig{0.15, 3.0, seed}, RegularizerMode::adaptive, 1.0);
            check(image, SynthConfig{0.15, 3.0, seed}, RegularizerMode::quadratic, 10.0);
        }
    const auto vol = make_phantom(PhantomKind::blobs, GridShape{16, 16, 16}, 1);
    check(vol, SynthConfig{0.25, 1.0, 1}, RegularizerMode::adaptive, 1.0);
    check(vol, SynthConfig{0.25, 1.0, 1}, RegularizerMode::quadratic, 10.0);
    return {violations == 0, std::to_string(runs) + " traces (disk, rings, blobs, 2D and 3D), " +
                                 std::to_string(violations) + " increases, " + std::to_string(rejected) +
                                 " rejected steps"};
}

Outcome identity_registration()
{
    double worst = 0.0;
    int max_iters = 0;
    for (const auto& shape : {GridShape{64, 64}, GridShape{16, 16, 16}})
        for (auto mode : {RegularizerMode::adaptive, RegularizerMode::quadratic}) {
            const auto image = make_phantom(PhantomKind::blobs, shape, 7);
            SolverConfig cfg;
            cfg.mode = mode;
            const auto r = register_images(image, image, std::nullopt, cfg);
            max_iters = std::max(max_iters, r.iterations);
            for (std::size_t c = 0; c < r.u.components(); ++c)
                for (double v : r.u.component(c))
                    worst = std::max(worst, std::abs(v));
        }
    return {worst < 1e-6 && max_iters <= 5,
            "max |u| " + fmt("%.2e", worst) + ", at most " + std::to_string(max_iters) + " iterations"};
}

Outcome trend_reproduction()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto run = [](RegularizerMode mode, std::vector<double> weights) {
        SweepSpec spec;
        spec.mode = mode;
        spec.weights = std::move(weights);
        spec.trials = 10;
        spec.sigma = 3.0;
        spec.spacing_frac = 0.15;
        spec.phantom = "blobs";
        spec.phantom_shape = {64, 64};
        return summarize(run_sweep(spec));
    };
    const auto adaptive = run(RegularizerMode::adaptive, {0.5, 1.0, 2.0, 4.0});
    const auto quadratic = run(RegularizerMode::quadratic, {5.0, 10.0, 20.0, 50.0});
    const double elapsed = seconds_since(t0);

    auto best = [](const std::vector<SweepSummary>& s) {
        return *std::min_element(s.begin(), s.end(),
                                 [](const SweepSummary& a, const SweepSummary& b) { return a.median_final < b.median_final; });
    };
    const auto ba = best(adaptive), bq = best(quadratic);
    const bool complete = adaptive.size() == 4 && quadratic.size() == 4 &&
                          std::all_of(adaptive.begin(), adaptive.end(), [](const SweepSummary& s) { return s.runs == 10; }) &&
                          std::all_of(quadratic.begin(), quadratic.end(), [](const SweepSummary& s) { return s.runs == 10; });
    const bool a = ba.median_final < 1.0;
    const bool b = ba.median_final < bq.median_final;
    bool c = true;
    std::string reductions;
    for (const auto& s : adaptive) {
        const double red = 1.0 - s.median_final / s.median_initial;
        c = c && red >= 0.6;
        reductions += (reductions.empty() ? "" : " ") + fmt("w=%g:", s.w) + fmt("%.0f%%", 100.0 * red);
    }
    std::string table = "adaptive";
    for (const auto& s : adaptive)
        table += fmt(" %g:", s.w) + fmt("%.3f", s.median_final);
    table += "; quadratic";
    for (const auto& s : quadratic)
        table += fmt(" %g:", s.w) + fmt("%.3f", s.median_final);

    Outcome o;
    o.pass = complete && a && b && c && elapsed < 600.0;
    o.detail = std::string("(a) ") + (a ? "pass" : "FAIL") + " best adaptive median " + fmt("%.3f", ba.median_final) +
               fmt(" at w=%g", ba.w) + "; (b) " + (b ? "pass" : "FAIL") + " best quadratic median " +
               fmt("%.3f", bq.median_final) + fmt(" at w=%g", bq.w) + "; (c) " + (c ? "pass" : "FAIL") +
               " reductions " + reductions + "; medians " + table + "; initial median " +
               fmt("%.3f", ba.median_initial) + "; " + fmt("%.1f", elapsed) + " s";
    return o;
}

Outcome kl_diagnostic()
{
    std::mt19937_64 rng(110);
    std::uniform_real_distribution<double> ld(0.01, 20.0);
    const GridShape shape{16, 16};
    const auto model = model_spectrum(shape);
    double min_kl = std::numeric_limits<double>::infinity(), match = 0.0;
    for (int t = 0; t < 200; ++t) {
        AdaptiveSpectrum l{shape, std::vector<double>(shape.count())};
        for (auto& x : l.lambda)
            x = ld(rng);
        min_kl = std::min(min_kl, kl_spectra(l, model));
    }
    // random model spectra matched exactly
    for (int t = 0; t < 50; ++t) {
        ModelSpectrum m{shape, std::vector<double>(shape.count())};
        AdaptiveSpectrum l{shape, std::vector<double>(shape.count())};
        for (std::size_t i = 0; i < shape.count(); ++i) {
            m.k[i] = std::sqrt(ld(rng));
            l.lambda[i] = m.k[i] * m.k[i];
        }
        match = std::max(match, std::abs(kl_spectra(l, m)));
    }
    // a single perturbed entry must register as a positive divergence
    AdaptiveSpectrum near{shape, std::vector<double>(shape.count())};
    for (std::size_t i = 0; i < shape.count(); ++i)
        near.lambda[i] = model.k[i] * model.k[i];
    near.lambda[5] = 1.001 * near.lambda[5];
    const double off = kl_spectra(near, model);
    return {min_kl > 0.0 && match < 1e-12 && off > 0.0,
            "min over 200 random spectra " + fmt("%.3e", min_kl) + ", matched " + fmt("%.2e", match) +
                ", one entry off by 0.1% " + fmt("%.2e", off)};
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_tool(const std::string& args)
{
    const std::string cmd = std::string("\"") + ADREG_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

Outcome determinism()
{
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "adreg_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };

    const std::string sweep = "sweep --mode adaptive --weights 0.5,2 --trials 3 --sigma 3 --shape 48,48 --out ";
    int failures = 0;
    failures += run_tool(sweep + p("a.csv")) != 0;
    failures += run_tool(sweep + p("b.csv")) != 0;
    const bool sweep_same = failures == 0 && read_file(p("a.csv")) == read_file(p("b.csv")) && !read_file(p("a.csv")).empty();

    failures += run_tool("synth --phantom blobs --shape 48,48 --sigma 3 --seed 4 --out-dir " + dir.string() + " --prefix c") != 0;
    const std::string reg = "register --reference " + p("c_source.ndf") + " --source " + p("c_image.ndf") +
                            " --gamma 20 --w 1 --out ";
    failures += run_tool(reg + p("u1.ndf")) != 0;
    failures += run_tool(reg + p("u2.ndf")) != 0;
    const bool reg_same = failures == 0 && read_file(p("u1.ndf")) == read_file(p("u2.ndf")) && !read_file(p("u1.ndf")).empty();
    return {sweep_same && reg_same, std::string("sweep CSV ") + (sweep_same ? "identical" : "DIFFERS") +
                                        ", register NDF " + (reg_same ? "identical" : "DIFFERS") +
                                        (failures ? ", tool failures " + std::to_string(failures) : "")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"DCT correctness", dct_correctness},
        {"Laplacian spectrum oracle", spectrum_oracle},
        {"closed-form lambda optimality", lambda_optimality},
        {"reweighted penalty identity", reweighted_identity},
        {"weighted-L2 / L1 equivalence", l1_equivalence},
        {"SSD gradient check", gradient_check},
        {"objective monotonicity", monotonicity},
        {"identity registration", identity_registration},
        {"adaptive vs quadratic trend", trend_reproduction},
        {"KL diagnostic", kl_diagnostic},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%2zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - std::size_t(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
