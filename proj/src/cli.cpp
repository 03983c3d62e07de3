#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adreg/harness.hpp"

namespace adreg {

namespace {

using json = nlohmann::ordered_json;

ScalarField load_scalar(const std::string& path)
{
    if (std::filesystem::path(path).extension() == ".pgm")
        return read_pgm(path);
    return read_ndf_scalar(path);
}

void save_scalar(const ScalarField& field, const std::string& path)
{
    if (std::filesystem::path(path).extension() == ".pgm")
        write_pgm(field, path);
    else
        write_ndf(field, path);
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

GridShape parse_shape(const std::vector<std::size_t>& dims)
{
    return GridShape(dims);
}

struct SynthArgs {
    std::string image;
    std::string phantom = "blobs";
    std::vector<std::size_t> shape{64, 64};
    std::uint64_t phantom_seed = 1;
    double sigma = 6.0;
    double spacing = 0.15;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string prefix = "case";
};

void run_synth(const SynthArgs& a)
{
    const ScalarField image = normalize_intensity(
        a.image.empty() ? make_phantom(parse_phantom(a.phantom), parse_shape(a.shape), a.phantom_seed) : load_scalar(a.image));
    const SynthConfig cfg{a.spacing, a.sigma, a.seed};
    const SynthCase c = make_case(image, cfg);

    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    const auto base = [&](const std::string& suffix) { return (dir / (a.prefix + suffix)).string(); };
    write_ndf(image, base("_image.ndf"));
    write_ndf(c.source, base("_source.ndf"));
    write_ndf(c.u_true, base("_u_true.ndf"));
    if (image.shape().rank() <= 2) {
        write_pgm(image, base("_image.pgm"));
        write_pgm(c.source, base("_source.pgm"));
    }

    json meta;
    meta["seed"] = a.seed;
    meta["sigma"] = a.sigma;
    meta["spacing_frac"] = a.spacing;
    meta["shape"] = image.shape().dims();
    meta["origin"] = a.image.empty() ? "phantom:" + a.phantom : a.image;
    if (a.image.empty())
        meta["phantom_seed"] = a.phantom_seed;
    meta["control_points"] = c.model.points.size();
    meta["convention"] = "source(x) = image(x + u_true(x)); register with --reference source --source image and compare with u_true";
    meta["image"] = base("_image.ndf");
    meta["source"] = base("_source.ndf");
    meta["u_true"] = base("_u_true.ndf");
    write_text(base(".json"), meta.dump(2) + "\n");
    std::cout << base(".json") << "\n";
}

struct RegisterArgs {
    std::string reference, source, init, out = "u_est.ndf", result, log;
    std::string mode = "adaptive";
    SolverConfig cfg;
    bool no_safeguard = false;
    bool no_normalize = false;
};

void run_register(RegisterArgs a)
{
    a.cfg.mode = parse_mode(a.mode);
    a.cfg.step_safeguard = !a.no_safeguard;
    ScalarField reference = load_scalar(a.reference);
    ScalarField source = load_scalar(a.source);
    if (!a.no_normalize) {
        reference = normalize_intensity(reference);
        source = normalize_intensity(source);
    }
    std::optional<VectorField> u0;
    if (!a.init.empty())
        u0 = read_ndf_vector(a.init);

    std::ofstream log_file;
    IterationLogger logger;
    if (!a.log.empty()) {
        log_file.open(a.log, std::ios::trunc);
        if (!log_file)
            throw std::runtime_error("cannot write " + a.log);
        logger = [&](const IterationRecord& r) { log_file << format_record(r) << "\n"; };
    }

    const auto res = register_images(reference, source, u0, a.cfg, logger);
    write_ndf(res.u, a.out);

    json j;
    j["mode"] = std::string(to_string(a.cfg.mode));
    j["w"] = a.cfg.w;
    j["gamma"] = a.cfg.gamma;
    j["final_gamma"] = res.final_gamma;
    j["epsilon"] = a.cfg.epsilon;
    j["max_iter"] = a.cfg.max_iter;
    j["rel_tol"] = a.cfg.rel_tol;
    j["step_safeguard"] = a.cfg.step_safeguard;
    j["iterations"] = res.iterations;
    j["termination"] = std::string(to_string(res.termination));
    j["initial_objective"] = res.objective_trace.front();
    j["final_objective"] = res.objective_trace.back();
    j["objective_trace"] = res.objective_trace;
    j["u_est"] = a.out;
    const std::string text = j.dump(2) + "\n";
    if (!a.result.empty())
        write_text(a.result, text);
    std::cout << "iterations " << res.iterations << " termination " << to_string(res.termination) << " objective "
              << format_double(res.objective_trace.back()) << "\n";
}

struct EvalArgs {
    std::string u_true, u_est, mask_image;
    double tau = default_mask_threshold;
};

void run_eval(const EvalArgs& a)
{
    const VectorField t = read_ndf_vector(a.u_true);
    const VectorField e = read_ndf_vector(a.u_est);
    std::optional<MaskField> mask;
    if (!a.mask_image.empty())
        mask = threshold_mask(normalize_intensity(load_scalar(a.mask_image)), a.tau);
    const auto m = displacement_error(t, e, mask ? &*mask : nullptr);
    std::cout << "rmse " << format_double(m.rmse) << "\n"
              << "mse_paper " << format_double(m.mse_paper) << "\n"
              << "voxels " << m.voxels << "\n";
}

struct SweepArgs {
    std::string spec_file, out, summary, mode = "adaptive";
    SweepSpec spec;
    bool timing = false;
};

void run_sweep_cmd(SweepArgs a, const CLI::App& sub)
{
    SweepSpec spec = a.spec;
    if (!a.spec_file.empty()) {
        spec = sweep_spec_from_json(read_text(a.spec_file));
        // Explicit flags override the file.
        if (sub.count("--jobs"))
            spec.jobs = a.spec.jobs;
    } else {
        spec.mode = parse_mode(a.mode);
    }
    const auto rows = run_sweep(spec);
    const std::string csv = sweep_csv(rows, a.timing);
    if (a.out.empty())
        std::cout << csv;
    else
        write_text(a.out, csv);

    if (!a.summary.empty()) {
        std::ostringstream os;
        os << "mode,w,runs,median_initial_rmse,median_final_rmse,q1_final_rmse,q3_final_rmse\r\n";
        for (const auto& s : summarize(rows))
            os << to_string(spec.mode) << ',' << format_double(s.w) << ',' << s.runs << ','
               << format_double(s.median_initial) << ',' << format_double(s.median_final) << ','
               << format_double(s.q1_final) << ',' << format_double(s.q3_final) << "\r\n";
        write_text(a.summary, os.str());
    }
}

struct PhantomArgs {
    std::string kind = "blobs";
    std::vector<std::size_t> shape{64, 64};
    std::uint64_t seed = 1;
    std::string out = "phantom.ndf";
};

void run_phantom(const PhantomArgs& a)
{
    save_scalar(make_phantom(parse_phantom(a.kind), parse_shape(a.shape), a.seed), a.out);
}

} // namespace

int run_cli(int argc, const char* const* argv)
{
    CLI::App app{"Adaptive spectral regularization for non-rigid image registration"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Deform an image with a random thin-plate spline field");
    s->add_option("--image", synth.image, "Input image (NDF or PGM); omit to use a phantom");
    s->add_option("--phantom", synth.phantom, "Phantom kind when no image is given");
    s->add_option("--shape", synth.shape, "Phantom shape")->delimiter(',');
    s->add_option("--phantom-seed", synth.phantom_seed, "Phantom seed");
    s->add_option("--sigma", synth.sigma, "Control point perturbation std (voxels)");
    s->add_option("--spacing", synth.spacing, "Control point spacing fraction");
    s->add_option("--seed", synth.seed, "Deformation seed");
    s->add_option("--out-dir", synth.out_dir, "Output directory");
    s->add_option("--prefix", synth.prefix, "Output file prefix");

    RegisterArgs reg;
    auto* r = app.add_subcommand("register", "Register a source image onto a reference image");
    r->add_option("--reference", reg.reference, "Reference image I")->required();
    r->add_option("--source", reg.source, "Source image J")->required();
    r->add_option("--mode", reg.mode, "adaptive or quadratic");
    r->add_option("--w", reg.cfg.w, "Regularization weight");
    r->add_option("--gamma", reg.cfg.gamma, "Time step");
    r->add_option("--epsilon", reg.cfg.epsilon, "Magnitude guard");
    r->add_option("--max-iter", reg.cfg.max_iter, "Iteration limit");
    r->add_option("--tol", reg.cfg.rel_tol, "Relative objective change tolerance");
    r->add_flag("--no-safeguard", reg.no_safeguard, "Accept every step without the objective check");
    r->add_flag("--no-normalize", reg.no_normalize, "Do not rescale intensities to [0, 1]");
    r->add_option("--init", reg.init, "Initial displacement NDF");
    r->add_option("--out", reg.out, "Estimated displacement NDF");
    r->add_option("--result", reg.result, "Result JSON");
    r->add_option("--log", reg.log, "Per-iteration log");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Displacement error between two fields");
    e->add_option("--true", ev.u_true, "Ground truth displacement NDF")->required();
    e->add_option("--est", ev.u_est, "Estimated displacement NDF")->required();
    e->add_option("--mask-image", ev.mask_image, "Image thresholded to build the mask");
    e->add_option("--tau", ev.tau, "Mask threshold");

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "Run a regularization weight sweep and write CSV");
    w->add_option("--spec", sw.spec_file, "Sweep spec JSON");
    w->add_option("--mode", sw.mode, "adaptive or quadratic");
    w->add_option("--weights", sw.spec.weights, "Weights")->delimiter(',');
    w->add_option("--trials", sw.spec.trials, "Trials per weight");
    w->add_option("--sigma", sw.spec.sigma, "Control point perturbation std");
    w->add_option("--spacing", sw.spec.spacing_frac, "Control point spacing fraction");
    w->add_option("--seeds", sw.spec.seeds, "Explicit trial seeds")->delimiter(',');
    w->add_option("--image", sw.spec.image, "Image path; omit to use phantoms");
    w->add_option("--phantom", sw.spec.phantom, "Phantom kind");
    w->add_option("--shape", sw.spec.phantom_shape, "Phantom shape")->delimiter(',');
    w->add_option("--gamma", sw.spec.gamma, "Time step");
    w->add_option("--max-iter", sw.spec.max_iter, "Iteration limit");
    w->add_option("--tol", sw.spec.rel_tol, "Relative objective change tolerance");
    w->add_option("--tau", sw.spec.mask_threshold, "Mask threshold");
    w->add_option("--jobs", sw.spec.jobs, "Parallel trials");
    w->add_option("--out", sw.out, "CSV output (stdout when omitted)");
    w->add_option("--summary", sw.summary, "Per-weight median/quartile CSV");
    w->add_flag("--timing", sw.timing, "Fill wall_time_seconds (makes output non-reproducible)");

    PhantomArgs ph;
    auto* p = app.add_subcommand("phantom", "Write a built-in test image");
    p->add_option("--kind", ph.kind, "disk, rings or blobs");
    p->add_option("--shape", ph.shape, "Shape")->delimiter(',');
    p->add_option("--seed", ph.seed, "Seed");
    p->add_option("--out", ph.out, "Output path (.ndf or .pgm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        std::cerr << "adreg: " << ex.what() << "\n";
        return 2;
    }

    try {
        if (s->parsed())
            run_synth(synth);
        else if (r->parsed())
            run_register(reg);
        else if (e->parsed())
            run_eval(ev);
        else if (w->parsed())
            run_sweep_cmd(sw, *w);
        else if (p->parsed())
            run_phantom(ph);
    } catch (const std::exception& ex) {
        std::cerr << "adreg: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace adreg
