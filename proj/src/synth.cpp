#include "adreg/synth.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "adreg/similarity.hpp"

namespace adreg {

double GaussianSource::uniform()
{
    return double(engine_() >> 11) * 0x1.0p-53;
}

double GaussianSource::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double x, y, s;
    do {
        x = 2.0 * uniform() - 1.0;
        y = 2.0 * uniform() - 1.0;
        s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * f;
    has_spare_ = true;
    return x * f;
}

void SynthConfig::validate() const
{
    if (!(spacing_frac > 0.0) || spacing_frac > 0.5)
        throw std::invalid_argument("synth: spacing fraction must lie in (0, 0.5]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("synth: sigma must be non-negative");
}

double tps_kernel(std::size_t rank, double r)
{
    switch (rank) {
    case 1: return r * r * r;
    case 2: return r > 0.0 ? r * r * std::log(r) : 0.0;
    default: return r;
    }
}

namespace {

double distance(const Point& a, const Point& b, std::size_t rank)
{
    double s = 0.0;
    for (std::size_t i = 0; i < rank; ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace

Point TpsModel::evaluate(const Point& x) const
{
    Point out{};
    std::vector<double> kernel(points.size());
    for (std::size_t j = 0; j < points.size(); ++j)
        kernel[j] = tps_kernel(rank, distance(x, points[j], rank));
    for (std::size_t c = 0; c < weights.size(); ++c) {
        double v = affine[c][0];
        for (std::size_t i = 0; i < rank; ++i)
            v += affine[c][i + 1] * x[i];
        for (std::size_t j = 0; j < points.size(); ++j)
            v += weights[c][j] * kernel[j];
        out[c] = v;
    }
    return out;
}

std::vector<double> control_axis(std::size_t size, double spacing_frac)
{
    if (!(spacing_frac > 0.0) || spacing_frac > 0.5)
        throw std::invalid_argument("control_grid: spacing fraction must lie in (0, 0.5]");
    const auto spacing = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(double(size) * spacing_frac)));
    std::vector<double> axis;
    for (std::size_t p = 0; p < size; p += spacing)
        axis.push_back(double(p));
    if (axis.back() != double(size - 1))
        axis.push_back(double(size - 1));
    if (axis.size() < 2)
        throw std::invalid_argument("control_grid: fewer than 2 control points along an axis");
    return axis;
}

std::vector<Point> control_grid(const GridShape& shape, double spacing_frac)
{
    std::vector<std::vector<double>> axes;
    for (std::size_t a = 0; a < shape.rank(); ++a)
        axes.push_back(control_axis(shape.size(a), spacing_frac));

    std::vector<Point> points;
    std::vector<std::size_t> idx(shape.rank(), 0);
    while (true) {
        Point p{};
        for (std::size_t a = 0; a < shape.rank(); ++a)
            p[a] = axes[a][idx[a]];
        points.push_back(p);
        std::size_t a = shape.rank();
        while (a-- > 0) {
            if (++idx[a] < axes[a].size())
                break;
            idx[a] = 0;
        }
        if (a == std::size_t(-1))
            break;
    }
    return points;
}

std::vector<Point> perturb(const std::vector<Point>& points, std::size_t rank, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0))
        throw std::invalid_argument("perturb: sigma must be non-negative");
    GaussianSource rng(seed);
    std::vector<Point> out(points.size(), Point{});
    for (auto& d : out)
        for (std::size_t a = 0; a < rank; ++a)
            d[a] = sigma * rng.normal();
    return out;
}

TpsModel tps_fit(const std::vector<Point>& points, const std::vector<Point>& displacements, std::size_t rank)
{
    if (rank < 1 || rank > 3)
        throw std::invalid_argument("tps_fit: rank must be 1, 2 or 3");
    if (points.size() != displacements.size())
        throw std::invalid_argument("tps_fit: point and displacement counts differ");
    const std::size_t n = points.size();
    const std::size_t m = rank + 1;
    if (n < m)
        throw SingularSystem("tps_fit: need at least rank + 1 control points");

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(Eigen::Index(n + m), Eigen::Index(n + m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double u = tps_kernel(rank, distance(points[i], points[j], rank));
            system(Eigen::Index(i), Eigen::Index(j)) = u;
            system(Eigen::Index(j), Eigen::Index(i)) = u;
        }
        system(Eigen::Index(i), Eigen::Index(n)) = 1.0;
        system(Eigen::Index(n), Eigen::Index(i)) = 1.0;
        for (std::size_t a = 0; a < rank; ++a) {
            system(Eigen::Index(i), Eigen::Index(n + 1 + a)) = points[i][a];
            system(Eigen::Index(n + 1 + a), Eigen::Index(i)) = points[i][a];
        }
    }

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(Eigen::Index(n + m), Eigen::Index(rank));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < rank; ++c)
            rhs(Eigen::Index(i), Eigen::Index(c)) = displacements[i][c];

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw SingularSystem("tps_fit: spline system is singular (degenerate control point geometry)");
    const Eigen::MatrixXd sol = lu.solve(rhs);

    TpsModel model;
    model.rank = rank;
    model.points = points;
    model.weights.assign(rank, std::vector<double>(n));
    model.affine.assign(rank, std::vector<double>(m));
    for (std::size_t c = 0; c < rank; ++c) {
        for (std::size_t j = 0; j < n; ++j)
            model.weights[c][j] = sol(Eigen::Index(j), Eigen::Index(c));
        for (std::size_t a = 0; a < m; ++a)
            model.affine[c][a] = sol(Eigen::Index(n + a), Eigen::Index(c));
    }
    return model;
}

VectorField tps_evaluate(const TpsModel& model, const GridShape& shape)
{
    if (model.rank != shape.rank())
        throw ShapeMismatch("tps_evaluate: model rank does not match grid rank");
    VectorField out(shape);
    std::vector<std::size_t> coord(shape.rank());
    for (std::size_t i = 0; i < shape.count(); ++i) {
        shape.coordinate(i, coord);
        Point x{};
        for (std::size_t a = 0; a < shape.rank(); ++a)
            x[a] = double(coord[a]);
        const Point u = model.evaluate(x);
        for (std::size_t a = 0; a < shape.rank(); ++a)
            out.component(a)[i] = u[a];
    }
    return out;
}

SynthCase make_case(const ScalarField& image, const SynthConfig& config)
{
    config.validate();
    const auto& shape = image.shape();
    const auto points = control_grid(shape, config.spacing_frac);
    const auto disp = perturb(points, shape.rank(), config.sigma, config.seed);

    SynthCase out;
    out.model = tps_fit(points, disp, shape.rank());
    out.u_true = tps_evaluate(out.model, shape);
    out.source = warp(image, out.u_true);
    return out;
}

} // namespace adreg
