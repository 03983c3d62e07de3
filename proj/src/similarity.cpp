#include "adreg/similarity.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace adreg {

namespace {

struct AxisSample {
    std::size_t i0 = 0;
    double t = 0.0;
    bool clamped = false;
    bool tie = false; // exactly on an interior grid plane
};

AxisSample locate(double x, std::size_t n)
{
    AxisSample s;
    const double hi = double(n - 1);
    if (x <= 0.0) {
        s.clamped = x < 0.0;
        return s;
    }
    if (x >= hi) {
        s.clamped = x > hi;
        s.i0 = n - 2;
        s.t = 1.0;
        return s;
    }
    const double f = std::floor(x);
    s.i0 = static_cast<std::size_t>(f);
    s.t = x - f;
    s.tie = s.t == 0.0 && s.i0 > 0;
    return s;
}

// Evaluates the multilinear interpolant and, optionally, its gradient.
class Interpolator {
public:
    explicit Interpolator(const ScalarField& image) : image_(image), shape_(image.shape()), rank_(shape_.rank()) {}

    bool locate_point(std::span<const double> point)
    {
        for (std::size_t a = 0; a < rank_; ++a) {
            if (!std::isfinite(point[a]))
                return false;
            axes_[a] = locate(point[a], shape_.size(a));
        }
        return true;
    }

    double value() const
    {
        double v = 0.0;
        const std::size_t corners = std::size_t{1} << rank_;
        for (std::size_t c = 0; c < corners; ++c) {
            double wgt = 1.0;
            std::size_t flat = 0;
            for (std::size_t a = 0; a < rank_; ++a) {
                const bool up = (c >> a) & 1;
                wgt *= up ? axes_[a].t : 1.0 - axes_[a].t;
                flat += (axes_[a].i0 + (up ? 1 : 0)) * shape_.stride(a);
            }
            if (wgt != 0.0)
                v += wgt * image_[flat];
        }
        return v;
    }

    double derivative(std::size_t axis) const
    {
        const AxisSample& s = axes_[axis];
        if (s.clamped)
            return 0.0;
        // Along `axis`: sample at i0 - 1 and i0 + 1 (tie) or i0 and i0 + 1.
        const std::size_t lo = s.tie ? s.i0 - 1 : s.i0;
        const std::size_t hi = s.i0 + 1;
        const double scale = s.tie ? 0.5 : 1.0;
        double d = 0.0;
        const std::size_t corners = std::size_t{1} << rank_;
        for (std::size_t c = 0; c < corners; ++c) {
            if ((c >> axis) & 1)
                continue;
            double wgt = 1.0;
            std::size_t base = 0;
            for (std::size_t a = 0; a < rank_; ++a) {
                if (a == axis)
                    continue;
                const bool up = (c >> a) & 1;
                wgt *= up ? axes_[a].t : 1.0 - axes_[a].t;
                base += (axes_[a].i0 + (up ? 1 : 0)) * shape_.stride(a);
            }
            if (wgt == 0.0)
                continue;
            const std::size_t stride = shape_.stride(axis);
            d += wgt * (image_[base + hi * stride] - image_[base + lo * stride]);
        }
        return scale * d;
    }

private:
    const ScalarField& image_;
    const GridShape& shape_;
    std::size_t rank_;
    std::array<AxisSample, 3> axes_{};
};

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

} // namespace

double sample(const ScalarField& image, std::span<const double> point)
{
    if (point.size() != image.shape().rank())
        throw ShapeMismatch("sample: point dimension does not match image rank");
    Interpolator interp(image);
    if (!interp.locate_point(point))
        return nan;
    return interp.value();
}

ScalarField warp(const ScalarField& image, const VectorField& u)
{
    require_same_shape(image.shape(), u.shape(), "warp");
    const auto& shape = image.shape();
    const std::size_t rank = shape.rank();
    ScalarField out(shape);
    Interpolator interp(image);
    std::array<std::size_t, 3> coord{};
    std::array<double, 3> point{};
    for (std::size_t i = 0; i < shape.count(); ++i) {
        shape.coordinate(i, std::span(coord.data(), rank));
        for (std::size_t a = 0; a < rank; ++a)
            point[a] = double(coord[a]) + u.component(a)[i];
        out[i] = interp.locate_point(std::span(point.data(), rank)) ? interp.value() : nan;
    }
    return out;
}

double ssd(const ScalarField& reference, const ScalarField& warped)
{
    require_same_shape(reference.shape(), warped.shape(), "ssd");
    double total = 0.0;
    for (std::size_t i = 0; i < reference.count(); ++i) {
        const double r = reference[i] - warped[i];
        total += r * r;
    }
    return total;
}

WarpAndGradient warp_and_gradient(const ScalarField& reference, const ScalarField& image, const VectorField& u)
{
    require_same_shape(reference.shape(), image.shape(), "ssd_gradient");
    require_same_shape(image.shape(), u.shape(), "ssd_gradient");
    const auto& shape = image.shape();
    const std::size_t rank = shape.rank();
    WarpAndGradient out{ScalarField(shape), VectorField(shape)};
    Interpolator interp(image);
    std::array<std::size_t, 3> coord{};
    std::array<double, 3> point{};
    for (std::size_t i = 0; i < shape.count(); ++i) {
        shape.coordinate(i, std::span(coord.data(), rank));
        for (std::size_t a = 0; a < rank; ++a)
            point[a] = double(coord[a]) + u.component(a)[i];
        if (!interp.locate_point(std::span(point.data(), rank))) {
            out.warped[i] = nan;
            for (std::size_t a = 0; a < rank; ++a)
                out.gradient.component(a)[i] = nan;
            continue;
        }
        const double v = interp.value();
        out.warped[i] = v;
        const double residual = v - reference[i];
        for (std::size_t a = 0; a < rank; ++a)
            out.gradient.component(a)[i] = residual == 0.0 ? 0.0 : residual * interp.derivative(a);
    }
    return out;
}

VectorField ssd_gradient(const ScalarField& reference, const ScalarField& image, const VectorField& u)
{
    return warp_and_gradient(reference, image, u).gradient;
}

} // namespace adreg
