#include "adreg/dct.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace adreg {

namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

// Per-index product of per-axis factors, laid out like the grid.
std::vector<double> separable_product(const GridShape& shape, const std::vector<std::vector<double>>& axis_factors)
{
    std::vector<double> out(shape.count(), 1.0);
    std::vector<std::size_t> coord(shape.rank());
    for (std::size_t i = 0; i < out.size(); ++i) {
        shape.coordinate(i, coord);
        double f = 1.0;
        for (std::size_t a = 0; a < shape.rank(); ++a)
            f *= axis_factors[a][coord[a]];
        out[i] = f;
    }
    return out;
}

} // namespace

SpectralField::SpectralField(GridShape shape, std::vector<double> coef)
    : shape_(std::move(shape)), coef_(std::move(coef))
{
    if (coef_.size() != shape_.count())
        throw ShapeMismatch("spectral field length does not match shape " + shape_.str());
}

struct DctPlan::Impl {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
    std::vector<double> forward_scale;
    std::vector<double> inverse_scale;

    ~Impl()
    {
        std::lock_guard lock(planner_mutex());
        if (forward)
            fftw_destroy_plan(forward);
        if (inverse)
            fftw_destroy_plan(inverse);
    }
};

DctPlan::DctPlan(GridShape shape) : shape_(std::move(shape)), impl_(std::make_unique<Impl>())
{
    const int rank = static_cast<int>(shape_.rank());
    std::vector<int> n(shape_.rank());
    std::vector<fftw_r2r_kind> fwd_kind(shape_.rank(), FFTW_REDFT10);
    std::vector<fftw_r2r_kind> inv_kind(shape_.rank(), FFTW_REDFT01);

    // REDFT10 returns 2 sum x_j cos(...); REDFT01 returns X_0 + 2 sum_{k>0} X_k cos(...).
    std::vector<std::vector<double>> fwd_axis(shape_.rank()), inv_axis(shape_.rank());
    for (std::size_t a = 0; a < shape_.rank(); ++a) {
        const std::size_t len = shape_.size(a);
        n[a] = static_cast<int>(len);
        const double s0 = std::sqrt(1.0 / double(len));
        const double sk = std::sqrt(2.0 / double(len));
        fwd_axis[a].assign(len, sk / 2.0);
        fwd_axis[a][0] = s0 / 2.0;
        inv_axis[a].assign(len, sk / 2.0);
        inv_axis[a][0] = s0;
    }
    impl_->forward_scale = separable_product(shape_, fwd_axis);
    impl_->inverse_scale = separable_product(shape_, inv_axis);

    std::vector<double> scratch(shape_.count());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    impl_->forward = fftw_plan_r2r(rank, n.data(), scratch.data(), scratch.data(), fwd_kind.data(), flags);
    impl_->inverse = fftw_plan_r2r(rank, n.data(), scratch.data(), scratch.data(), inv_kind.data(), flags);
    if (!impl_->forward || !impl_->inverse)
        throw std::runtime_error("FFTW failed to create a DCT plan for shape " + shape_.str());
}

DctPlan::~DctPlan() = default;
DctPlan::DctPlan(DctPlan&&) noexcept = default;
DctPlan& DctPlan::operator=(DctPlan&&) noexcept = default;

void DctPlan::forward_inplace(std::span<double> data) const
{
    if (data.size() != shape_.count())
        throw ShapeMismatch("forward_dct: buffer length does not match plan shape " + shape_.str());
    fftw_execute_r2r(impl_->forward, data.data(), data.data());
    const auto& s = impl_->forward_scale;
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] *= s[i];
}

void DctPlan::inverse_inplace(std::span<double> data) const
{
    if (data.size() != shape_.count())
        throw ShapeMismatch("inverse_dct: buffer length does not match plan shape " + shape_.str());
    const auto& s = impl_->inverse_scale;
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] *= s[i];
    fftw_execute_r2r(impl_->inverse, data.data(), data.data());
}

SpectralField DctPlan::forward(std::span<const double> field) const
{
    SpectralField out(shape_, std::vector<double>(field.begin(), field.end()));
    forward_inplace(out.data());
    return out;
}

SpectralField DctPlan::forward(const ScalarField& field) const
{
    require_same_shape(field.shape(), shape_, "forward_dct");
    return forward(field.data());
}

ScalarField DctPlan::inverse(const SpectralField& spec) const
{
    require_same_shape(spec.shape(), shape_, "inverse_dct");
    std::vector<double> buf(spec.data().begin(), spec.data().end());
    inverse_inplace(buf);
    return ScalarField(shape_, std::move(buf));
}

SpectralField forward_dct(const DctPlan& plan, const ScalarField& field)
{
    return plan.forward(field);
}

ScalarField inverse_dct(const DctPlan& plan, const SpectralField& spec)
{
    return plan.inverse(spec);
}

} // namespace adreg
