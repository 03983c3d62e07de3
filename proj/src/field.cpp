#include "adreg/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace adreg {

GridShape::GridShape(std::vector<std::size_t> dims) : dims_(std::move(dims))
{
    if (dims_.empty() || dims_.size() > 3)
        throw std::invalid_argument("grid rank must be 1, 2 or 3, got " + std::to_string(dims_.size()));
    strides_.assign(dims_.size(), 1);
    count_ = 1;
    for (std::size_t a = dims_.size(); a-- > 0;) {
        if (dims_[a] < 2)
            throw std::invalid_argument("every grid axis needs at least 2 voxels");
        strides_[a] = count_;
        if (count_ > std::numeric_limits<std::size_t>::max() / dims_[a])
            throw std::overflow_error("grid element count overflows");
        count_ *= dims_[a];
    }
}

std::size_t GridShape::index(std::span<const std::size_t> coord) const
{
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a)
        flat += coord[a] * strides_[a];
    return flat;
}

void GridShape::coordinate(std::size_t flat, std::span<std::size_t> coord) const
{
    for (std::size_t a = 0; a < dims_.size(); ++a) {
        coord[a] = flat / strides_[a];
        flat %= strides_[a];
    }
}

std::string GridShape::str() const
{
    std::ostringstream os;
    for (std::size_t a = 0; a < dims_.size(); ++a)
        os << (a ? "x" : "") << dims_[a];
    return os.str();
}

void require_same_shape(const GridShape& a, const GridShape& b, const char* context)
{
    if (!(a == b))
        throw ShapeMismatch(std::string(context) + ": shape " + a.str() + " does not match " + b.str());
}

ScalarField::ScalarField(GridShape shape, double value)
    : shape_(std::move(shape)), data_(shape_.count(), value) {}

ScalarField::ScalarField(GridShape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (data_.size() != shape_.count())
        throw ShapeMismatch("scalar field data length does not match shape " + shape_.str());
}

VectorField::VectorField(GridShape shape)
    : shape_(std::move(shape)), planes_(shape_.rank(), std::vector<double>(shape_.count(), 0.0)) {}

VectorField::VectorField(GridShape shape, std::vector<std::vector<double>> planes)
    : shape_(std::move(shape)), planes_(std::move(planes))
{
    if (planes_.size() != shape_.rank())
        throw ShapeMismatch("vector field needs one plane per axis");
    for (const auto& p : planes_)
        if (p.size() != shape_.count())
            throw ShapeMismatch("vector field plane length does not match shape " + shape_.str());
}

MaskField::MaskField(GridShape shape, bool value)
    : shape_(std::move(shape)), data_(shape_.count(), value ? 1 : 0) {}

std::size_t MaskField::count_true() const
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ScalarField normalize_intensity(const ScalarField& field)
{
    if (field.count() == 0)
        throw std::invalid_argument("normalize_intensity: empty field");
    const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
    const double mn = *lo, range = *hi - *lo;
    ScalarField out(field.shape(), 0.0);
    if (range > 0.0)
        for (std::size_t i = 0; i < field.count(); ++i)
            out[i] = (field[i] - mn) / range;
    return out;
}

// ---------------------------------------------------------------------------
// NDF

namespace {

constexpr char ndf_magic[4] = {'N', 'D', 'F', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v)
{
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p)
{
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

double get_f64(const std::uint8_t* p)
{
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= std::uint64_t(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError(FormatError::Kind::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw FormatError(FormatError::Kind::io, "write failed for " + path.string());
}

void encode_header(std::vector<std::uint8_t>& out, const GridShape& shape, std::size_t components)
{
    out.insert(out.end(), std::begin(ndf_magic), std::end(ndf_magic));
    out.push_back(static_cast<std::uint8_t>(shape.rank()));
    out.push_back(static_cast<std::uint8_t>(components));
    for (auto n : shape.dims()) {
        if (n > std::numeric_limits<std::uint32_t>::max())
            throw FormatError(FormatError::Kind::bad_header, "axis size exceeds u32");
        put_u32(out, static_cast<std::uint32_t>(n));
    }
}

} // namespace

std::vector<std::uint8_t> encode_ndf(const AnyField& field)
{
    std::vector<std::uint8_t> out;
    std::visit([&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ScalarField>) {
            encode_header(out, f.shape(), 1);
            out.reserve(out.size() + 8 * f.count());
            for (double v : f.data())
                put_f64(out, v);
        } else {
            encode_header(out, f.shape(), f.components());
            out.reserve(out.size() + 8 * f.shape().count() * f.components());
            for (std::size_t c = 0; c < f.components(); ++c)
                for (double v : f.component(c))
                    put_f64(out, v);
        }
    }, field);
    return out;
}

AnyField decode_ndf(std::span<const std::uint8_t> bytes)
{
    using K = FormatError::Kind;
    if (bytes.size() < 6)
        throw FormatError(K::truncated, "NDF header truncated");
    if (!std::equal(std::begin(ndf_magic), std::end(ndf_magic), bytes.begin()))
        throw FormatError(K::bad_magic, "not an NDF file (bad magic)");
    const std::size_t rank = bytes[4];
    const std::size_t comps = bytes[5];
    if (rank < 1 || rank > 3)
        throw FormatError(K::bad_header, "NDF axis count must be 1..3, got " + std::to_string(rank));
    if (comps != 1 && comps != rank)
        throw FormatError(K::bad_header, "NDF component count must be 1 or " + std::to_string(rank));
    const std::size_t header = 6 + 4 * rank;
    if (bytes.size() < header)
        throw FormatError(K::truncated, "NDF header truncated");
    std::vector<std::size_t> dims(rank);
    for (std::size_t a = 0; a < rank; ++a) {
        dims[a] = get_u32(bytes.data() + 6 + 4 * a);
        if (dims[a] < 2)
            throw FormatError(K::bad_header, "NDF axis size must be at least 2");
    }
    GridShape shape(std::move(dims));
    const std::size_t n = shape.count();
    const std::size_t expected = header + 8 * n * comps;
    if (bytes.size() < expected)
        throw FormatError(K::truncated, "NDF payload truncated: expected " + std::to_string(expected) +
                                            " bytes, got " + std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw FormatError(K::size_mismatch, "NDF payload longer than header declares");

    std::vector<std::vector<double>> planes(comps, std::vector<double>(n));
    const std::uint8_t* p = bytes.data() + header;
    for (auto& plane : planes)
        for (auto& v : plane) {
            v = get_f64(p);
            p += 8;
        }
    // A 1-axis file with one component is ambiguous; it always reads as scalar.
    if (comps == 1)
        return ScalarField(std::move(shape), std::move(planes[0]));
    return VectorField(std::move(shape), std::move(planes));
}

AnyField read_ndf(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    return decode_ndf(bytes);
}

ScalarField read_ndf_scalar(const std::filesystem::path& path)
{
    auto any = read_ndf(path);
    if (auto* s = std::get_if<ScalarField>(&any))
        return std::move(*s);
    throw FormatError(FormatError::Kind::bad_header, path.string() + ": expected a scalar NDF field");
}

VectorField read_ndf_vector(const std::filesystem::path& path)
{
    auto any = read_ndf(path);
    if (auto* v = std::get_if<VectorField>(&any))
        return std::move(*v);
    // 1D displacement fields have a single component and decode as scalar.
    auto& s = std::get<ScalarField>(any);
    if (s.shape().rank() == 1)
        return VectorField(s.shape(), {s.values()});
    throw FormatError(FormatError::Kind::bad_header, path.string() + ": expected a vector NDF field");
}

void write_ndf(const ScalarField& field, const std::filesystem::path& path)
{
    spill(path, encode_ndf(field));
}

void write_ndf(const VectorField& field, const std::filesystem::path& path)
{
    spill(path, encode_ndf(field));
}

// ---------------------------------------------------------------------------
// PGM

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos)
{
    auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
    while (pos < bytes.size()) {
        if (is_space(bytes[pos]))
            ++pos;
        else if (bytes[pos] == '#')
            while (pos < bytes.size() && bytes[pos] != '\n')
                ++pos;
        else
            break;
    }
    std::string tok;
    while (pos < bytes.size() && !is_space(bytes[pos]))
        tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
}

unsigned long pgm_number(const std::vector<std::uint8_t>& bytes, std::size_t& pos)
{
    const auto tok = pgm_token(bytes, pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw FormatError(FormatError::Kind::bad_header, "malformed PGM header");
    return std::stoul(tok);
}

} // namespace

ScalarField read_pgm(const std::filesystem::path& path)
{
    using K = FormatError::Kind;
    const auto bytes = slurp(path);
    std::size_t pos = 0;
    const auto magic = pgm_token(bytes, pos);
    if (magic != "P5")
        throw FormatError(K::unsupported, "unsupported image format '" + magic + "' (only binary P5 PGM)");
    const auto width = pgm_number(bytes, pos);
    const auto height = pgm_number(bytes, pos);
    const auto maxval = pgm_number(bytes, pos);
    if (maxval != 255 && maxval != 65535)
        throw FormatError(K::bad_maxval, "PGM maxval must be 255 or 65535, got " + std::to_string(maxval));
    ++pos; // single whitespace byte after maxval
    const std::size_t bpp = maxval == 255 ? 1 : 2;
    // 1-row images are stored as 1D fields.
    GridShape shape = height == 1 ? GridShape{width} : GridShape{height, width};
    const std::size_t n = shape.count();
    if (bytes.size() < pos + n * bpp)
        throw FormatError(K::truncated, "PGM pixel data truncated");
    ScalarField out(shape);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned p = bpp == 1 ? bytes[pos + i] : (unsigned(bytes[pos + 2 * i]) << 8 | bytes[pos + 2 * i + 1]);
        out[i] = double(p) / double(maxval);
    }
    return out;
}

void write_pgm(const ScalarField& field, const std::filesystem::path& path, unsigned maxval)
{
    using K = FormatError::Kind;
    if (maxval != 255 && maxval != 65535)
        throw FormatError(K::bad_maxval, "PGM maxval must be 255 or 65535");
    const auto& shape = field.shape();
    if (shape.rank() > 2)
        throw FormatError(K::unsupported, "PGM export supports 1D and 2D fields only");
    const std::size_t width = shape.size(shape.rank() - 1);
    const std::size_t height = shape.rank() == 2 ? shape.size(0) : 1;

    std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : field.data()) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::floor(clamped * maxval + 0.5));
        if (maxval == 255) {
            out.push_back(static_cast<std::uint8_t>(q));
        } else {
            out.push_back(static_cast<std::uint8_t>(q >> 8));
            out.push_back(static_cast<std::uint8_t>(q & 0xff));
        }
    }
    spill(path, out);
}

} // namespace adreg
