#include <fsan/toeplitz.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fsan
{

namespace
{

Index tensor_size(const DimsSpec& dims)
{
    Index total = 1;
    for (Index n : dims.sizes())
    {
        total *= 2 * n - 1;
    }
    return total;
}

/// Row-major strides of the coefficient tensor.
std::vector<Index> tensor_strides(const DimsSpec& dims)
{
    std::vector<Index> strides(static_cast<std::size_t>(dims.d()));
    Index s = 1;
    for (Index i = dims.d(); i-- > 0;)
    {
        strides[static_cast<std::size_t>(i)] = s;
        s *= 2 * dims.size(i) - 1;
    }
    return strides;
}

/// For every point of the grid with sizes N_i - shrink (flat order, dimension
/// 1 outermost) the tensor-stride-weighted coordinate sum.
std::vector<Index> grid_offsets(const DimsSpec& dims, Index shrink)
{
    const auto strides = tensor_strides(dims);
    std::vector<Index> offsets{0};
    for (Index i = 0; i < dims.d(); ++i)
    {
        const Index n = dims.size(i) - shrink;
        std::vector<Index> next;
        next.reserve(offsets.size() * static_cast<std::size_t>(n));
        for (Index base : offsets)
        {
            for (Index k = 0; k < n; ++k)
            {
                next.push_back(base + k * strides[static_cast<std::size_t>(i)]);
            }
        }
        offsets = std::move(next);
    }
    return offsets;
}

void require_square(const CMatrix& m, Index n, const char* who)
{
    if (m.rows() != n || m.cols() != n)
    {
        throw std::invalid_argument(std::string(who) + ": expected a " + std::to_string(n) +
                                    "x" + std::to_string(n) + " matrix, got " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

} // namespace

HalfSpectrumTensor::HalfSpectrumTensor(DimsSpec dims)
    : dims_(std::move(dims)), values_(CVector::Zero(tensor_size(dims_)))
{
}

HalfSpectrumTensor::HalfSpectrumTensor(DimsSpec dims, CVector values)
    : dims_(std::move(dims)), values_(std::move(values))
{
    if (values_.size() != tensor_size(dims_))
    {
        throw std::invalid_argument("HalfSpectrumTensor: expected " +
                                    std::to_string(tensor_size(dims_)) + " values, got " +
                                    std::to_string(values_.size()));
    }
}

Index HalfSpectrumTensor::offset(std::span<const Index> lag) const
{
    if (static_cast<Index>(lag.size()) != dims_.d())
    {
        throw std::invalid_argument("HalfSpectrumTensor: lag has wrong dimension");
    }
    Index flat = 0;
    for (std::size_t i = 0; i < lag.size(); ++i)
    {
        const Index n = dims_.sizes()[i];
        if (lag[i] <= -n || lag[i] >= n)
        {
            throw std::out_of_range("HalfSpectrumTensor: lag out of range");
        }
        flat = flat * (2 * n - 1) + lag[i] + n - 1;
    }
    return flat;
}

std::vector<Index> HalfSpectrumTensor::lag(Index offset) const
{
    if (offset < 0 || offset >= size())
    {
        throw std::out_of_range("HalfSpectrumTensor: offset out of range");
    }
    std::vector<Index> k(static_cast<std::size_t>(dims_.d()));
    for (Index i = dims_.d(); i-- > 0;)
    {
        const Index n = dims_.size(i);
        k[static_cast<std::size_t>(i)] = offset % (2 * n - 1) - (n - 1);
        offset /= 2 * n - 1;
    }
    return k;
}

double HalfSpectrumTensor::conjugate_symmetry_defect() const
{
    double worst = 0.0;
    const Index m = size();
    for (Index p = 0; p < m; ++p)
    {
        worst = std::max(worst, std::abs(values_(m - 1 - p) - std::conj(values_(p))));
    }
    return worst;
}

HalfSpectrumTensor& HalfSpectrumTensor::operator+=(const HalfSpectrumTensor& other)
{
    if (other.dims_ != dims_)
    {
        throw std::invalid_argument("HalfSpectrumTensor: shape mismatch");
    }
    values_ += other.values_;
    return *this;
}

HalfSpectrumTensor& HalfSpectrumTensor::operator-=(const HalfSpectrumTensor& other)
{
    if (other.dims_ != dims_)
    {
        throw std::invalid_argument("HalfSpectrumTensor: shape mismatch");
    }
    values_ -= other.values_;
    return *this;
}

HalfSpectrumTensor& HalfSpectrumTensor::operator*=(Complex s)
{
    values_ *= s;
    return *this;
}

HalfSpectrumTensor atom_tensor(const FrequencyTuple& f, const DimsSpec& dims)
{
    if (f.d() != dims.d())
    {
        throw std::invalid_argument("atom_tensor: dimension mismatch");
    }
    CVector values = CVector::Ones(1);
    for (Index i = 0; i < dims.d(); ++i)
    {
        const Index n = dims.size(i);
        CVector s(2 * n - 1);
        for (Index k = -(n - 1); k <= n - 1; ++k)
        {
            const double phase = kTwoPi * (static_cast<double>(k) * f[i] -
                                           std::floor(static_cast<double>(k) * f[i]));
            s(k + n - 1) = Complex(std::cos(phase), std::sin(phase));
        }
        CVector next(values.size() * s.size());
        for (Index p = 0; p < values.size(); ++p)
        {
            next.segment(p * s.size(), s.size()) = values(p) * s;
        }
        values = std::move(next);
    }
    return HalfSpectrumTensor(dims, std::move(values));
}

HalfSpectrumTensor model_tensor(const SpectralModel& model, const DimsSpec& dims)
{
    HalfSpectrumTensor b(dims);
    for (const auto& e : model.entries())
    {
        b.values() += e.gain * atom_tensor(e.frequency, dims).values();
    }
    return b;
}

ToeplitzMap::ToeplitzMap(const DimsSpec& dims) : dims_(dims), n_(dims.total())
{
    const auto offsets = grid_offsets(dims, 0);
    const Index center = (tensor_size(dims) - 1) / 2;
    slot_.resize(static_cast<std::size_t>(n_ * n_));
    multiplicity_ = RVector::Zero(tensor_size(dims));
    for (Index c = 0; c < n_; ++c)
    {
        for (Index r = 0; r < n_; ++r)
        {
            const Index s = center + offsets[static_cast<std::size_t>(r)] -
                            offsets[static_cast<std::size_t>(c)];
            slot_[static_cast<std::size_t>(c * n_ + r)] = s;
            multiplicity_(s) += 1.0;
        }
    }
}

void ToeplitzMap::apply(const CVector& tensor, CMatrix& out) const
{
    out.resize(n_, n_);
    Complex* dst = out.data();
    const Complex* src = tensor.data();
    for (std::size_t p = 0; p < slot_.size(); ++p)
    {
        dst[p] = src[slot_[p]];
    }
}

void ToeplitzMap::adjoint_add(const CMatrix& m, CVector& tensor) const
{
    const Complex* src = m.data();
    Complex* dst = tensor.data();
    for (std::size_t p = 0; p < slot_.size(); ++p)
    {
        dst[slot_[p]] += src[p];
    }
}

ShiftedToeplitzMap::ShiftedToeplitzMap(const DimsSpec& dims, const GCoefficients& g)
    : dims_(dims), g_(g), n_(dims.total_reduced())
{
    if (g.dim < 0 || g.dim >= dims.d())
    {
        throw std::invalid_argument("ShiftedToeplitzMap: dimension index " +
                                    std::to_string(g.dim) + " outside [0, " +
                                    std::to_string(dims.d()) + ")");
    }
    stride_ = tensor_strides(dims)[static_cast<std::size_t>(g.dim)];
    const auto offsets = grid_offsets(dims, 1);
    const Index center = (tensor_size(dims) - 1) / 2;
    slot_.resize(static_cast<std::size_t>(n_ * n_));
    for (Index c = 0; c < n_; ++c)
    {
        for (Index r = 0; r < n_; ++r)
        {
            slot_[static_cast<std::size_t>(c * n_ + r)] =
                center + offsets[static_cast<std::size_t>(r)] - offsets[static_cast<std::size_t>(c)];
        }
    }
}

void ShiftedToeplitzMap::apply(const CVector& tensor, CMatrix& out) const
{
    out.resize(n_, n_);
    const Complex rm = g_.r_minus1();
    const Complex r0(g_.r0, 0.0);
    const Complex rp = g_.r1;
    Complex* dst = out.data();
    const Complex* src = tensor.data();
    // k = -1 reads lag (m - n) + e_dim, k = +1 reads (m - n) - e_dim
    for (std::size_t p = 0; p < slot_.size(); ++p)
    {
        const Index s = slot_[p];
        dst[p] = rm * src[s + stride_] + r0 * src[s] + rp * src[s - stride_];
    }
}

void ShiftedToeplitzMap::adjoint_add(const CMatrix& m, CVector& tensor) const
{
    const Complex rm = std::conj(g_.r_minus1());
    const double r0 = g_.r0;
    const Complex rp = std::conj(g_.r1);
    const Complex* src = m.data();
    Complex* dst = tensor.data();
    for (std::size_t p = 0; p < slot_.size(); ++p)
    {
        const Index s = slot_[p];
        dst[s + stride_] += rm * src[p];
        dst[s] += r0 * src[p];
        dst[s - stride_] += rp * src[p];
    }
}

CMatrix build_level_toeplitz(const HalfSpectrumTensor& b)
{
    CMatrix out;
    ToeplitzMap(b.dims()).apply(b.values(), out);
    return out;
}

HalfSpectrumTensor adjoint_level_toeplitz(const CMatrix& m, const DimsSpec& dims)
{
    require_square(m, dims.total(), "adjoint_level_toeplitz");
    HalfSpectrumTensor out(dims);
    ToeplitzMap(dims).adjoint_add(m, out.values());
    return out;
}

CMatrix build_tg(const HalfSpectrumTensor& b, const GCoefficients& g)
{
    CMatrix out;
    ShiftedToeplitzMap(b.dims(), g).apply(b.values(), out);
    return out;
}

HalfSpectrumTensor adjoint_tg(const CMatrix& m, const GCoefficients& g, const DimsSpec& dims)
{
    require_square(m, dims.total_reduced(), "adjoint_tg");
    HalfSpectrumTensor out(dims);
    ShiftedToeplitzMap(dims, g).adjoint_add(m, out.values());
    return out;
}

Index numerical_rank(const CMatrix& m, double rel_tol)
{
    if (m.rows() != m.cols())
    {
        throw std::invalid_argument("numerical_rank: matrix is not square");
    }
    if (!(rel_tol > 0.0))
    {
        throw std::invalid_argument("numerical_rank: tolerance must be positive");
    }
    const RVector lambda = hermitian_eigenvalues(m);
    if (lambda.size() == 0)
    {
        return 0;
    }
    const double cut = rel_tol * std::max(lambda.maxCoeff(), 0.0);
    Index rank = 0;
    for (Index j = 0; j < lambda.size(); ++j)
    {
        if (lambda(j) > cut)
        {
            ++rank;
        }
    }
    return rank;
}

} // namespace fsan
