#ifndef FSAN_TOEPLITZ_HPP
#define FSAN_TOEPLITZ_HPP

#include <span>
#include <vector>

#include <fsan/linalg.hpp>
#include <fsan/model.hpp>

namespace fsan
{

///
/// Coefficient tensor of a d-level block Toeplitz matrix.
///
/// Shape (2N_1 - 1) x ... x (2N_d - 1), addressed by signed multi-indices
/// k_i in [-(N_i - 1), N_i - 1]. Storage is row-major over the shifted
/// indices k_i + N_i - 1 with dimension 1 outermost, so the flat offset of
/// -k is `size() - 1 - offset(k)` and the zero lag sits at `center()`.
///
class HalfSpectrumTensor
{
public:
    HalfSpectrumTensor() = default;
    /// Zero tensor shaped for `dims`.
    explicit HalfSpectrumTensor(DimsSpec dims);
    HalfSpectrumTensor(DimsSpec dims, CVector values);

    const DimsSpec& dims() const noexcept { return dims_; }
    Index size() const noexcept { return values_.size(); }
    Index center() const noexcept { return (values_.size() - 1) / 2; }
    /// Extent of dimension i, 2 N_i - 1.
    Index extent(Index i) const { return 2 * dims_.size(i) - 1; }

    const CVector& values() const noexcept { return values_; }
    CVector& values() noexcept { return values_; }

    /// Flat offset of a signed lag multi-index.
    Index offset(std::span<const Index> lag) const;
    /// Signed lag multi-index of a flat offset.
    std::vector<Index> lag(Index offset) const;

    Complex& operator()(std::span<const Index> lag) { return values_(offset(lag)); }
    Complex operator()(std::span<const Index> lag) const { return values_(offset(lag)); }
    Complex& at(std::initializer_list<Index> lag) { return (*this)(std::span(lag.begin(), lag.size())); }
    Complex at(std::initializer_list<Index> lag) const
    {
        return (*this)(std::span(lag.begin(), lag.size()));
    }

    /// max_k |B(-k) - conj(B(k))|.
    double conjugate_symmetry_defect() const;

    HalfSpectrumTensor& operator+=(const HalfSpectrumTensor& other);
    HalfSpectrumTensor& operator-=(const HalfSpectrumTensor& other);
    HalfSpectrumTensor& operator*=(Complex s);

    friend HalfSpectrumTensor operator+(HalfSpectrumTensor a, const HalfSpectrumTensor& b)
    {
        return a += b;
    }
    friend HalfSpectrumTensor operator-(HalfSpectrumTensor a, const HalfSpectrumTensor& b)
    {
        return a -= b;
    }
    friend HalfSpectrumTensor operator*(Complex s, HalfSpectrumTensor a) { return a *= s; }

private:
    DimsSpec dims_;
    CVector values_;
};

/// B_f(k) = prod_i exp(i 2 pi k_i f_i), the tensor with T(B_f) = a(f) a(f)^H.
HalfSpectrumTensor atom_tensor(const FrequencyTuple& f, const DimsSpec& dims);

/// sum_l sigma_l B_{f_l}. Conjugate-symmetric when all gains are real.
HalfSpectrumTensor model_tensor(const SpectralModel& model, const DimsSpec& dims);

///
/// Coefficients of the degree-one trigonometric polynomial
/// g(f) = r_{-1} e^{i2pi f} + r_0 + r_1 e^{-i2pi f} attached to dimension
/// `dim` (0-based). `r_minus1()` is always conj(r_1), which makes g real.
///
struct GCoefficients
{
    double r0 = 0.0;
    Complex r1{0.0, 0.0};
    Index dim = 0;

    Complex r_minus1() const noexcept { return std::conj(r1); }
};

/// T(B): entry (m, n) = B(m - n) over multi-indices on the full grid.
CMatrix build_level_toeplitz(const HalfSpectrumTensor& b);

/// Adjoint of build_level_toeplitz under sum(conj(.) .*): lag k collects the
/// sum of M over every (row, col) pair whose multi-index difference is k.
HalfSpectrumTensor adjoint_level_toeplitz(const CMatrix& m, const DimsSpec& dims);

/// T_g(B): entry (m, n) = sum_{k=-1..1} r_k B(m - n - k e_dim) over
/// multi-indices on the reduced grid (N_1 - 1) x ... x (N_d - 1).
CMatrix build_tg(const HalfSpectrumTensor& b, const GCoefficients& g);

/// Adjoint of build_tg for fixed coefficients.
HalfSpectrumTensor adjoint_tg(const CMatrix& m, const GCoefficients& g, const DimsSpec& dims);

/// Number of eigenvalues above rel_tol * max(lambda_max, 0).
Index numerical_rank(const CMatrix& m, double rel_tol = 1e-6);

///
/// Precomputed index form of T(.). Each output entry reads one tensor slot,
/// so forward and adjoint maps are a gather and a scatter.
///
class ToeplitzMap
{
public:
    ToeplitzMap() = default;
    explicit ToeplitzMap(const DimsSpec& dims);

    Index rows() const noexcept { return n_; }
    const DimsSpec& dims() const noexcept { return dims_; }

    void apply(const CVector& tensor, CMatrix& out) const;
    void adjoint_add(const CMatrix& m, CVector& tensor) const;

    /// Multiplicity of each tensor slot among the matrix entries.
    const RVector& multiplicity() const noexcept { return multiplicity_; }
    /// Tensor slot read by each entry, column-major.
    const std::vector<Index>& slots() const noexcept { return slot_; }

private:
    DimsSpec dims_;
    Index n_ = 0;
    std::vector<Index> slot_;
    RVector multiplicity_;
};

/// Precomputed index form of T_g(.).
class ShiftedToeplitzMap
{
public:
    ShiftedToeplitzMap() = default;
    ShiftedToeplitzMap(const DimsSpec& dims, const GCoefficients& g);

    Index rows() const noexcept { return n_; }
    const GCoefficients& coefficients() const noexcept { return g_; }
    /// Tensor slot of the unshifted lag m - n for each entry, column-major.
    const std::vector<Index>& slots() const noexcept { return slot_; }

    void apply(const CVector& tensor, CMatrix& out) const;
    void adjoint_add(const CMatrix& m, CVector& tensor) const;

private:
    DimsSpec dims_;
    GCoefficients g_;
    Index n_      = 0;
    Index stride_ = 0;
    std::vector<Index> slot_;
};

} // namespace fsan

#endif // FSAN_TOEPLITZ_HPP
