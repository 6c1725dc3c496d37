#ifndef FSAN_MODEL_HPP
#define FSAN_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <fsan/linalg.hpp>

namespace fsan
{

///
/// Grid sizes of a d-dimensional sample array.
///
/// Flat indices put dimension 1 outermost: the sample at multi-index
/// (n_1, ..., n_d) lives at ((n_1 N_2 + n_2) N_3 + n_3) ... . This matches
/// the Kronecker order s_1 (x) ... (x) s_d of the steering vector.
///
class DimsSpec
{
public:
    DimsSpec() = default;
    explicit DimsSpec(std::vector<Index> sizes);
    DimsSpec(std::initializer_list<Index> sizes) : DimsSpec(std::vector<Index>(sizes)) {}

    Index d() const noexcept { return static_cast<Index>(sizes_.size()); }
    Index size(Index i) const { return sizes_.at(static_cast<std::size_t>(i)); }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    /// Product of N_i.
    Index total() const noexcept { return total_; }
    /// Product of (N_i - 1).
    Index total_reduced() const noexcept { return total_reduced_; }
    /// min_i N_i.
    Index min_size() const noexcept { return min_size_; }

    /// Flat index of a multi-index (dimension 1 outermost).
    Index flatten(std::span<const Index> multi) const;
    /// Inverse of flatten.
    std::vector<Index> unflatten(Index flat) const;

    friend bool operator==(const DimsSpec&, const DimsSpec&) = default;

private:
    std::vector<Index> sizes_;
    Index total_ = 0;
    Index total_reduced_ = 0;
    Index min_size_ = 0;
};

/// Reduces `f` modulo 1 into [0, 1).
double wrap_unit(double f) noexcept;

/// Per-component torus distance min(|a - b|, 1 - |a - b|) after wrapping.
double torus_distance(double a, double b) noexcept;

/// A frequency tuple with every component reduced modulo 1 into [0, 1).
class FrequencyTuple
{
public:
    FrequencyTuple() = default;
    explicit FrequencyTuple(std::vector<double> components);
    FrequencyTuple(std::initializer_list<double> components)
        : FrequencyTuple(std::vector<double>(components))
    {
    }

    Index d() const noexcept { return static_cast<Index>(f_.size()); }
    double operator[](Index i) const { return f_.at(static_cast<std::size_t>(i)); }
    const std::vector<double>& components() const noexcept { return f_; }

    /// Sum over components of the torus distance.
    double distance(const FrequencyTuple& other) const;

    friend bool operator==(const FrequencyTuple&, const FrequencyTuple&) = default;
    friend auto operator<=>(const FrequencyTuple&, const FrequencyTuple&) = default;

private:
    std::vector<double> f_;
};

struct SpectralComponent
{
    FrequencyTuple frequency;
    Complex gain;
};

///
/// A mixture of r complex sinusoids. Construction checks that frequency
/// tuples are pairwise distinct, share one dimensionality and that every
/// gain is nonzero.
///
class SpectralModel
{
public:
    SpectralModel() = default;
    explicit SpectralModel(std::vector<SpectralComponent> entries);

    Index order() const noexcept { return static_cast<Index>(entries_.size()); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<SpectralComponent>& entries() const noexcept { return entries_; }
    const SpectralComponent& operator[](Index l) const
    {
        return entries_.at(static_cast<std::size_t>(l));
    }

    std::vector<FrequencyTuple> frequencies() const;
    std::vector<Complex> gains() const;

    /// Dimensionality of the tuples, or 0 for the empty model.
    Index d() const noexcept { return entries_.empty() ? 0 : entries_.front().frequency.d(); }

private:
    std::vector<SpectralComponent> entries_;
};

///
/// Nonzero diagonal of the observation operator. Indices are kept sorted.
///
class ObservationMask
{
public:
    ObservationMask() = default;
    ObservationMask(DimsSpec dims, std::vector<Index> indices, std::vector<Complex> weights);
    /// Unit weights on every index.
    ObservationMask(DimsSpec dims, std::vector<Index> indices);

    static ObservationMask full(const DimsSpec& dims);

    const DimsSpec& dims() const noexcept { return dims_; }
    Index count() const noexcept { return static_cast<Index>(indices_.size()); }
    const std::vector<Index>& indices() const noexcept { return indices_; }
    const std::vector<Complex>& weights() const noexcept { return weights_; }

    friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

private:
    DimsSpec dims_;
    std::vector<Index> indices_;
    std::vector<Complex> weights_;
};

/// Observed samples y_j = w_j x_j, one per mask index; unobserved samples
/// are absent.
struct Observation
{
    ObservationMask mask;
    std::vector<Complex> values;
};

/// a(f) = s_1(f_1) (x) ... (x) s_d(f_d).
CVector steering_vector(const FrequencyTuple& f, const DimsSpec& dims);

/// Steering vector on the reduced grid (N_1 - 1) x ... x (N_d - 1).
CVector reduced_steering_vector(const FrequencyTuple& f, const DimsSpec& dims);

/// x = sum_l sigma_l a(f_l).
CVector synthesize(const SpectralModel& model, const DimsSpec& dims);

/// Same sum without the distinctness check on the tuples.
CVector synthesize(std::span<const SpectralComponent> components, const DimsSpec& dims);

Observation apply_mask(const CVector& x, const ObservationMask& mask);

/// Uniformly random `count`-subset of the grid with unit weights, drawn by a
/// partial Fisher-Yates shuffle of 0..N_D-1 from `CounterRng(seed)`: for
/// i < count, swap position i with i + below(N_D - i).
ObservationMask random_mask(const DimsSpec& dims, Index count, std::uint64_t seed);

/// ||x_hat - x_star|| / ||x_star||.
double nmse(const CVector& x_hat, const CVector& x_star);

///
/// Assignment of estimates to references minimizing the total torus
/// distance. Brute force over permutations; intended for r <= 8.
///
struct FrequencyMatch
{
    /// `assignment[l]` is the estimate index paired with reference l, or -1
    /// when there are fewer estimates than references.
    std::vector<Index> assignment;
    /// Per-reference largest component-wise torus error; +inf if unmatched.
    std::vector<double> max_component_error;
    double total_distance = 0.0;
};

FrequencyMatch match_frequencies(std::span<const FrequencyTuple> reference,
                                 std::span<const FrequencyTuple> estimate);

} // namespace fsan

#endif // FSAN_MODEL_HPP
