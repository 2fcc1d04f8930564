#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace selfprior {

/// Floor applied to probabilities before any log is taken.
inline constexpr double kLogFloor = 1e-12;

/// Tolerance on the simplex constraint for ProbVector.
inline constexpr double kSimplexTolerance = 1e-9;

/// Seeded random stream. mt19937_64 is fully specified by the standard, and
/// the conversion to doubles is done here so draws are portable.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        ++draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);

    std::uint64_t draw_count() const { return draws_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
};

/// Finite categorical distribution. Entries are non-negative and sum to one.
class ProbVector {
public:
    /// Validates the simplex constraint; throws std::invalid_argument.
    explicit ProbVector(Eigen::VectorXd values);
    ProbVector(std::initializer_list<double> values);

    static ProbVector uniform(std::size_t dim);
    static ProbVector one_hot(std::size_t index, std::size_t dim);

    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
    const Eigen::VectorXd& values() const { return values_; }

private:
    Eigen::VectorXd values_;
};

/// Log-space scores, all finite.
class LogitsVector {
public:
    explicit LogitsVector(Eigen::VectorXd values);
    LogitsVector(std::initializer_list<double> values);

    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    const Eigen::VectorXd& values() const { return values_; }

private:
    Eigen::VectorXd values_;
};

/// Index into a categorical of dimension `dim`.
struct OneHotIndex {
    std::size_t index = 0;
    std::size_t dim = 1;

    OneHotIndex() = default;
    OneHotIndex(std::size_t index, std::size_t dim);

    Eigen::VectorXd vector() const;
    friend bool operator==(const OneHotIndex&, const OneHotIndex&) = default;
};

/// Max-subtracted softmax.
ProbVector softmax(const LogitsVector& logits);

/// KL[p || q] in nats with 0 log 0 = 0. Returns +infinity when q has a zero
/// where p does not (support mismatch).
double kl_divergence(const ProbVector& p, const ProbVector& q);

/// Shannon entropy in nats.
double entropy(const ProbVector& p);

/// Inverse-CDF draw; consumes exactly one uniform from `rng`.
OneHotIndex sample_categorical(const ProbVector& p, RandomStream& rng);

/// counts / sum(counts). Throws std::invalid_argument when no entry is positive.
ProbVector normalize_counts(std::span<const double> counts);

/// log(max(x, kLogFloor)) elementwise.
Eigen::VectorXd clamped_log(const Eigen::VectorXd& x);

}  // namespace selfprior
