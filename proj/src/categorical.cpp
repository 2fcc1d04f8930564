#include "selfprior/categorical.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace selfprior {

std::size_t RandomStream::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
}

namespace {

Eigen::VectorXd to_vector(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

}  // namespace

ProbVector::ProbVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) throw std::invalid_argument("ProbVector: dimension must be at least 1");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
            throw std::invalid_argument("ProbVector: entry " + std::to_string(i) + " is negative or not finite");
    }
    if (std::abs(values_.sum() - 1.0) > kSimplexTolerance)
        throw std::invalid_argument("ProbVector: entries do not sum to 1");
}

ProbVector::ProbVector(std::initializer_list<double> values) : ProbVector(to_vector(values)) {}

ProbVector ProbVector::uniform(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("ProbVector::uniform: dimension must be at least 1");
    return ProbVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), 1.0 / static_cast<double>(dim)));
}

ProbVector ProbVector::one_hot(std::size_t index, std::size_t dim) {
    return ProbVector(OneHotIndex(index, dim).vector());
}

LogitsVector::LogitsVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) throw std::invalid_argument("LogitsVector: dimension must be at least 1");
    if (!values_.allFinite()) throw std::invalid_argument("LogitsVector: entries must be finite");
}

LogitsVector::LogitsVector(std::initializer_list<double> values) : LogitsVector(to_vector(values)) {}

OneHotIndex::OneHotIndex(std::size_t index_, std::size_t dim_) : index(index_), dim(dim_) {
    if (dim == 0 || index >= dim) throw std::invalid_argument("OneHotIndex: index out of range");
}

Eigen::VectorXd OneHotIndex::vector() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(index)] = 1.0;
    return v;
}

ProbVector softmax(const LogitsVector& logits) {
    const Eigen::VectorXd& x = logits.values();
    Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
    return ProbVector(e / e.sum());
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: dimension mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    // Rounding can leave a tiny negative residue when p and q nearly coincide.
    return kl > 0.0 ? kl : 0.0;
}

double entropy(const ProbVector& p) {
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    return h > 0.0 ? h : 0.0;
}

OneHotIndex sample_categorical(const ProbVector& p, RandomStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        acc += p[i];
        last_positive = i;
        if (u < acc) return OneHotIndex(i, p.size());
    }
    return OneHotIndex(last_positive, p.size());
}

ProbVector normalize_counts(std::span<const double> counts) {
    if (counts.empty()) throw std::invalid_argument("normalize_counts: empty counts");
    double total = 0.0;
    for (double c : counts) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("normalize_counts: negative or non-finite count");
        total += c;
    }
    if (total <= 0.0) throw std::invalid_argument("normalize_counts: all counts are zero");
    Eigen::VectorXd v(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) v[static_cast<Eigen::Index>(i)] = counts[i] / total;
    return ProbVector(std::move(v));
}

Eigen::VectorXd clamped_log(const Eigen::VectorXd& x) {
    return x.array().max(kLogFloor).log().matrix();
}

}  // namespace selfprior
