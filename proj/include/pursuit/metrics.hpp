#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pursuit/linalg.hpp"

namespace pursuit {

// K-sparse signal in R^n: 1-based support plus the nonzero values, aligned
// with the support in ascending index order.
class SparseSignal {
public:
    SparseSignal(int length, IndexSet support, std::vector<double> values)
        : length_(length), support_(std::move(support)), values_(std::move(values)) {
        if (length_ < 1)
            throw input_domain_error("SparseSignal: length must be positive");
        if (support_.max_index() > length_)
            throw input_domain_error("SparseSignal: support index " +
                                     std::to_string(support_.max_index()) +
                                     " exceeds length " + std::to_string(length_));
        if (static_cast<int>(values_.size()) != support_.size())
            throw input_domain_error("SparseSignal: " + std::to_string(values_.size()) +
                                     " values for " + std::to_string(support_.size()) +
                                     " support indices");
        for (double v : values_) {
            if (!std::isfinite(v))
                throw input_domain_error("SparseSignal: values must be finite");
            if (v == 0.0)
                throw input_domain_error("SparseSignal: support values must be nonzero");
        }
    }

    // Every exactly-zero entry is off the support; everything else is on it.
    static SparseSignal from_dense(const Vector& x) {
        std::vector<int> support;
        std::vector<double> values;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x(i) != 0.0) {
                support.push_back(static_cast<int>(i) + 1);
                values.push_back(x(i));
            }
        }
        return SparseSignal(static_cast<int>(x.size()), IndexSet(support), std::move(values));
    }

    int length() const { return length_; }
    int sparsity() const { return support_.size(); }
    const IndexSet& support() const { return support_; }
    const std::vector<double>& values() const { return values_; }

    Vector to_dense() const {
        Vector x = Vector::Zero(length_);
        for (int j = 0; j < support_.size(); ++j)
            x(support_[j] - 1) = values_[static_cast<std::size_t>(j)];
        return x;
    }

private:
    int length_;
    IndexSet support_;
    std::vector<double> values_;
};

// ||phi x||^2 / ||v||^2. Zero noise signals the noise-free regime and comes
// back as +inf; callers treat every SNR condition as satisfied there.
inline double compute_snr(const Matrix& phi, const SparseSignal& x, const Vector& v) {
    if (x.length() != phi.cols())
        throw input_domain_error("compute_snr: signal length does not match column count");
    if (v.size() != phi.rows())
        throw input_domain_error("compute_snr: noise length does not match row count");
    double num = (phi * x.to_dense()).squaredNorm();
    double den = v.squaredNorm();
    if (den == 0.0)
        return std::numeric_limits<double>::infinity();
    return num / den;
}

// Minimum-to-average power ratio: K * min_j |x_j|^2 / ||x||^2, in (0, 1].
inline double compute_mar(const SparseSignal& x) {
    if (x.sparsity() == 0)
        throw input_domain_error("compute_mar: empty support");
    double min_sq = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (double v : x.values()) {
        min_sq = std::min(min_sq, v * v);
        total += v * v;
    }
    return static_cast<double>(x.sparsity()) * min_sq / total;
}

// Largest-to-smallest magnitude ratio, >= 1.
inline double compute_kappa(const SparseSignal& x) {
    if (x.sparsity() == 0)
        throw input_domain_error("compute_kappa: empty support");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double v : x.values()) {
        lo = std::min(lo, std::abs(v));
        hi = std::max(hi, std::abs(v));
    }
    return hi / lo;
}

struct InstanceMetrics {
    double snr = 0.0;
    double mar = 0.0;
    double kappa = 0.0;
};

inline InstanceMetrics compute_instance_metrics(const Matrix& phi, const SparseSignal& x,
                                                const Vector& v) {
    return {compute_snr(phi, x, v), compute_mar(x), compute_kappa(x)};
}

// C(n, k), saturating at UINT64_MAX instead of overflowing.
inline std::uint64_t binomial_saturating(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 acc = 1;
    for (int i = 1; i <= k; ++i) {
        acc = acc * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (acc > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(acc);
}

inline constexpr std::uint64_t default_subset_cap = 2'000'000;

struct RipEstimate {
    int order = 0;
    double delta = 0.0;
    bool saturated = false;           // delta >= 1: no K-sparse lower frame bound left
    IndexSet witness;                 // first subset (in enumeration order) attaining delta
    std::uint64_t subsets_examined = 0;

    // CSV row per the documented schema: order, delta, witness, subsets_examined.
    std::string to_csv_row() const;
};

namespace detail {

// Advance an ascending 1-based k-subset of {1..n} to its colexicographic
// successor. Returns false after the last subset {n-k+1,...,n}.
inline bool next_subset_colex(std::vector<int>& s, int n) {
    const int k = static_cast<int>(s.size());
    for (int i = 0; i < k; ++i) {
        int limit = (i + 1 < k) ? s[static_cast<std::size_t>(i) + 1] - 1 : n;
        if (s[static_cast<std::size_t>(i)] < limit) {
            ++s[static_cast<std::size_t>(i)];
            for (int j = 0; j < i; ++j)
                s[static_cast<std::size_t>(j)] = j + 1;
            return true;
        }
    }
    return false;
}

} // namespace detail

// Exact restricted isometry constant of the given order, by exhaustive
// enumeration of all order-sized column subsets (colexicographic order;
// among equal extremes the first subset found is kept as the witness).
// The cap bounds C(n, order) and trips a capacity_error, not a wrong answer.
inline RipEstimate exact_rip_constant(const Matrix& phi, int order,
                                      std::uint64_t cap = default_subset_cap) {
    const int n = static_cast<int>(phi.cols());
    if (order < 1 || order > n)
        throw input_domain_error("exact_rip_constant: order " + std::to_string(order) +
                                 " outside [1, " + std::to_string(n) + "]");
    const std::uint64_t count = binomial_saturating(n, order);
    if (count > cap)
        throw capacity_error("exact_rip_constant: C(" + std::to_string(n) + ", " +
                             std::to_string(order) + ") = " + std::to_string(count) +
                             " subsets exceed the cap of " + std::to_string(cap));

    const Matrix gram = phi.transpose() * phi;
    RipEstimate est;
    est.order = order;
    est.delta = -1.0;

    std::vector<int> s(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) s[static_cast<std::size_t>(i)] = i + 1;
    Matrix gram_s(order, order);
    do {
        for (int a = 0; a < order; ++a)
            for (int b = 0; b < order; ++b)
                gram_s(a, b) = gram(s[static_cast<std::size_t>(a)] - 1,
                                    s[static_cast<std::size_t>(b)] - 1);
        auto [lo, hi] = symmetric_eigen_extremes(gram_s);
        double dev = std::max(1.0 - lo, hi - 1.0);
        ++est.subsets_examined;
        if (dev > est.delta) {
            est.delta = dev;
            est.witness = IndexSet(s);
        }
    } while (detail::next_subset_colex(s, n));

    est.delta = std::max(est.delta, 0.0);
    est.saturated = est.delta >= 1.0;
    return est;
}

inline std::string RipEstimate::to_csv_row() const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", delta);
    return std::to_string(order) + "," + buf + "," + witness.to_string() + "," +
           std::to_string(subsets_examined);
}

// Outcome of comparing an estimated support against the truth.
struct RecoveryReport {
    IndexSet missed;        // true support indices the estimate lacks
    IndexSet false_alarms;  // estimated indices outside the true support
    double rho_error = 0.0; // |false_alarms| / |true support|
    bool exact = false;
    // ||x - x_hat||_2 when the caller supplied the estimate; NaN otherwise.
    double l2_distortion = std::numeric_limits<double>::quiet_NaN();
};

inline RecoveryReport support_error_rate(const IndexSet& true_support,
                                         const IndexSet& estimated) {
    if (true_support.empty())
        throw input_domain_error("support_error_rate: true support is empty");
    RecoveryReport rep;
    rep.missed = true_support.difference(estimated);
    rep.false_alarms = estimated.difference(true_support);
    rep.rho_error = static_cast<double>(rep.false_alarms.size()) /
                    static_cast<double>(true_support.size());
    rep.exact = rep.missed.empty() && rep.false_alarms.empty();
    return rep;
}

inline RecoveryReport recovery_report(const SparseSignal& x, const IndexSet& estimated_support,
                                      const Vector& estimate) {
    if (estimate.size() != x.length())
        throw input_domain_error("recovery_report: estimate length mismatch");
    RecoveryReport rep = support_error_rate(x.support(), estimated_support);
    rep.l2_distortion = (x.to_dense() - estimate).norm();
    return rep;
}

// Worst-case estimate distortion under exact support recovery:
// ||v||_2 / sqrt(1 - delta_K). Undefined at delta_K >= 1.
inline double l2_distortion_bound(double delta_k, double noise_norm) {
    if (!(delta_k >= 0.0 && delta_k < 1.0))
        throw input_domain_error("l2_distortion_bound: delta must lie in [0, 1)");
    if (!(noise_norm >= 0.0) || !std::isfinite(noise_norm))
        throw input_domain_error("l2_distortion_bound: noise norm must be nonnegative");
    return noise_norm / std::sqrt(1.0 - delta_k);
}

// Exact RIP constants for a set of orders, keyed by order. Orders outside
// [1, n] are skipped (the caller decides which conditions then go unanswered).
inline std::map<int, RipEstimate> rip_table(const Matrix& phi, const std::vector<int>& orders,
                                            std::uint64_t cap = default_subset_cap) {
    std::map<int, RipEstimate> table;
    for (int order : orders) {
        if (order < 1 || order > phi.cols()) continue;
        if (!table.count(order))
            table.emplace(order, exact_rip_constant(phi, order, cap));
    }
    return table;
}

} // namespace pursuit
