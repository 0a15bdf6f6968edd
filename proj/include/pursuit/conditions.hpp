#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pursuit/metrics.hpp"

namespace pursuit {

// Strict inequalities hold only with this much room; borderline instances
// (|margin| at or below it) are reported as not holding.
inline constexpr double condition_margin_tolerance = 1e-12;

enum class ConditionId {
    Thm1Sufficient,  // sqrt(SNR) above the sufficient threshold (strict)
    Thm2Necessary,   // sqrt(SNR) above the necessary threshold (strict)
    RemarkSnrGtK,    // SNR > K, the delta->0, MAR=1 reduction (strict)
    Thm3SnrFloor,    // SNR >= kappa^2 * delta_2K^{-3/2} (non-strict)
    RipShapeThm1,    // delta_{K+1} < 1/(sqrt(K)+1), Theorem-1 applicability (strict)
};

inline const char* to_string(ConditionId id) {
    switch (id) {
        case ConditionId::Thm1Sufficient: return "THM1_SUFFICIENT";
        case ConditionId::Thm2Necessary:  return "THM2_NECESSARY";
        case ConditionId::RemarkSnrGtK:   return "REMARK_SNR_GT_K";
        case ConditionId::Thm3SnrFloor:   return "THM3_SNR_FLOOR";
        case ConditionId::RipShapeThm1:   return "RIP_SHAPE_THM1";
    }
    return "?";
}

// margin is always actual - threshold. Every condition except RipShapeThm1
// is satisfied by large actual values; RipShapeThm1 is the one upper bound
// (it wants delta small), so there holds means margin < -tolerance.
struct ConditionVerdict {
    ConditionId id;
    bool applicable = false; // required delta present and formula hypothesis met
    bool holds = false;
    double actual = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
    double margin = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void check_k_mar(int k, double mar, const char* what) {
    if (k < 1)
        throw input_domain_error(std::string(what) + ": sparsity must be positive");
    if (!(mar > 0.0 && mar <= 1.0))
        throw input_domain_error(std::string(what) + ": MAR must lie in (0, 1]");
}

} // namespace detail

// Theorem-1 applicability ceiling for delta_{K+1}.
inline double rip_shape_cap(int k) {
    return 1.0 / (std::sqrt(static_cast<double>(k)) + 1.0);
}

// Smallest sqrt(SNR) the sufficient recovery condition accepts:
// 2 sqrt(K) (1 + delta) / ((1 - (sqrt(K)+1) delta) sqrt(MAR)).
// Only defined below the RIP shape cap; outside it the condition is
// inapplicable rather than false, hence the dedicated error type.
inline double sufficient_snr_threshold(int k, double delta, double mar) {
    detail::check_k_mar(k, mar, "sufficient_snr_threshold");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw input_domain_error("sufficient_snr_threshold: delta must be a nonnegative real");
    const double root_k = std::sqrt(static_cast<double>(k));
    if (delta >= rip_shape_cap(k))
        throw hypothesis_error("sufficient_snr_threshold: delta " + std::to_string(delta) +
                               " at or above 1/(sqrt(K)+1); condition inapplicable");
    return 2.0 * root_k * (1.0 + delta) / ((1.0 - (root_k + 1.0) * delta) * std::sqrt(mar));
}

// SNR-scale variant, computed directly so exact cases stay exact
// (e.g. delta = 0, MAR = 1 gives exactly 4K).
inline double sufficient_snr_threshold_squared(int k, double delta, double mar) {
    detail::check_k_mar(k, mar, "sufficient_snr_threshold_squared");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw input_domain_error("sufficient_snr_threshold_squared: delta must be nonnegative");
    const double root_k = std::sqrt(static_cast<double>(k));
    if (delta >= rip_shape_cap(k))
        throw hypothesis_error("sufficient_snr_threshold_squared: delta at or above the cap");
    const double denom = 1.0 - (root_k + 1.0) * delta;
    return 4.0 * k * (1.0 + delta) * (1.0 + delta) / (denom * denom * mar);
}

// Smallest sqrt(SNR) below which recovery failure instances exist:
// sqrt(K) (1 + delta) / ((1 - sqrt(K) delta) sqrt(MAR)), for delta < 1/sqrt(K).
inline double necessary_snr_threshold(int k, double delta, double mar) {
    detail::check_k_mar(k, mar, "necessary_snr_threshold");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw input_domain_error("necessary_snr_threshold: delta must be a nonnegative real");
    const double root_k = std::sqrt(static_cast<double>(k));
    if (delta * root_k >= 1.0)
        throw hypothesis_error("necessary_snr_threshold: delta " + std::to_string(delta) +
                               " at or above 1/sqrt(K); condition inapplicable");
    return root_k * (1.0 + delta) / ((1.0 - root_k * delta) * std::sqrt(mar));
}

// SNR-scale variant; at delta = 0, MAR = 1 this is exactly K.
inline double necessary_snr_threshold_squared(int k, double delta, double mar) {
    detail::check_k_mar(k, mar, "necessary_snr_threshold_squared");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw input_domain_error("necessary_snr_threshold_squared: delta must be nonnegative");
    const double root_k = std::sqrt(static_cast<double>(k));
    if (delta * root_k >= 1.0)
        throw hypothesis_error("necessary_snr_threshold_squared: delta at or above 1/sqrt(K)");
    const double denom = 1.0 - root_k * delta;
    return k * (1.0 + delta) * (1.0 + delta) / (denom * denom * mar);
}

// sqrt(SNR) needed to guarantee the very first pick is correct:
// (sqrt(K)+1)(1 + delta) / (1 - (sqrt(K)+1) delta). No MAR dependence.
inline double first_iteration_snr_threshold(int k, double delta) {
    if (k < 1)
        throw input_domain_error("first_iteration_snr_threshold: sparsity must be positive");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw input_domain_error("first_iteration_snr_threshold: delta must be nonnegative");
    const double root_k = std::sqrt(static_cast<double>(k));
    if (delta >= rip_shape_cap(k))
        throw hypothesis_error("first_iteration_snr_threshold: delta at or above the cap");
    return (root_k + 1.0) * (1.0 + delta) / (1.0 - (root_k + 1.0) * delta);
}

struct DominanceComparison {
    double sufficient = 0.0;      // the all-iterations threshold (MAR-dependent)
    double first_iteration = 0.0; // the single-pick threshold
    bool dominates = false;       // sufficient >= first_iteration
};

// The sufficient threshold is never looser than the first-iteration one on
// its whole domain (they coincide at K = 1, MAR = 1).
inline DominanceComparison sufficient_threshold_dominates(int k, double delta, double mar) {
    DominanceComparison cmp;
    cmp.sufficient = sufficient_snr_threshold(k, delta, mar);
    cmp.first_iteration = first_iteration_snr_threshold(k, delta);
    cmp.dominates = cmp.sufficient >= cmp.first_iteration;
    return cmp;
}

// SNR floor of the error-rate guarantee: kappa^2 * delta_2K^{-3/2}.
// delta_2K = 0 puts the floor at +inf: only the noise-free regime qualifies.
inline double theorem3_snr_floor(double kappa, double delta_2k) {
    if (!(kappa >= 1.0) || !std::isfinite(kappa))
        throw input_domain_error("theorem3_snr_floor: kappa must be >= 1");
    if (!(delta_2k >= 0.0 && delta_2k < 1.0))
        throw input_domain_error("theorem3_snr_floor: delta must lie in [0, 1)");
    if (delta_2k == 0.0)
        return std::numeric_limits<double>::infinity();
    return kappa * kappa * std::pow(delta_2k, -1.5);
}

// Guaranteed ceiling on the support error rate, C * kappa^2 * sqrt(delta_2K),
// clipped to 1. C is a caller-supplied absolute constant; see the calibrate-c
// subcommand for an empirical estimate.
inline double theorem3_error_rate_bound(double kappa, double delta_2k, double c) {
    if (!(kappa >= 1.0) || !std::isfinite(kappa))
        throw input_domain_error("theorem3_error_rate_bound: kappa must be >= 1");
    if (!(delta_2k >= 0.0 && delta_2k < 1.0))
        throw input_domain_error("theorem3_error_rate_bound: delta must lie in [0, 1)");
    if (!(c > 0.0) || !std::isfinite(c))
        throw input_domain_error("theorem3_error_rate_bound: C must be positive");
    return std::min(1.0, c * kappa * kappa * std::sqrt(delta_2k));
}

struct ClassificationReport {
    InstanceMetrics metrics;
    int sparsity = 0;
    std::vector<ConditionVerdict> verdicts;
    // Necessary condition met but sufficient not: the regime where the theory
    // makes no promise either way.
    bool gap_region = false;
};

// Evaluate every condition the supplied delta table allows on one instance.
// deltas maps RIP order -> exact constant; orders K+1 and 2K unlock the
// theorem conditions, missing orders leave those verdicts inapplicable.
inline ClassificationReport classify_instance(const Matrix& phi, const SparseSignal& x,
                                              const Vector& v,
                                              const std::map<int, double>& deltas) {
    ClassificationReport rep;
    rep.metrics = compute_instance_metrics(phi, x, v);
    rep.sparsity = x.sparsity();
    const int k = x.sparsity();
    const double snr = rep.metrics.snr;
    const double root_snr = std::sqrt(snr);

    auto strict_holds = [](double margin) { return margin > condition_margin_tolerance; };

    { // SNR > K
        ConditionVerdict cv{ConditionId::RemarkSnrGtK};
        cv.applicable = true;
        cv.actual = snr;
        cv.threshold = static_cast<double>(k);
        cv.margin = cv.actual - cv.threshold;
        cv.holds = strict_holds(cv.margin);
        rep.verdicts.push_back(cv);
    }

    auto delta_at = [&](int order) -> std::optional<double> {
        auto it = deltas.find(order);
        if (it == deltas.end()) return std::nullopt;
        return it->second;
    };

    if (auto d = delta_at(k + 1)) {
        ConditionVerdict cv{ConditionId::RipShapeThm1};
        cv.applicable = true;
        cv.actual = *d;
        cv.threshold = rip_shape_cap(k);
        cv.margin = cv.actual - cv.threshold;
        cv.holds = cv.margin < -condition_margin_tolerance; // wants delta below the cap
        rep.verdicts.push_back(cv);

        ConditionVerdict suff{ConditionId::Thm1Sufficient};
        try {
            suff.threshold = sufficient_snr_threshold(k, *d, rep.metrics.mar);
            suff.applicable = true;
            suff.actual = root_snr;
            suff.margin = suff.actual - suff.threshold;
            suff.holds = strict_holds(suff.margin);
        } catch (const hypothesis_error&) {
            // delta at or above the cap: Theorem 1 says nothing here.
        }
        rep.verdicts.push_back(suff);

        ConditionVerdict nec{ConditionId::Thm2Necessary};
        try {
            nec.threshold = necessary_snr_threshold(k, *d, rep.metrics.mar);
            nec.applicable = true;
            nec.actual = root_snr;
            nec.margin = nec.actual - nec.threshold;
            nec.holds = strict_holds(nec.margin);
        } catch (const hypothesis_error&) {
        }
        rep.verdicts.push_back(nec);

        rep.gap_region = nec.applicable && suff.applicable && nec.holds && !suff.holds;
    } else {
        rep.verdicts.push_back(ConditionVerdict{ConditionId::RipShapeThm1});
        rep.verdicts.push_back(ConditionVerdict{ConditionId::Thm1Sufficient});
        rep.verdicts.push_back(ConditionVerdict{ConditionId::Thm2Necessary});
    }

    {
        ConditionVerdict cv{ConditionId::Thm3SnrFloor};
        if (auto d = delta_at(2 * k); d && *d < 1.0) {
            cv.applicable = true;
            cv.actual = snr;
            cv.threshold = theorem3_snr_floor(rep.metrics.kappa, *d);
            if (std::isinf(cv.actual)) {
                // Noise-free: meets any floor, including an infinite one.
                cv.margin = std::numeric_limits<double>::infinity();
                cv.holds = true;
            } else {
                cv.margin = cv.actual - cv.threshold;
                cv.holds = cv.margin >= -condition_margin_tolerance;
            }
        }
        rep.verdicts.push_back(cv);
    }

    return rep;
}

} // namespace pursuit
