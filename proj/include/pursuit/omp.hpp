#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pursuit/io.hpp"
#include "pursuit/linalg.hpp"

namespace pursuit {

// Absolute tolerance under which two correlation magnitudes count as tied.
inline constexpr double tie_tolerance = 1e-12;

// When to stop the pursuit loop. Epsilons are absolute; for a threshold
// relative to the observation, pass eps * ||y||_2 (or ||phi' y||_inf).
struct StoppingRule {
    enum class Kind { FixedIterations, ResidualNorm, CorrelationNorm };

    Kind kind;
    int iterations = 0; // FixedIterations only
    double eps = 0.0;   // norm rules only

    static StoppingRule fixed_iterations(int k) {
        if (k < 1)
            throw input_domain_error("StoppingRule: iteration count must be positive");
        return {Kind::FixedIterations, k, 0.0};
    }
    static StoppingRule residual_norm(double eps) {
        if (!(eps >= 0.0) || !std::isfinite(eps))
            throw input_domain_error("StoppingRule: eps must be a nonnegative real");
        return {Kind::ResidualNorm, 0, eps};
    }
    static StoppingRule correlation_norm(double eps) {
        if (!(eps >= 0.0) || !std::isfinite(eps))
            throw input_domain_error("StoppingRule: eps must be a nonnegative real");
        return {Kind::CorrelationNorm, 0, eps};
    }
};

struct IdentifyResult {
    int index = 0;            // 1-based winner
    double correlation = 0.0; // |<phi_index, r>|
    bool tie_detected = false;
};

// Index outside `excluded` whose column has the largest absolute inner
// product with r. Candidates within tie_tolerance of the maximum count as
// tied; the lowest such index wins and the tie is flagged.
inline IdentifyResult identify_index(const Matrix& phi, const Vector& r,
                                     const IndexSet& excluded) {
    const int n = static_cast<int>(phi.cols());
    if (r.size() != phi.rows())
        throw input_domain_error("identify_index: residual length mismatch");
    if (excluded.max_index() > n)
        throw input_domain_error("identify_index: excluded index exceeds column count");
    if (excluded.size() >= n)
        throw input_domain_error("identify_index: every column is excluded");

    Vector corr = (phi.transpose() * r).cwiseAbs();
    double best = -1.0;
    for (int i = 1; i <= n; ++i)
        if (!excluded.contains(i))
            best = std::max(best, corr(i - 1));

    IdentifyResult res;
    int within = 0;
    for (int i = 1; i <= n; ++i) {
        if (excluded.contains(i)) continue;
        if (corr(i - 1) >= best - tie_tolerance) {
            ++within;
            if (within == 1) {
                res.index = i;
                res.correlation = corr(i - 1);
            }
        }
    }
    res.tie_detected = within >= 2;
    return res;
}

struct IterationRecord {
    int k = 0;                  // iteration number, starting at 1
    int selected_index = 0;     // t^k
    bool tie_detected = false;
    double max_correlation = 0; // winning |<phi_t, r^{k-1}>|
    IndexSet support;           // T^k
    Vector coefficients;        // least-squares solution on T^k, support order
    Vector residual;            // r^k
};

enum class StopReason { FixedIterations, ResidualNorm, CorrelationNorm, IterationCap, Degenerate };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::FixedIterations: return "fixed_iterations";
        case StopReason::ResidualNorm:    return "residual_norm";
        case StopReason::CorrelationNorm: return "correlation_norm";
        case StopReason::IterationCap:    return "iteration_cap";
        case StopReason::Degenerate:      return "degenerate";
    }
    return "?";
}

struct RecoveryTrace {
    int m = 0, n = 0;
    std::vector<IterationRecord> iterations;
    IndexSet final_support;
    Vector final_estimate; // length n, zero off final_support
    Vector final_residual;
    StopReason stop_reason = StopReason::FixedIterations;
};

// Thrown when the pursuit hits a rank-deficient subsystem mid-run; carries
// whatever iterations completed before the failure.
struct omp_degenerate_error : degenerate_system_error {
    omp_degenerate_error(const std::string& what, std::shared_ptr<const RecoveryTrace> partial)
        : degenerate_system_error(what), partial_trace(std::move(partial)) {}
    std::shared_ptr<const RecoveryTrace> partial_trace;
};

// Orthogonal matching pursuit, no column normalization: greedily pick the
// column most correlated with the residual, re-fit least squares on the
// enlarged support, repeat until the stopping rule fires. Norm-based rules
// are additionally capped at min(m, n) iterations to guarantee termination.
inline RecoveryTrace omp_run(const Matrix& phi, const Vector& y, const StoppingRule& rule) {
    const int m = static_cast<int>(phi.rows());
    const int n = static_cast<int>(phi.cols());
    require_finite(phi, "omp_run: phi");
    require_finite(y, "omp_run: y");
    if (y.size() != m)
        throw input_domain_error("omp_run: y has length " + std::to_string(y.size()) +
                                 ", expected " + std::to_string(m));
    if (rule.kind == StoppingRule::Kind::FixedIterations && rule.iterations > std::min(m, n))
        throw input_domain_error("omp_run: " + std::to_string(rule.iterations) +
                                 " iterations exceed min(m, n) = " +
                                 std::to_string(std::min(m, n)));

    RecoveryTrace trace;
    trace.m = m;
    trace.n = n;
    Vector r = y;
    IndexSet support;

    auto finish = [&](StopReason reason) {
        trace.stop_reason = reason;
        trace.final_support = support;
        trace.final_residual = r;
        trace.final_estimate = Vector::Zero(n);
        if (!trace.iterations.empty()) {
            const IterationRecord& last = trace.iterations.back();
            for (int j = 0; j < last.support.size(); ++j)
                trace.final_estimate(last.support[j] - 1) = last.coefficients(j);
        }
        return trace;
    };

    for (int k = 1;; ++k) {
        switch (rule.kind) {
            case StoppingRule::Kind::FixedIterations:
                if (k > rule.iterations) return finish(StopReason::FixedIterations);
                break;
            case StoppingRule::Kind::ResidualNorm:
                if (r.norm() <= rule.eps) return finish(StopReason::ResidualNorm);
                if (k > std::min(m, n)) return finish(StopReason::IterationCap);
                break;
            case StoppingRule::Kind::CorrelationNorm:
                if ((phi.transpose() * r).cwiseAbs().maxCoeff() <= rule.eps)
                    return finish(StopReason::CorrelationNorm);
                if (k > std::min(m, n)) return finish(StopReason::IterationCap);
                break;
        }

        IdentifyResult pick = identify_index(phi, r, support);
        support.insert(pick.index);
        Vector coeff;
        try {
            coeff = least_squares_on_support(phi, y, support);
        } catch (const degenerate_system_error& e) {
            // Report the state as of the last completed iteration; the failed
            // pick is rolled back so the partial trace stays self-consistent.
            auto partial = std::make_shared<RecoveryTrace>(trace);
            partial->stop_reason = StopReason::Degenerate;
            partial->final_estimate = Vector::Zero(n);
            if (trace.iterations.empty()) {
                partial->final_support = IndexSet{};
                partial->final_residual = y;
            } else {
                const IterationRecord& last = trace.iterations.back();
                partial->final_support = last.support;
                partial->final_residual = last.residual;
                for (int j = 0; j < last.support.size(); ++j)
                    partial->final_estimate(last.support[j] - 1) = last.coefficients(j);
            }
            throw omp_degenerate_error(std::string("omp_run: iteration ") + std::to_string(k) +
                                           ": " + e.what(),
                                       std::move(partial));
        }
        r = y - submatrix(phi, support) * coeff;

        IterationRecord rec;
        rec.k = k;
        rec.selected_index = pick.index;
        rec.tie_detected = pick.tie_detected;
        rec.max_correlation = pick.correlation;
        rec.support = support;
        rec.coefficients = coeff;
        rec.residual = r;
        trace.iterations.push_back(std::move(rec));
    }
}

// Line-oriented rendering: one header line, then per iteration
// "k selected_index max_correlation residual_norm tie".
inline std::string serialize_trace(const RecoveryTrace& trace) {
    std::ostringstream os;
    os << "k index corr rnorm tie\n";
    for (const auto& it : trace.iterations)
        os << it.k << ' ' << it.selected_index << ' ' << format_double(it.max_correlation)
           << ' ' << format_double(it.residual.norm()) << ' ' << (it.tie_detected ? 1 : 0)
           << '\n';
    os << "stop " << to_string(trace.stop_reason) << " support " << trace.final_support.to_string()
       << " rnorm " << format_double(trace.final_residual.norm()) << '\n';
    return os.str();
}

} // namespace pursuit
