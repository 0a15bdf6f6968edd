#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pursuit/conditions.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/omp.hpp"

namespace pursuit {

// One verified inequality instance. slack = lhs - rhs for >=-shaped checks
// and rhs - lhs for <=-shaped ones, so pass means slack >= -tolerance either way.
struct InequalityCheck {
    std::string check;
    int k = 0; // iteration the residual r^k belongs to
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = true;
};

struct DiagnosticsReport {
    std::vector<InequalityCheck> checks;
    int violations = 0;
    bool all_pass() const { return violations == 0; }

    void add(std::string name, int k, double lhs, double rhs, double slack, double tol) {
        InequalityCheck c{std::move(name), k, lhs, rhs, slack, slack >= -tol};
        if (!c.pass) ++violations;
        checks.push_back(std::move(c));
    }
};

// Re-derives the per-iteration inequalities the run must obey and measures
// their slack on a finished trace:
//   - residual norms never increase;
//   - each iteration's energy drop is at least the squared peak correlation
//     over (1 + delta_1);
//   - the residual stays orthogonal to the selected columns;
//   - while every pick so far is correct, the peak correlation over the
//     missed support indices dominates the floor built from delta_K, and the
//     off-support peak stays under the cap built from delta_{K+1};
//   - when delta_2K is supplied, lies in (0,1), and the instance meets the
//     error-rate SNR floor: the tau = sqrt(delta_2K) correlation and energy
//     floors over the early iterations.
// deltas must carry orders 1, K, and K+1; order 2K is optional.
// rel_tol scales with the dominant term of each inequality. The trace is
// replayed against (phi, x, v) first; disagreement beyond 1e-8 relative is a
// consistency_error, not a diagnostic.
inline DiagnosticsReport verify_iteration_inequalities(const Matrix& phi, const SparseSignal& x,
                                                       const Vector& v, const RecoveryTrace& trace,
                                                       const std::map<int, double>& deltas,
                                                       double rel_tol = 1e-9) {
    const int m = static_cast<int>(phi.rows());
    const int n = static_cast<int>(phi.cols());
    const int big_k = x.sparsity();
    if (x.length() != n)
        throw input_domain_error("verify_iteration_inequalities: signal length mismatch");
    if (v.size() != m)
        throw input_domain_error("verify_iteration_inequalities: noise length mismatch");
    if (trace.m != m || trace.n != n)
        throw consistency_error("verify_iteration_inequalities: trace dimensions " +
                                std::to_string(trace.m) + "x" + std::to_string(trace.n) +
                                " do not match the instance");
    auto need = [&](int order) {
        auto it = deltas.find(order);
        if (it == deltas.end())
            throw input_domain_error("verify_iteration_inequalities: missing delta of order " +
                                     std::to_string(order));
        return it->second;
    };
    const double delta_1 = need(1);
    const double delta_k = need(big_k);
    const double delta_k1 = need(big_k + 1);

    const Vector y = phi * x.to_dense() + v;
    const int rounds = static_cast<int>(trace.iterations.size());

    // Replay: every stored residual must match a fresh least-squares solve on
    // its own support, and the supports must grow one correct step at a time.
    IndexSet prev;
    for (int i = 0; i < rounds; ++i) {
        const IterationRecord& it = trace.iterations[static_cast<std::size_t>(i)];
        if (it.k != i + 1)
            throw consistency_error("verify_iteration_inequalities: iteration numbers not contiguous");
        IndexSet expected = prev;
        expected.insert(it.selected_index);
        if (!(it.support == expected))
            throw consistency_error("verify_iteration_inequalities: support at iteration " +
                                    std::to_string(it.k) + " is not the previous support plus the pick");
        Vector coeff = least_squares_on_support(phi, y, it.support);
        Vector recomputed = y - submatrix(phi, it.support) * coeff;
        if ((recomputed - it.residual).norm() > 1e-8 * std::max(1.0, y.norm()))
            throw consistency_error("verify_iteration_inequalities: stored residual at iteration " +
                                    std::to_string(it.k) + " does not replay against the instance");
        prev = it.support;
    }

    DiagnosticsReport rep;
    const double energy_tol = rel_tol * y.squaredNorm();
    const double norm_tol = rel_tol * y.norm();

    auto residual_at = [&](int k) -> const Vector& {
        return k == 0 ? y : trace.iterations[static_cast<std::size_t>(k - 1)].residual;
    };
    auto support_at = [&](int k) -> IndexSet {
        return k == 0 ? IndexSet{} : trace.iterations[static_cast<std::size_t>(k - 1)].support;
    };

    for (int k = 0; k < rounds; ++k) {
        const Vector& r = residual_at(k);
        const Vector& r_next = residual_at(k + 1);
        rep.add("residual_monotone", k + 1, r_next.norm(), r.norm(),
                r.norm() - r_next.norm(), norm_tol);
        double drop = r.squaredNorm() - r_next.squaredNorm();
        double peak = (phi.transpose() * r).cwiseAbs().maxCoeff();
        rep.add("residual_power_floor", k, drop, peak * peak / (1.0 + delta_1),
                drop - peak * peak / (1.0 + delta_1), energy_tol);
    }

    const double corr_scale = (phi.transpose() * y).cwiseAbs().maxCoeff();
    for (int k = 1; k <= rounds; ++k) {
        IndexSet t_k = support_at(k);
        double lhs = (submatrix(phi, t_k).transpose() * residual_at(k)).cwiseAbs().maxCoeff();
        double cap = rel_tol * corr_scale + 1e-12;
        rep.add("selected_orthogonality", k, lhs, cap, cap - lhs, 0.0);
    }

    const IndexSet& truth = x.support();
    const Vector x_dense = x.to_dense();
    const double noise_norm = v.norm();
    const double signal_scale = x_dense.norm() + noise_norm;

    for (int k = 0; k < std::min(rounds + 1, big_k); ++k) {
        IndexSet t_k = support_at(k);
        if (t_k.difference(truth).size() != 0) continue; // a wrong pick ends applicability
        IndexSet missed = truth.difference(t_k);         // size big_k - k >= 1 here
        const Vector& r = residual_at(k);
        Vector corr = (phi.transpose() * r).cwiseAbs();

        Vector x_missed(missed.size());
        for (int j = 0; j < missed.size(); ++j)
            x_missed(j) = x_dense(missed[j] - 1);
        double missed_norm = x_missed.norm();

        double u = 0.0;
        for (int idx : missed) u = std::max(u, corr(idx - 1));
        double floor = ((1.0 - delta_k) * missed_norm - std::sqrt(1.0 + delta_k) * noise_norm) /
                       std::sqrt(static_cast<double>(big_k - k));
        rep.add("missed_correlation_floor", k, u, floor, u - floor, rel_tol * signal_scale);

        IndexSet outside = truth.set_union(t_k).complement(n);
        if (!outside.empty()) {
            double vbar = 0.0;
            for (int idx : outside) vbar = std::max(vbar, corr(idx - 1));
            double cap = delta_k1 * missed_norm + std::sqrt(1.0 + delta_1) * noise_norm;
            rep.add("offsupport_correlation_cap", k, vbar, cap, cap - vbar,
                    rel_tol * signal_scale);
        }
    }

    // tau-scale floors, gated on the error-rate SNR hypothesis.
    auto it2k = deltas.find(2 * big_k);
    if (it2k != deltas.end() && it2k->second > 0.0 && it2k->second < 1.0) {
        const double delta_2k = it2k->second;
        const double tau = std::sqrt(delta_2k);
        const double snr = compute_snr(phi, x, v);
        const double kappa = compute_kappa(x);
        const int tk = static_cast<int>(std::ceil(tau * big_k));
        if (snr >= theorem3_snr_floor(kappa, delta_2k) && tk >= 1) {
            const int k_max = big_k - tk;
            for (int k = 0; k <= std::min(k_max, rounds); ++k) {
                IndexSet missed = truth.difference(support_at(k));
                double x_tau = 0.0;
                if (tk <= missed.size()) {
                    std::vector<double> mags;
                    mags.reserve(static_cast<std::size_t>(missed.size()));
                    for (int idx : missed) mags.push_back(std::abs(x_dense(idx - 1)));
                    std::sort(mags.begin(), mags.end(), std::greater<>());
                    x_tau = mags[static_cast<std::size_t>(tk - 1)];
                }
                double peak = (phi.transpose() * residual_at(k)).cwiseAbs().maxCoeff();
                rep.add("correlation_energy_floor", k, peak * peak,
                        (1.0 - 6.0 * tau) * x_tau * x_tau,
                        peak * peak - (1.0 - 6.0 * tau) * x_tau * x_tau, energy_tol);
                if (k < rounds) {
                    double drop = residual_at(k).squaredNorm() - residual_at(k + 1).squaredNorm();
                    rep.add("residual_power_tau_floor", k, drop,
                            (1.0 - 7.0 * tau) * x_tau * x_tau,
                            drop - (1.0 - 7.0 * tau) * x_tau * x_tau, energy_tol);
                }
            }
        }
    }

    return rep;
}

} // namespace pursuit
