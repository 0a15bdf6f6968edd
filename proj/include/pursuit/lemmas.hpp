#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pursuit/linalg.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

struct LemmaCheckConfig {
    int max_subset_size = 3;       // per-set size for the sampled index sets
    std::uint64_t samples = 1000;  // random (subsets, probes) draws
    std::uint64_t seed = 0;
    double slack = 1e-8;           // absolute, probes are unit-norm
    std::uint64_t subset_cap = default_subset_cap;
};

struct LemmaResult {
    std::string name;
    std::uint64_t checks = 0;     // inequality instances actually evaluated
    std::uint64_t skipped = 0;    // hypothesis unavailable (delta missing or >= 1)
    std::uint64_t violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity();

    void record(double slack_value, double tolerance) {
        ++checks;
        worst_slack = std::min(worst_slack, slack_value);
        if (slack_value < -tolerance) ++violations;
    }
};

// Spectral side conditions the recovery analysis leans on, each checked on
// randomly drawn disjoint index sets and unit probes:
//   monotone_orders            delta_k nondecreasing in k (exact table)
//   gram_bounds                (1-d)||u|| <= ||G_S u|| <= (1+d)||u||
//   gram_inverse_bounds        ||G_S^{-1} u|| within [1/(1+d), 1/(1-d)]
//   cross_correlation          ||Phi_S1' Phi_S2 v|| <= d_{|S1|+|S2|} ||v||
//   projected_cross_correlation  same with Phi_S2 v first projected off span(Phi_S3)
//   adjoint_probe_cap          ||Phi_S' u|| <= sqrt(1+d_{|S|}) ||u||, u in R^m
//   projected_eigen_sandwich   eigenvalues of Phi_S1' Pperp_S2 Phi_S1 inside
//                              the spectrum of the union Gram
struct LemmaCheckReport {
    std::map<int, double> deltas; // exact constants, orders 1..max computed
    std::vector<LemmaResult> results;

    LemmaResult& result(const std::string& name) {
        for (auto& r : results)
            if (r.name == name) return r;
        results.push_back(LemmaResult{name});
        return results.back();
    }
    std::uint64_t total_violations() const {
        std::uint64_t v = 0;
        for (const auto& r : results) v += r.violations;
        return v;
    }
    bool all_pass() const { return total_violations() == 0; }
};

inline LemmaCheckReport lemma_property_checks(const Matrix& phi, const LemmaCheckConfig& cfg) {
    const int n = static_cast<int>(phi.cols());
    const int m = static_cast<int>(phi.rows());
    if (cfg.max_subset_size < 1)
        throw input_domain_error("lemma_property_checks: subset size must be positive");
    if (3 * cfg.max_subset_size > n)
        throw input_domain_error("lemma_property_checks: three disjoint subsets of size " +
                                 std::to_string(cfg.max_subset_size) + " do not fit in " +
                                 std::to_string(n) + " columns");
    if (!(cfg.slack >= 0.0))
        throw input_domain_error("lemma_property_checks: slack must be nonnegative");

    LemmaCheckReport rep;
    // Fixed registration order keeps the report layout stable and the
    // references below valid (no reallocation once all names exist).
    for (const char* name :
         {"monotone_orders", "gram_bounds", "gram_inverse_bounds", "cross_correlation",
          "projected_cross_correlation", "adjoint_probe_cap", "projected_eigen_sandwich"})
        rep.result(name);

    for (int order = 1; order <= std::min(n, 3 * cfg.max_subset_size); ++order) {
        if (binomial_saturating(n, order) > cfg.subset_cap) break;
        rep.deltas[order] = exact_rip_constant(phi, order, cfg.subset_cap).delta;
    }

    if (rep.deltas.size() >= 2) { // exact-table monotonicity
        LemmaResult& mono = rep.result("monotone_orders");
        for (auto it = rep.deltas.begin(); std::next(it) != rep.deltas.end(); ++it) {
            auto nx = std::next(it);
            if (nx->first != it->first + 1) break;
            mono.record(nx->second - it->second, cfg.slack);
        }
    }

    const Matrix gram = phi.transpose() * phi;
    auto delta_below_one = [&](int order) -> const double* {
        auto it = rep.deltas.find(order);
        return (it != rep.deltas.end() && it->second < 1.0) ? &it->second : nullptr;
    };

    CounterRng rng(cfg.seed);
    std::vector<int> pool(static_cast<std::size_t>(n));
    auto draw_unit = [&](int dim) {
        Vector u(dim);
        do {
            for (int i = 0; i < dim; ++i) u(i) = rng.next_gaussian();
        } while (u.norm() == 0.0);
        return Vector(u / u.norm());
    };

    for (std::uint64_t sample = 0; sample < cfg.samples; ++sample) {
        const int s1 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.max_subset_size)));
        const int s2 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.max_subset_size)));
        const int s3 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.max_subset_size)));

        std::iota(pool.begin(), pool.end(), 1);
        for (int i = 0; i < s1 + s2 + s3; ++i) {
            std::uint64_t j = static_cast<std::uint64_t>(i) +
                              rng.next_below(static_cast<std::uint64_t>(n - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        IndexSet set1(std::vector<int>(pool.begin(), pool.begin() + s1));
        IndexSet set2(std::vector<int>(pool.begin() + s1, pool.begin() + s1 + s2));
        IndexSet set3(std::vector<int>(pool.begin() + s1 + s2, pool.begin() + s1 + s2 + s3));

        Vector u1 = draw_unit(s1);
        Vector v2 = draw_unit(s2);
        Vector um = draw_unit(m);

        Matrix phi_1 = submatrix(phi, set1);
        Matrix phi_2 = submatrix(phi, set2);

        if (const double* d = delta_below_one(s1)) {
            Matrix g1 = phi_1.transpose() * phi_1;
            double forward = (g1 * u1).norm();
            LemmaResult& gb = rep.result("gram_bounds");
            gb.record(forward - (1.0 - *d), cfg.slack);
            gb.record((1.0 + *d) - forward, cfg.slack);

            double inverse = g1.ldlt().solve(u1).norm();
            LemmaResult& gi = rep.result("gram_inverse_bounds");
            gi.record(inverse - 1.0 / (1.0 + *d), cfg.slack);
            gi.record(1.0 / (1.0 - *d) - inverse, cfg.slack);

            rep.result("adjoint_probe_cap")
                .record(std::sqrt(1.0 + *d) - (phi_1.transpose() * um).norm(), cfg.slack);
        } else {
            rep.result("gram_bounds").skipped += 2;
            rep.result("gram_inverse_bounds").skipped += 2;
            rep.result("adjoint_probe_cap").skipped += 1;
        }

        Vector cross_arg = phi_2 * v2;
        if (const double* d = delta_below_one(s1 + s2)) {
            rep.result("cross_correlation")
                .record(*d - (phi_1.transpose() * cross_arg).norm(), cfg.slack);
        } else {
            rep.result("cross_correlation").skipped += 1;
        }
        if (const double* d = delta_below_one(s1 + s2 + s3)) {
            Vector projected = project_orthogonal_complement(phi, set3, cross_arg);
            rep.result("projected_cross_correlation")
                .record(*d - (phi_1.transpose() * projected).norm(), cfg.slack);
        } else {
            rep.result("projected_cross_correlation").skipped += 1;
        }

        { // spectrum sandwich needs no RIP hypothesis
            Matrix projected_cols(m, s1);
            for (int j = 0; j < s1; ++j)
                projected_cols.col(j) =
                    project_orthogonal_complement(phi, set2, Vector(phi_1.col(j)));
            Matrix a = projected_cols.transpose() * projected_cols;
            a = ((a + a.transpose()) * 0.5).eval();
            Matrix b = submatrix(phi, set1.set_union(set2));
            Matrix bg = b.transpose() * b;
            bg = ((bg + bg.transpose()) * 0.5).eval();
            auto [a_lo, a_hi] = symmetric_eigen_extremes(a);
            auto [b_lo, b_hi] = symmetric_eigen_extremes(bg);
            LemmaResult& sandwich = rep.result("projected_eigen_sandwich");
            sandwich.record(a_lo - b_lo, cfg.slack);
            sandwich.record(b_hi - a_hi, cfg.slack);
        }
    }

    return rep;
}

} // namespace pursuit
