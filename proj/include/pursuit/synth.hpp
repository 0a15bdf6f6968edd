#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pursuit/linalg.hpp"
#include "pursuit/metrics.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

// m x n matrix with i.i.d. N(0, 1/m) entries, drawn in row-major order from
// the counter stream of `seed`, so the same (m, n, seed) triple reproduces
// the same matrix everywhere.
inline Matrix gaussian_matrix(int m, int n, std::uint64_t seed) {
    if (m < 1 || n < 1)
        throw input_domain_error("gaussian_matrix: dimensions must be positive");
    CounterRng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    Matrix phi(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            phi(i, j) = scale * rng.next_gaussian();
    return phi;
}

// How the nonzero magnitudes of a synthetic signal are drawn.
struct SignalProfile {
    enum class Kind { EqualMagnitude, UniformMagnitude, GaussianMagnitude };

    Kind kind = Kind::EqualMagnitude;
    double a = 1.0; // Equal: the value; Uniform: lo; Gaussian: sigma
    double b = 1.0; // Uniform: hi

    static SignalProfile equal(double value = 1.0) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw input_domain_error("SignalProfile::equal: value must be positive");
        return {Kind::EqualMagnitude, value, value};
    }
    static SignalProfile uniform(double lo, double hi) {
        if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
            throw input_domain_error("SignalProfile::uniform: need 0 < lo <= hi");
        return {Kind::UniformMagnitude, lo, hi};
    }
    static SignalProfile gaussian(double sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw input_domain_error("SignalProfile::gaussian: sigma must be positive");
        return {Kind::GaussianMagnitude, sigma, sigma};
    }
};

enum class SignMode { AllPositive, RandomSigns };

// K-sparse signal in R^n with uniformly random support. Draw order under one
// counter stream: k support draws (partial Fisher-Yates over 1..n), then one
// magnitude per support index in ascending index order, then one sign per
// index when signs are random (top bit of the draw; set bit means negative).
inline SparseSignal sparse_signal(int n, int k, const SignalProfile& profile, SignMode signs,
                                  std::uint64_t seed) {
    if (n < 1 || k < 1 || k > n)
        throw input_domain_error("sparse_signal: need 1 <= k <= n");
    CounterRng rng(seed);

    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 1);
    for (int i = 0; i < k; ++i) {
        std::uint64_t j = static_cast<std::uint64_t>(i) +
                          rng.next_below(static_cast<std::uint64_t>(n - i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    IndexSet support(std::vector<int>(pool.begin(), pool.begin() + k));

    std::vector<double> values(static_cast<std::size_t>(k));
    for (auto& v : values) {
        switch (profile.kind) {
            case SignalProfile::Kind::EqualMagnitude:
                v = profile.a;
                break;
            case SignalProfile::Kind::UniformMagnitude:
                v = profile.a + (profile.b - profile.a) * rng.next_uniform();
                break;
            case SignalProfile::Kind::GaussianMagnitude:
                v = profile.a * std::abs(rng.next_gaussian());
                break;
        }
    }
    if (signs == SignMode::RandomSigns)
        for (auto& v : values)
            if (rng.next_u64() >> 63) v = -v;

    return SparseSignal(n, support, std::move(values));
}

// Direction of the additive noise vector.
struct NoiseMode {
    enum class Kind { IsotropicGaussianDirection, FixedBasisVector, AdversarialOffSupport };

    Kind kind = Kind::IsotropicGaussianDirection;
    int basis_index = 0; // FixedBasisVector only, 1-based

    static NoiseMode isotropic_gaussian() { return {Kind::IsotropicGaussianDirection, 0}; }
    static NoiseMode fixed_basis(int index) {
        if (index < 1)
            throw input_domain_error("NoiseMode::fixed_basis: index is 1-based");
        return {Kind::FixedBasisVector, index};
    }
    static NoiseMode adversarial_off_support() { return {Kind::AdversarialOffSupport, 0}; }
};

namespace detail {

inline Vector scale_to_snr(const Vector& direction, double measured_energy, double target_snr,
                           const char* what) {
    double dn = direction.norm();
    if (dn == 0.0)
        throw input_domain_error(std::string(what) + ": degenerate noise direction");
    // ||phi x||^2 / ||v||^2 == target up to one rounding in the scale factor.
    return direction * (std::sqrt(measured_energy / target_snr) / dn);
}

} // namespace detail

// Noise vector hitting the target SNR exactly (to rounding): the returned v
// satisfies ||phi_x||^2 / ||v||^2 = target_snr within about 1e-12 relative.
// This overload covers the modes that need no matrix context.
inline Vector noise_at_snr(const Vector& phi_x, double target_snr, const NoiseMode& mode,
                           std::uint64_t seed) {
    if (!(target_snr > 0.0) || !std::isfinite(target_snr))
        throw input_domain_error("noise_at_snr: target SNR must be positive and finite");
    const double energy = phi_x.squaredNorm();
    if (energy == 0.0)
        throw input_domain_error("noise_at_snr: zero measurement vector");
    const int m = static_cast<int>(phi_x.size());

    switch (mode.kind) {
        case NoiseMode::Kind::IsotropicGaussianDirection: {
            CounterRng rng(seed);
            Vector d(m);
            do {
                for (int i = 0; i < m; ++i) d(i) = rng.next_gaussian();
            } while (d.norm() == 0.0);
            return detail::scale_to_snr(d, energy, target_snr, "noise_at_snr");
        }
        case NoiseMode::Kind::FixedBasisVector: {
            if (mode.basis_index > m)
                throw input_domain_error("noise_at_snr: basis index " +
                                         std::to_string(mode.basis_index) + " exceeds m = " +
                                         std::to_string(m));
            Vector d = Vector::Zero(m);
            d(mode.basis_index - 1) = 1.0;
            return detail::scale_to_snr(d, energy, target_snr, "noise_at_snr");
        }
        case NoiseMode::Kind::AdversarialOffSupport:
            throw input_domain_error(
                "noise_at_snr: the adversarial mode needs the (phi, signal) overload");
    }
    throw input_domain_error("noise_at_snr: unknown mode");
}

// General form. The adversarial mode takes the lowest-index non-support
// column whose projection off span(phi_T) is nonnegligible and uses that
// projection as the direction: energy concentrated where a wrong pick hurts.
inline Vector noise_at_snr(const Matrix& phi, const SparseSignal& x, double target_snr,
                           const NoiseMode& mode, std::uint64_t seed) {
    if (x.length() != phi.cols())
        throw input_domain_error("noise_at_snr: signal length does not match column count");
    Vector phi_x = phi * x.to_dense();
    if (mode.kind != NoiseMode::Kind::AdversarialOffSupport)
        return noise_at_snr(phi_x, target_snr, mode, seed);

    if (!(target_snr > 0.0) || !std::isfinite(target_snr))
        throw input_domain_error("noise_at_snr: target SNR must be positive and finite");
    const double energy = phi_x.squaredNorm();
    if (energy == 0.0)
        throw input_domain_error("noise_at_snr: zero measurement vector");
    for (int j = 1; j <= phi.cols(); ++j) {
        if (x.support().contains(j)) continue;
        Vector col = phi.col(j - 1);
        Vector p = project_orthogonal_complement(phi, x.support(), col);
        if (p.norm() > 1e-12 * col.norm())
            return detail::scale_to_snr(p, energy, target_snr, "noise_at_snr");
    }
    throw input_domain_error(
        "noise_at_snr: no non-support column survives projection off the support span");
}

// The identity counterexample family: phi = I_m, x = K ones on {1..K},
// v = (1+eps) e_m. At eps = 0 the first pick ties between a support index
// and m; any eps > 0 makes index m win outright and forces one false alarm.
struct AppendixInstance {
    Matrix phi;
    SparseSignal x;
    Vector v;
    Vector y;
    double eps = 0.0;
};

inline AppendixInstance appendix_a_instance(int k, int m, double eps) {
    if (k < 1)
        throw input_domain_error("appendix_a_instance: k must be positive");
    if (m < k + 1)
        throw input_domain_error("appendix_a_instance: need m >= k + 1 so the noise index "
                                 "falls outside the support");
    if (!(eps >= 0.0) || !std::isfinite(eps))
        throw input_domain_error("appendix_a_instance: eps must be a nonnegative real");

    std::vector<int> support(static_cast<std::size_t>(k));
    std::iota(support.begin(), support.end(), 1);
    SparseSignal x(m, IndexSet(support), std::vector<double>(static_cast<std::size_t>(k), 1.0));

    Vector v = Vector::Zero(m);
    v(m - 1) = 1.0 + eps;

    AppendixInstance inst{Matrix::Identity(m, m), std::move(x), std::move(v), Vector(), eps};
    inst.y = inst.phi * inst.x.to_dense() + inst.v;
    return inst;
}

} // namespace pursuit
