#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "pursuit/linalg.hpp"
#include "pursuit/rng.hpp"

using namespace pursuit;

TEST_CASE("index set orders, deduplicates, and validates") {
    IndexSet s({5, 2, 9});
    REQUIRE(s.size() == 3);
    REQUIRE(s[0] == 2);
    REQUIRE(s[2] == 9);
    REQUIRE(s.contains(5));
    REQUIRE_FALSE(s.contains(3));
    REQUIRE(s.max_index() == 9);
    REQUIRE(s.to_string() == "2 5 9");
    REQUIRE(IndexSet{}.to_string() == "-");

    REQUIRE_THROWS_AS(IndexSet({1, 1}), input_domain_error);
    REQUIRE_THROWS_AS(IndexSet({0}), input_domain_error);
    REQUIRE_THROWS_AS(IndexSet({-2}), input_domain_error);
}

TEST_CASE("index set algebra") {
    IndexSet a({1, 3, 5}), b({3, 4});
    REQUIRE(a.set_union(b) == IndexSet({1, 3, 4, 5}));
    REQUIRE(a.difference(b) == IndexSet({1, 5}));
    REQUIRE(a.intersect(b) == IndexSet({3}));
    REQUIRE(a.complement(6) == IndexSet({2, 4, 6}));
    REQUIRE(IndexSet{}.complement(3) == IndexSet({1, 2, 3}));

    IndexSet c;
    c.insert(4);
    c.insert(2);
    REQUIRE(c == IndexSet({2, 4}));
    REQUIRE_THROWS_AS(c.insert(4), input_domain_error);
}

TEST_CASE("least squares recovers planted coefficients") {
    CounterRng rng(11);
    Matrix phi(20, 8);
    for (int i = 0; i < phi.rows(); ++i)
        for (int j = 0; j < phi.cols(); ++j)
            phi(i, j) = rng.next_gaussian();
    IndexSet s({2, 5, 7});
    Vector c_true(3);
    c_true << 1.5, -2.0, 0.25;
    Vector y = submatrix(phi, s) * c_true;

    Vector c = least_squares_on_support(phi, y, s);
    REQUIRE(c.size() == 3);
    REQUIRE((c - c_true).norm() < 1e-10);
}

TEST_CASE("least squares residual is orthogonal to the selected columns") {
    CounterRng rng(12);
    Matrix phi(10, 6);
    Vector y(10);
    for (int i = 0; i < 10; ++i) {
        y(i) = rng.next_gaussian();
        for (int j = 0; j < 6; ++j) phi(i, j) = rng.next_gaussian();
    }
    IndexSet s({1, 4, 6});
    Vector c = least_squares_on_support(phi, y, s);
    Matrix phi_s = submatrix(phi, s);
    Vector r = y - phi_s * c;

    REQUIRE((phi_s.transpose() * r).cwiseAbs().maxCoeff() < 1e-10);
    // projection + residual split the energy
    double lhs = y.squaredNorm();
    double rhs = (phi_s * c).squaredNorm() + r.squaredNorm();
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("least squares edge cases") {
    Matrix phi = Matrix::Identity(4, 4);
    Vector y = Vector::Ones(4);
    REQUIRE(least_squares_on_support(phi, y, IndexSet{}).size() == 0);
    REQUIRE_THROWS_AS(least_squares_on_support(phi, Vector::Ones(3), IndexSet({1})),
                      input_domain_error);
    REQUIRE_THROWS_AS(least_squares_on_support(phi, y, IndexSet({1, 2, 3, 4, 5})),
                      degenerate_system_error); // more columns than rows
    REQUIRE_THROWS_AS(least_squares_on_support(Matrix::Identity(5, 4), Vector::Ones(5),
                                               IndexSet({5})),
                      input_domain_error); // index beyond columns
    Matrix wide(2, 3);
    wide << 1, 0, 1, 0, 1, 1;
    REQUIRE_THROWS_AS(least_squares_on_support(wide, Vector::Ones(2), IndexSet({1, 2, 3})),
                      degenerate_system_error);

    Matrix dup(3, 2);
    dup.col(0) << 1, 2, 3;
    dup.col(1) = dup.col(0);
    REQUIRE_THROWS_AS(least_squares_on_support(dup, Vector::Ones(3), IndexSet({1, 2})),
                      degenerate_system_error);
}

TEST_CASE("orthogonal complement projection") {
    Matrix phi = Matrix::Identity(5, 5);
    Vector u(5);
    u << 1, 2, 3, 4, 5;
    Vector p = project_orthogonal_complement(phi, IndexSet({1, 3}), u);
    REQUIRE(p(0) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(p(2) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(p(1) == Catch::Approx(2.0));
    REQUIRE(p(4) == Catch::Approx(5.0));

    // empty support: identity map
    REQUIRE((project_orthogonal_complement(phi, IndexSet{}, u) - u).norm() == 0.0);

    // idempotent on a generic matrix
    CounterRng rng(13);
    Matrix g(8, 5);
    Vector w(8);
    for (int i = 0; i < 8; ++i) {
        w(i) = rng.next_gaussian();
        for (int j = 0; j < 5; ++j) g(i, j) = rng.next_gaussian();
    }
    IndexSet s({2, 4});
    Vector once = project_orthogonal_complement(g, s, w);
    Vector twice = project_orthogonal_complement(g, s, once);
    REQUIRE((once - twice).norm() < 1e-10 * w.norm());
}

TEST_CASE("symmetric eigen extremes") {
    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    auto [lo, hi] = symmetric_eigen_extremes(a);
    REQUIRE(lo == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(hi == Catch::Approx(3.0).epsilon(1e-12));

    auto [l1, h1] = symmetric_eigen_extremes(Matrix::Constant(1, 1, 7.0));
    REQUIRE(l1 == 7.0);
    REQUIRE(h1 == 7.0);

    Matrix bad(2, 2);
    bad << 1, 2, 3, 4;
    REQUIRE_THROWS_AS(symmetric_eigen_extremes(bad), input_domain_error);
    REQUIRE_THROWS_AS(symmetric_eigen_extremes(Matrix::Zero(2, 3)), input_domain_error);

    // Rayleigh quotients of random probes stay inside the extremes
    CounterRng rng(14);
    Matrix s = Matrix::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j)
            s(i, j) = s(j, i) = rng.next_gaussian();
    auto [mn, mx] = symmetric_eigen_extremes(s);
    for (int probe = 0; probe < 200; ++probe) {
        Vector u(6);
        for (int i = 0; i < 6; ++i) u(i) = rng.next_gaussian();
        double q = u.dot(s * u) / u.squaredNorm();
        REQUIRE(q >= mn - 1e-10);
        REQUIRE(q <= mx + 1e-10);
    }
}

TEST_CASE("require_finite rejects nan and inf") {
    Matrix a = Matrix::Zero(2, 2);
    a(1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(require_finite(a, "test"), input_domain_error);
    Vector v = Vector::Zero(3);
    v(0) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(require_finite(v, "test"), input_domain_error);
}

TEST_CASE("counter rng is a pure function of seed and counter") {
    CounterRng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        REQUIRE(va == b.next_u64());
        (void)c;
    }
    CounterRng d(43);
    bool differs = false;
    CounterRng e(42);
    for (int i = 0; i < 100; ++i) differs = differs || (d.next_u64() != e.next_u64());
    REQUIRE(differs);
}

TEST_CASE("uniform draws live in [0,1) and fill the range") {
    CounterRng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = rng.next_uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    REQUIRE(lo < 0.01);
    REQUIRE(hi > 0.99);
}

TEST_CASE("bounded draws cover every residue") {
    CounterRng rng(8);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        auto v = rng.next_below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 7);
    REQUIRE_THROWS_AS(rng.next_below(0), input_domain_error);
}

TEST_CASE("inverse normal cdf hits reference quantiles") {
    // reference values from standard normal tables at full double precision
    REQUIRE(CounterRng::inverse_normal_cdf(0.5) == 0.0);
    REQUIRE(CounterRng::inverse_normal_cdf(0.975) ==
            Catch::Approx(1.959963984540054).epsilon(1e-14));
    REQUIRE(CounterRng::inverse_normal_cdf(0.025) ==
            Catch::Approx(-1.959963984540054).epsilon(1e-14));
    REQUIRE(CounterRng::inverse_normal_cdf(0.8413447460685429) ==
            Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(CounterRng::inverse_normal_cdf(1e-9) ==
            Catch::Approx(-5.9978070150076865).epsilon(1e-12));
    REQUIRE(std::isfinite(CounterRng::inverse_normal_cdf(0.0)));
    REQUIRE(std::isfinite(CounterRng::inverse_normal_cdf(1.0)));
}

TEST_CASE("gaussian draws have sane moments and no zeros") {
    CounterRng rng(9);
    const int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.next_gaussian();
        REQUIRE(z != 0.0);
        sum += z;
        sumsq += z * z;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    // 4-sigma bands for n = 20000
    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 100; ++s) seeds.insert(derive_seed(123, s));
    REQUIRE(seeds.size() == 100);
    REQUIRE(derive_seed(1, 2) == derive_seed(1, 2));
    REQUIRE(derive_seed(1, 2) != derive_seed(2, 1));
}
