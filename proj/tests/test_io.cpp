#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "pursuit/io.hpp"
#include "pursuit/synth.hpp"

using namespace pursuit;

TEST_CASE("doubles format at full and brief precision") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double_brief(0.6) == "0.6");
    CHECK(format_double_brief(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("matrix round-trips bit-exactly through text") {
    Matrix a(3, 4);
    a << 0.1, -1e-300, 3.0, 7.25e100,
         -0.6, 1.0 / 3.0, 0.0, -0.0,
         5e-324, 1e308, -42.125, 2.2250738585072014e-308;
    std::stringstream ss;
    write_matrix(ss, a);
    Matrix b = read_matrix(ss);
    REQUIRE(b.rows() == 3);
    REQUIRE(b.cols() == 4);
    CHECK(((a.array() == b.array()).all()));

    Vector v(5);
    v << -0.1, 1e-17, 12345.6789, -9.9e-99, 3.0;
    std::stringstream vs;
    write_vector(vs, v);
    Vector w = read_vector(vs);
    CHECK(((v.array() == w.array()).all()));
}

TEST_CASE("whitespace layout is free but content is strict") {
    std::stringstream ok("2 2\n1 2\n3   \n\n 4");
    Matrix a = read_matrix(ok);
    CHECK(a(1, 1) == 4.0);

    auto rejects = [](const std::string& text) {
        std::stringstream ss(text);
        CHECK_THROWS_AS(read_matrix(ss), io_error);
    };
    rejects("");                        // no header
    rejects("2\n1 2");                  // truncated header
    rejects("0 2\n");                   // zero dimension
    rejects("2 -1\n");                  // negative dimension
    rejects("2 2\n1 2 3");              // fewer entries than declared
    rejects("2 2\n1 2 3 4 5");          // trailing content
    rejects("2 2\n1 2 3 nan");          // nonfinite entry
    rejects("2 2\n1 2 inf 4");          // nonfinite entry
    rejects("2 2\n1 2 3 4x");           // trailing junk inside a token
    rejects("2 2\n1 2 three 4");        // not a number

    auto rejects_vec = [](const std::string& text) {
        std::stringstream ss(text);
        CHECK_THROWS_AS(read_vector(ss), io_error);
    };
    rejects_vec("");
    rejects_vec("0\n");
    rejects_vec("3\n1 2");
    rejects_vec("2\n1 2 3");
    rejects_vec("2\n1 -inf");
    rejects_vec("2\n1,5 2");
}

TEST_CASE("file helpers write, read back, and report bad paths") {
    const std::string dir = "io_test_tmp";
    std::remove((dir + "_mat.txt").c_str());
    Matrix a = gaussian_matrix(4, 3, 99);
    write_matrix_file(dir + "_mat.txt", a);
    Matrix b = read_matrix_file(dir + "_mat.txt");
    CHECK(((a.array() == b.array()).all()));

    Vector v = noise_at_snr(Vector::Ones(4), 2.0, NoiseMode::isotropic_gaussian(), 5);
    write_vector_file(dir + "_vec.txt", v);
    Vector w = read_vector_file(dir + "_vec.txt");
    CHECK(((v.array() == w.array()).all()));

    CHECK_THROWS_AS(read_matrix_file("definitely/not/here.txt"), io_error);
    CHECK_THROWS_AS(read_vector_file("definitely/not/here.txt"), io_error);
    CHECK_THROWS_AS(write_matrix_file("no_such_dir/x.txt", a), io_error);
    CHECK_THROWS_AS(write_vector_file("no_such_dir/x.txt", v), io_error);

    std::remove((dir + "_mat.txt").c_str());
    std::remove((dir + "_vec.txt").c_str());
}

TEST_CASE("writers refuse nonfinite payloads") {
    Matrix a = Matrix::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    std::stringstream ss;
    CHECK_THROWS_AS(write_matrix(ss, a), input_domain_error);

    Vector v = Vector::Zero(3);
    v(2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(write_vector(ss, v), input_domain_error);
}
