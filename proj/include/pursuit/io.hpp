#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pursuit/linalg.hpp"

namespace pursuit {

// 17 significant digits: enough for exact double round-trips, and a fixed
// format so repeated runs emit byte-identical files.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shorter rendering for human-facing CLI lines.
inline std::string format_double_brief(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline double parse_finite_token(std::istream& in, const char* what) {
    std::string tok;
    if (!(in >> tok))
        throw io_error(std::string(what) + ": fewer entries than the header declares");
    // std::stod rejects denormals as out of range; strtod just returns them.
    // Overflow comes back as an infinity and fails the finiteness check.
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || end != begin + tok.size())
        throw io_error(std::string(what) + ": bad numeric token '" + tok + "'");
    if (!std::isfinite(v))
        throw io_error(std::string(what) + ": nonfinite entry '" + tok + "'");
    return v;
}

inline void reject_trailing(std::istream& in, const char* what) {
    std::string tok;
    if (in >> tok)
        throw io_error(std::string(what) + ": trailing content '" + tok + "' after declared entries");
}

} // namespace detail

// Matrix text format: first line "m n", then the m*n entries in row-major
// order (layout of whitespace and line breaks is free). NaN/Inf are rejected.
inline Matrix read_matrix(std::istream& in, const char* what = "matrix") {
    long long m = 0, n = 0;
    if (!(in >> m >> n))
        throw io_error(std::string(what) + ": expected header line 'm n'");
    if (m < 1 || n < 1)
        throw io_error(std::string(what) + ": dimensions must be positive, got " +
                       std::to_string(m) + " x " + std::to_string(n));
    Matrix a(m, n);
    for (long long i = 0; i < m; ++i)
        for (long long j = 0; j < n; ++j)
            a(i, j) = detail::parse_finite_token(in, what);
    detail::reject_trailing(in, what);
    return a;
}

// Vector text format: first line "n", then n entries.
inline Vector read_vector(std::istream& in, const char* what = "vector") {
    long long n = 0;
    if (!(in >> n))
        throw io_error(std::string(what) + ": expected header line 'n'");
    if (n < 1)
        throw io_error(std::string(what) + ": length must be positive, got " + std::to_string(n));
    Vector v(n);
    for (long long i = 0; i < n; ++i)
        v(i) = detail::parse_finite_token(in, what);
    detail::reject_trailing(in, what);
    return v;
}

inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open matrix file '" + path + "'");
    return read_matrix(in, path.c_str());
}

inline Vector read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open vector file '" + path + "'");
    return read_vector(in, path.c_str());
}

inline void write_matrix(std::ostream& out, const Matrix& a) {
    require_finite(a, "write_matrix");
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(a(i, j));
        }
        out << '\n';
    }
}

inline void write_vector(std::ostream& out, const Vector& v) {
    require_finite(v, "write_vector");
    out << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << format_double(v(i)) << '\n';
}

inline void write_matrix_file(const std::string& path, const Matrix& a) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    write_matrix(out, a);
    if (!out)
        throw io_error("write failed on '" + path + "'");
}

inline void write_vector_file(const std::string& path, const Vector& v) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot open '" + path + "' for writing");
    write_vector(out, v);
    if (!out)
        throw io_error("write failed on '" + path + "'");
}

} // namespace pursuit
