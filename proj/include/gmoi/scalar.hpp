#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <string>

#include "errors.hpp"

namespace gmoi {

using Complex = std::complex<double>;

// Exact complex rational: re + i*im with arbitrary-precision fractions.
struct QComplex {
    mpq_class re{0};
    mpq_class im{0};

    QComplex() = default;
    QComplex(long v) : re(v), im(0) {}
    QComplex(const mpq_class& r) : re(r), im(0) { re.canonicalize(); }
    QComplex(const mpq_class& r, const mpq_class& i) : re(r), im(i) {
        re.canonicalize();
        im.canonicalize();
    }

    QComplex& operator+=(const QComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    QComplex& operator-=(const QComplex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    QComplex& operator*=(const QComplex& o) {
        mpq_class r = re * o.re - im * o.im;
        mpq_class i = re * o.im + im * o.re;
        re = r;
        im = i;
        return *this;
    }
    QComplex& operator/=(const QComplex& o) {
        mpq_class d = o.re * o.re + o.im * o.im;
        if (d == 0) throw ValidationError("exact division by zero");
        mpq_class r = (re * o.re + im * o.im) / d;
        mpq_class i = (im * o.re - re * o.im) / d;
        re = r;
        im = i;
        return *this;
    }
    QComplex operator-() const { return QComplex(-re, -im); }
    friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
    friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
    friend QComplex operator*(QComplex a, const QComplex& b) { return a *= b; }
    friend QComplex operator/(QComplex a, const QComplex& b) { return a /= b; }
    friend bool operator==(const QComplex& a, const QComplex& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const QComplex& a, const QComplex& b) { return !(a == b); }
    friend std::ostream& operator<<(std::ostream& os, const QComplex& z) {
        return os << "(" << z.re.get_str() << "," << z.im.get_str() << ")";
    }
};

inline mpq_class exact_from_double(double v) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value in exact mode");
    return mpq_class(v);
}

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Complex> {
    static constexpr bool exact = false;
    static constexpr const char* name = "float64";
    static Complex zero() { return {0.0, 0.0}; }
    static Complex one() { return {1.0, 0.0}; }
    static Complex from_int(long v) { return {double(v), 0.0}; }
    static Complex from_ratio(long p, long q) { return {double(p) / double(q), 0.0}; }
    static Complex from_parts(double re, double im) { return {re, im}; }
    static Complex from_float(Complex z) { return z; }
    static double abs(const Complex& z) { return std::abs(z); }
    static double abs2(const Complex& z) { return std::norm(z); }
    static double re(const Complex& z) { return z.real(); }
    static double im(const Complex& z) { return z.imag(); }
    static Complex to_float(const Complex& z) { return z; }
    static Complex conj(const Complex& z) { return std::conj(z); }
    static bool is_zero(const Complex& z, double tol) { return std::abs(z) <= tol; }
    static bool near(const Complex& a, const Complex& b, double tol) { return std::abs(a - b) <= tol; }
    // Lexicographic (re, im) ordering.
    static bool less(const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    }
};

template <>
struct ScalarTraits<QComplex> {
    static constexpr bool exact = true;
    static constexpr const char* name = "exact-rational";
    static QComplex zero() { return {}; }
    static QComplex one() { return QComplex(1); }
    static QComplex from_int(long v) { return QComplex(v); }
    static QComplex from_ratio(long p, long q) { return QComplex(mpq_class(p, q)); }
    static QComplex from_parts(double re, double im) {
        return QComplex(exact_from_double(re), exact_from_double(im));
    }
    static QComplex from_float(Complex z) { return from_parts(z.real(), z.imag()); }
    static double abs(const QComplex& z) { return std::sqrt(abs2(z)); }
    static double abs2(const QComplex& z) {
        mpq_class s = z.re * z.re + z.im * z.im;
        return s.get_d();
    }
    static double re(const QComplex& z) { return z.re.get_d(); }
    static double im(const QComplex& z) { return z.im.get_d(); }
    static Complex to_float(const QComplex& z) { return {z.re.get_d(), z.im.get_d()}; }
    static QComplex conj(const QComplex& z) { return QComplex(z.re, -z.im); }
    static bool is_zero(const QComplex& z, double) { return z.re == 0 && z.im == 0; }
    static bool near(const QComplex& a, const QComplex& b, double) { return a == b; }
    static bool less(const QComplex& a, const QComplex& b) {
        if (a.re != b.re) return a.re < b.re;
        return a.im < b.im;
    }
};

template <class S>
inline constexpr bool is_exact_v = ScalarTraits<S>::exact;

// Exact factorial as a scalar; orders here stay far below overflow.
template <class S>
S factorial(int k) {
    long f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return ScalarTraits<S>::from_int(f);
}

inline long factorial_int(int k) {
    long f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

// Decimal text that round-trips float64 exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace gmoi
