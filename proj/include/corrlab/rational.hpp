#pragma once

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "corrlab/errors.hpp"

namespace corrlab {

/// Exact rational number, always in lowest terms with a positive denominator.
///
/// Thin value wrapper over GMP's mpq_class so that probabilities, covariances
/// and certificate entries never go through floating point on the decision
/// path.
class Rational {
public:
    Rational() = default;
    Rational(long value) : value_(value) {} // NOLINT(implicit)
    Rational(long numerator, long denominator) {
        if (denominator == 0) {
            throw DomainError("rational with zero denominator");
        }
        value_ = mpq_class(numerator, denominator);
        value_.canonicalize();
    }
    explicit Rational(mpq_class value) : value_(std::move(value)) { value_.canonicalize(); }

    /// Accepts "n", "n/d", and finite decimal literals such as "-0.125" or
    /// "2.5e-3". Decimals are converted exactly.
    static Rational parse(std::string_view text);

    /// Exact value of a finite double.
    static Rational from_double(double value) {
        if (!std::isfinite(value)) {
            throw DomainError("cannot represent a non-finite value as a rational");
        }
        return Rational(mpq_class(value));
    }

    const mpq_class& value() const { return value_; }
    mpz_class numerator() const { return value_.get_num(); }
    mpz_class denominator() const { return value_.get_den(); }
    bool is_integer() const { return value_.get_den() == 1; }
    int sign() const { return sgn(value_); }

    double to_double() const { return value_.get_d(); }

    /// "n" for integers, "n/d" otherwise.
    std::string str() const { return value_.get_str(); }

    /// Always "n/d", the wire form for exact times.
    std::string fraction_str() const {
        return value_.get_num().get_str() + "/" + value_.get_den().get_str();
    }

    Rational abs() const { return Rational(mpq_class(::abs(value_))); }

    Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
    Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
    Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.sign() == 0) {
            throw DomainError("division by zero");
        }
        value_ /= o.value_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.value_)); }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.value_, b.value_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        const int c = cmp(a.value_, b.value_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    mpq_class value_{0};
};

namespace detail {

inline bool all_digits(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    return true;
}

inline mpz_class parse_integer(std::string_view s, std::string_view whole) {
    bool negative = false;
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!all_digits(s)) {
        throw DomainError("malformed rational '" + std::string(whole) + "'");
    }
    mpz_class z(std::string(s), 10);
    return negative ? mpz_class(-z) : z;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace detail

inline Rational Rational::parse(std::string_view text) {
    const std::string_view s = detail::trim(text);
    if (s.empty()) {
        throw DomainError("malformed rational ''");
    }
    if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        const mpz_class num = detail::parse_integer(s.substr(0, slash), s);
        const std::string_view den_text = s.substr(slash + 1);
        if (!detail::all_digits(den_text)) {
            throw DomainError("malformed rational '" + std::string(s) + "'");
        }
        const mpz_class den(std::string(den_text), 10);
        if (den == 0) {
            throw DomainError("malformed rational '" + std::string(s) + "': zero denominator");
        }
        return Rational(mpq_class(num, den));
    }

    // Decimal literal: [sign] digits [. digits] [e|E [sign] digits]
    std::string_view mantissa = s;
    long exponent = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        mantissa = s.substr(0, e);
        const mpz_class ez = detail::parse_integer(s.substr(e + 1), s);
        if (!ez.fits_slong_p() || ::abs(ez) > 4096) {
            throw DomainError("exponent out of range in '" + std::string(s) + "'");
        }
        exponent = ez.get_si();
    }
    bool negative = false;
    if (!mantissa.empty() && (mantissa.front() == '+' || mantissa.front() == '-')) {
        negative = mantissa.front() == '-';
        mantissa.remove_prefix(1);
    }
    std::string digits;
    if (const auto dot = mantissa.find('.'); dot != std::string_view::npos) {
        const std::string_view int_part = mantissa.substr(0, dot);
        const std::string_view frac_part = mantissa.substr(dot + 1);
        if ((int_part.empty() && frac_part.empty()) || (!int_part.empty() && !detail::all_digits(int_part)) ||
            (!frac_part.empty() && !detail::all_digits(frac_part))) {
            throw DomainError("malformed rational '" + std::string(s) + "'");
        }
        digits = std::string(int_part) + std::string(frac_part);
        exponent -= static_cast<long>(frac_part.size());
    } else {
        if (!detail::all_digits(mantissa)) {
            throw DomainError("malformed rational '" + std::string(s) + "'");
        }
        digits = std::string(mantissa);
    }
    if (digits.empty()) {
        digits = "0";
    }
    mpq_class q{mpz_class(digits, 10)};
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    if (exponent < 0) {
        q /= scale;
    } else {
        q *= scale;
    }
    if (negative) {
        q = -q;
    }
    return Rational(q);
}

/// Default rationalization tolerance for irrational inputs such as 1/sqrt(2).
inline constexpr double kDefaultPrecision = 1e-9;

/// Best rational approximation of `x` from its continued-fraction
/// convergents: returns the first convergent with |p/q - x| < tolerance.
inline Rational rationalize(double x, double tolerance = kDefaultPrecision) {
    if (!std::isfinite(x)) {
        throw DomainError("cannot rationalize a non-finite value");
    }
    if (!(tolerance > 0.0)) {
        throw DomainError("rationalization tolerance must be positive");
    }
    const mpq_class target(x);
    const mpq_class tol(tolerance);
    mpz_class h_prev = 1, h_prev2 = 0;
    mpz_class k_prev = 0, k_prev2 = 1;
    mpq_class rest = target;
    for (;;) {
        mpz_class a;
        mpz_fdiv_q(a.get_mpz_t(), rest.get_num_mpz_t(), rest.get_den_mpz_t());
        const mpz_class h = a * h_prev + h_prev2;
        const mpz_class k = a * k_prev + k_prev2;
        mpq_class conv(h, k);
        conv.canonicalize();
        const mpq_class frac = rest - a;
        if (::abs(mpq_class(conv - target)) < tol || frac == 0) {
            return Rational(conv);
        }
        rest = 1 / frac;
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
    }
}

/// |r - x| as a double, for reporting rationalization error.
inline double rationalization_error(const Rational& r, double x) {
    return std::fabs(mpq_class(r.value() - mpq_class(x)).get_d());
}

} // namespace corrlab
