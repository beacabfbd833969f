#pragma once

#include <cstdint>
#include <compare>
#include <numeric>
#include <string>

#include "tatum/errors.hpp"

namespace tatum {

/// Exact rational with int64 numerator/denominator, always normalized
/// (den > 0, gcd(num, den) == 1).  Score locations and intervals stay on
/// small denominators (grid steps, subdivision lattices), so int64 has
/// plenty of headroom; arithmetic reduces by gcd before multiplying.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw DimensionError("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        std::int64_t g = std::gcd(a.den, b.den);
        return Rational(a.num * (b.den / g) + b.num * (a.den / g), a.den / g * b.den);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return a + Rational(-b.num, b.den);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        std::int64_t g1 = std::gcd(a.num < 0 ? -a.num : a.num, b.den);
        std::int64_t g2 = std::gcd(b.num < 0 ? -b.num : b.num, a.den);
        return Rational((a.num / g1) * (b.num / g2), (a.den / g2) * (b.den / g1));
    }
    Rational operator-() const { return Rational(-num, den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        // cross products fit easily at score magnitudes
        return a.num * b.den <=> b.num * a.den;
    }

    /// Largest integer <= value.
    std::int64_t floor() const {
        std::int64_t q = num / den;
        if (num % den != 0 && num < 0) --q;
        return q;
    }

    /// Fractional part in [0, 1).
    Rational mod1() const { return *this - Rational(floor()); }

    bool is_integer() const { return den == 1; }

    /// "p/q", or just "p" when the denominator is 1.
    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

/// Parses "p/q" or "p".  Throws FormatError on anything else.
Rational parse_rational(const std::string& text);

} // namespace tatum
