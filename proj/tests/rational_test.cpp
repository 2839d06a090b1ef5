#include <gtest/gtest.h>

#include <cmath>

#include "corrlab/rational.hpp"

using corrlab::Rational;

TEST(Rational, ParsesFractionsIntegersAndDecimalsExactly) {
    EXPECT_EQ(Rational::parse("3/6"), Rational(1, 2));
    EXPECT_EQ(Rational::parse("-1/4"), Rational(-1, 4));
    EXPECT_EQ(Rational::parse(" 7 "), Rational(7));
    EXPECT_EQ(Rational::parse("0.1"), Rational(1, 10));
    EXPECT_EQ(Rational::parse("-0.125"), Rational(-1, 8));
    EXPECT_EQ(Rational::parse("2.5e-3"), Rational(1, 400));
    EXPECT_EQ(Rational::parse("1e2"), Rational(100));
    EXPECT_EQ(Rational::parse(".5"), Rational(1, 2));
}

TEST(Rational, RejectsMalformedText) {
    for (const char* bad : {"", "1/0", "a/2", "1/-2", "1.2.3", "--1", "1/2/3", "e5", "0x10"}) {
        EXPECT_THROW(Rational::parse(bad), corrlab::DomainError) << bad;
    }
}

TEST(Rational, LowestTermsAndPositiveDenominator) {
    const Rational r(6, -8);
    EXPECT_EQ(r.str(), "-3/4");
    EXPECT_EQ(r.fraction_str(), "-3/4");
    EXPECT_EQ(Rational(4, 2).fraction_str(), "2/1");
    EXPECT_EQ(Rational(4, 2).str(), "2");
}

TEST(Rational, RationalizeMeetsTolerance) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (double tol : {1e-3, 1e-6, 1e-9, 1e-12}) {
        const Rational r = corrlab::rationalize(inv_sqrt2, tol);
        EXPECT_LT(corrlab::rationalization_error(r, inv_sqrt2), tol);
    }
    // Exact dyadics come back unchanged, zero stays zero.
    EXPECT_EQ(corrlab::rationalize(0.375), Rational(3, 8));
    EXPECT_EQ(corrlab::rationalize(0.0), Rational(0));
    EXPECT_EQ(corrlab::rationalize(-1.0), Rational(-1));
    // cos(pi/2) in double is ~6e-17, well inside the default tolerance.
    EXPECT_EQ(corrlab::rationalize(std::cos(M_PI / 2)), Rational(0));
}

TEST(Rational, RationalizeKeepsSmallDenominators) {
    // Convergents of 1/sqrt(2): the first within 1e-9 has a five-digit denominator.
    const Rational r = corrlab::rationalize(1.0 / std::sqrt(2.0));
    EXPECT_LT(r.denominator(), 100000);
    EXPECT_THROW(corrlab::rationalize(NAN), corrlab::DomainError);
    EXPECT_THROW(corrlab::rationalize(0.5, 0.0), corrlab::DomainError);
}
