#pragma once

#include <array>
#include <string>
#include <vector>

#include "corrlab/dist.hpp"
#include "corrlab/rational.hpp"

namespace corrlab {

/// Covariances of the three pairs of A, B, C.
struct BellTriple {
    Covariance ab;
    Covariance ac;
    Covariance bc;
};

/// Covariances of the four setting pairs of the CHSH loop.
struct ChshQuad {
    Covariance ab;
    Covariance ac;
    Covariance db;
    Covariance dc;
};

/// One evaluated inequality |lhs| <= bound, compared exactly.
struct InequalityVerdict {
    std::string variant;
    Rational lhs;
    Rational bound;
    bool satisfied = true;
};

inline InequalityVerdict make_verdict(std::string variant, Rational lhs, Rational bound) {
    const bool ok = lhs.abs() <= bound;
    return {std::move(variant), std::move(lhs), std::move(bound), ok};
}

/// Sign pattern of a Bell inequality with pivot variable x:
///   Minus:  |s_xy - s_xz| <= 1 - s_yz   (the form |E(AB) - E(AC)| <= 1 - E(BC))
///   Plus:   |s_xy + s_xz| <= 1 + s_yz   (the same form after relabelling the
///                                        outcomes of y; right-hand side 1 + E)
enum class BellSign { Minus, Plus };

/// Pivot of the cyclic permutation: A gives the displayed inequality on
/// (AB, AC; BC), B and C rotate the roles.
enum class BellPivot { A, B, C };

struct BellVariant {
    BellPivot pivot = BellPivot::A;
    BellSign sign = BellSign::Minus;
};

namespace detail {

inline const char* pivot_name(BellPivot p) {
    switch (p) {
    case BellPivot::A: return "A";
    case BellPivot::B: return "B";
    case BellPivot::C: return "C";
    }
    return "?";
}

} // namespace detail

inline InequalityVerdict bell_check(const BellTriple& t, BellVariant variant = {}) {
    const Rational* xy = nullptr;
    const Rational* xz = nullptr;
    const Rational* yz = nullptr;
    std::string roles;
    switch (variant.pivot) {
    case BellPivot::A:
        xy = &t.ab.value(), xz = &t.ac.value(), yz = &t.bc.value();
        roles = "AB,AC;BC";
        break;
    case BellPivot::B:
        xy = &t.bc.value(), xz = &t.ab.value(), yz = &t.ac.value();
        roles = "BC,AB;AC";
        break;
    case BellPivot::C:
        xy = &t.ac.value(), xz = &t.bc.value(), yz = &t.ab.value();
        roles = "AC,BC;AB";
        break;
    }
    const bool minus = variant.sign == BellSign::Minus;
    const std::string op = minus ? "-" : "+";
    const std::string id = std::string("bell") + (minus ? "-" : "+") + "/" + detail::pivot_name(variant.pivot) +
                           " |" + roles.substr(0, 2) + " " + op + " " + roles.substr(3, 2) + "| <= 1 " + op + " " +
                           roles.substr(6, 2);
    Rational lhs = minus ? *xy - *xz : *xy + *xz;
    Rational bound = minus ? Rational(1) - *yz : Rational(1) + *yz;
    return make_verdict(id, std::move(lhs), std::move(bound));
}

/// All variants: the three cyclic pivots for each of the two sign patterns,
/// Minus first.
inline std::vector<InequalityVerdict> bell_check_all(const BellTriple& t) {
    std::vector<InequalityVerdict> out;
    for (BellSign s : {BellSign::Minus, BellSign::Plus}) {
        for (BellPivot p : {BellPivot::A, BellPivot::B, BellPivot::C}) {
            out.push_back(bell_check(t, {p, s}));
        }
    }
    return out;
}

inline bool all_satisfied(const std::vector<InequalityVerdict>& verdicts) {
    for (const auto& v : verdicts) {
        if (!v.satisfied) {
            return false;
        }
    }
    return true;
}

/// s_ab + s_ac + s_db - s_dc, signed.
inline Rational chsh_value(const ChshQuad& q) {
    return q.ab.value() + q.ac.value() + q.db.value() - q.dc.value();
}

/// The CHSH expression with the minus sign on each of the four terms in turn,
/// under both global signs: eight verdicts, bound 2. The first is the
/// standard placement (minus on dc, global +).
inline std::vector<InequalityVerdict> chsh_check_all(const ChshQuad& q) {
    static constexpr std::array<const char*, 4> names{"ab", "ac", "db", "dc"};
    const std::array<const Rational*, 4> terms{&q.ab.value(), &q.ac.value(), &q.db.value(), &q.dc.value()};
    std::vector<InequalityVerdict> out;
    for (int global : {1, -1}) {
        for (int minus_at : {3, 0, 1, 2}) {
            Rational sum;
            std::string expr;
            for (int k = 0; k < 4; ++k) {
                const bool neg = k == minus_at;
                sum += neg ? -*terms[k] : *terms[k];
                expr += (k == 0 ? (neg ? "-" : "") : (neg ? " - " : " + "));
                expr += names[k];
            }
            if (global < 0) {
                sum = -sum;
            }
            std::string id = std::string("chsh") + (global > 0 ? "+" : "-") + "/" + names[minus_at] + " |" +
                             (global > 0 ? "" : "-(") + expr + (global > 0 ? "" : ")") + "| <= 2";
            out.push_back(make_verdict(std::move(id), std::move(sum), Rational(2)));
        }
    }
    return out;
}

} // namespace corrlab
