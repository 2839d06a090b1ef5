#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corrlab/errors.hpp"
#include "corrlab/rational.hpp"

namespace corrlab {

/// Ordered tuple of +/-1 outcomes, one per variable.
///
/// Vectors of equal arity are ordered like the column heads of a pair table:
/// (+1,+1) < (+1,-1) < (-1,+1) < (-1,-1). That order coincides with the atom
/// index used by the constraint encoding (variable 0 is the most significant
/// bit, a set bit means -1).
class SignVector {
public:
    SignVector() = default;
    explicit SignVector(std::vector<int> values) : values_(std::move(values)) {
        for (int v : values_) {
            if (v != 1 && v != -1) {
                throw DomainError("sign vector entries must be +1 or -1, got " + std::to_string(v));
            }
        }
    }
    SignVector(std::initializer_list<int> values) : SignVector(std::vector<int>(values)) {}

    /// Atom `index` of {+1,-1}^arity.
    static SignVector from_index(std::size_t arity, std::uint64_t index) {
        std::vector<int> v(arity);
        for (std::size_t i = 0; i < arity; ++i) {
            v[i] = ((index >> (arity - 1 - i)) & 1U) != 0 ? -1 : 1;
        }
        return SignVector(std::move(v));
    }

    std::uint64_t index() const {
        std::uint64_t idx = 0;
        for (int v : values_) {
            idx = (idx << 1U) | (v < 0 ? 1U : 0U);
        }
        return idx;
    }

    std::size_t arity() const { return values_.size(); }
    int operator[](std::size_t i) const { return values_.at(i); }
    const std::vector<int>& values() const { return values_; }

    SignVector restrict_to(std::span<const std::size_t> subset) const {
        std::vector<int> v;
        v.reserve(subset.size());
        for (std::size_t i : subset) {
            v.push_back(values_.at(i));
        }
        return SignVector(std::move(v));
    }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < values_.size(); ++i) {
            s += (i ? "," : "");
            s += values_[i] > 0 ? "+1" : "-1";
        }
        return s + ")";
    }

    friend bool operator==(const SignVector&, const SignVector&) = default;
    friend bool operator<(const SignVector& a, const SignVector& b) {
        // +1 sorts before -1
        return std::lexicographical_compare(a.values_.begin(), a.values_.end(), b.values_.begin(), b.values_.end(),
                                            [](int x, int y) { return x > y; });
    }

private:
    std::vector<int> values_;
};

/// Probability distribution over {+1,-1}^arity with exact rational masses.
/// Storage is sparse: atoms with mass zero are not kept.
class JointTable {
public:
    using Atoms = std::map<SignVector, Rational>;

    JointTable(std::size_t arity, Atoms atoms) : arity_(arity) {
        if (arity == 0) {
            throw DomainError("joint table arity must be positive");
        }
        if (arity > 62) {
            throw CapacityError("joint table arity above 62 variables");
        }
        Rational total;
        for (auto& [key, mass] : atoms) {
            if (key.arity() != arity) {
                throw DomainError("atom " + key.str() + " does not have arity " + std::to_string(arity));
            }
            if (mass.sign() < 0) {
                throw DomainError("negative mass " + mass.str() + " on atom " + key.str());
            }
            total += mass;
            if (mass.sign() > 0) {
                atoms_.emplace(key, mass);
            }
        }
        if (total != Rational(1)) {
            throw DomainError("joint table masses sum to " + total.str() + ", expected 1");
        }
    }

    /// Dense construction, `masses[k]` is the mass of SignVector::from_index(arity, k).
    static JointTable from_dense(std::size_t arity, std::span<const Rational> masses) {
        if (arity == 0 || arity > 62 || masses.size() != (std::size_t{1} << arity)) {
            throw DomainError("dense table size does not match 2^arity");
        }
        Atoms atoms;
        for (std::size_t k = 0; k < masses.size(); ++k) {
            atoms.emplace(SignVector::from_index(arity, k), masses[k]);
        }
        return JointTable(arity, std::move(atoms));
    }

    static JointTable uniform(std::size_t arity) {
        std::vector<Rational> masses(std::size_t{1} << arity, Rational(1, 1L << arity));
        return from_dense(arity, masses);
    }

    static JointTable point(const SignVector& at) { return JointTable(at.arity(), {{at, Rational(1)}}); }

    std::size_t arity() const { return arity_; }
    const Atoms& atoms() const { return atoms_; }

    Rational mass(const SignVector& at) const {
        const auto it = atoms_.find(at);
        return it == atoms_.end() ? Rational(0) : it->second;
    }

    std::vector<Rational> dense() const {
        std::vector<Rational> out(std::size_t{1} << arity_);
        for (const auto& [key, m] : atoms_) {
            out[key.index()] = m;
        }
        return out;
    }

    friend bool operator==(const JointTable& a, const JointTable& b) {
        return a.arity_ == b.arity_ && a.atoms_ == b.atoms_;
    }

private:
    std::size_t arity_;
    Atoms atoms_;
};

/// Covariance E(XY) of two +/-1 variables; |value| <= 1.
class Covariance {
public:
    Covariance() = default;
    explicit Covariance(Rational value) : value_(std::move(value)) {
        if (value_.abs() > Rational(1)) {
            throw DomainError("covariance " + value_.str() + " outside [-1, 1]");
        }
    }
    Covariance(long num, long den) : Covariance(Rational(num, den)) {}

    const Rational& value() const { return value_; }
    double to_double() const { return value_.to_double(); }

    friend bool operator==(const Covariance&, const Covariance&) = default;

private:
    Rational value_;
};

/// Cell order of a pair table: (+1,+1), (+1,-1), (-1,+1), (-1,-1).
inline constexpr std::array<std::pair<int, int>, 4> kPairCells{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

/// Joint distribution of two variables (var_i, var_j).
class PairMarginal {
public:
    PairMarginal(std::size_t var_i, std::size_t var_j, std::array<Rational, 4> table)
        : var_i_(var_i), var_j_(var_j), table_(std::move(table)) {
        if (var_i == var_j) {
            throw DomainError("pair marginal needs two distinct variables");
        }
        Rational total;
        for (const auto& p : table_) {
            if (p.sign() < 0) {
                throw DomainError("negative pair probability " + p.str());
            }
            total += p;
        }
        if (total != Rational(1)) {
            throw DomainError("pair probabilities sum to " + total.str() + ", expected 1");
        }
    }

    std::size_t var_i() const { return var_i_; }
    std::size_t var_j() const { return var_j_; }
    const std::array<Rational, 4>& table() const { return table_; }

    const Rational& at(int a, int b) const {
        for (std::size_t k = 0; k < 4; ++k) {
            if (kPairCells[k] == std::pair{a, b}) {
                return table_[k];
            }
        }
        throw DomainError("pair cell must be (+/-1, +/-1)");
    }

    JointTable to_joint() const {
        JointTable::Atoms atoms;
        for (std::size_t k = 0; k < 4; ++k) {
            atoms.emplace(SignVector{kPairCells[k].first, kPairCells[k].second}, table_[k]);
        }
        return JointTable(2, std::move(atoms));
    }

    friend bool operator==(const PairMarginal&, const PairMarginal&) = default;

private:
    std::size_t var_i_;
    std::size_t var_j_;
    std::array<Rational, 4> table_;
};

/// Pair table with uniform +/-1 marginals and covariance sigma:
/// (1+s)/4 on the diagonal cells, (1-s)/4 off the diagonal.
inline PairMarginal pair_table_from_covariance(const Covariance& sigma, std::size_t var_i = 0,
                                               std::size_t var_j = 1) {
    const Rational& s = sigma.value();
    const Rational quarter(1, 4);
    const Rational same = (Rational(1) + s) * quarter;
    const Rational diff = (Rational(1) - s) * quarter;
    return PairMarginal(var_i, var_j, {same, diff, diff, same});
}

inline Covariance covariance_of(const JointTable& joint, std::size_t i, std::size_t j) {
    if (i >= joint.arity() || j >= joint.arity()) {
        throw std::out_of_range("covariance_of: variable index out of range");
    }
    if (i == j) {
        throw DomainError("covariance_of: variables must be distinct");
    }
    Rational acc;
    for (const auto& [key, mass] : joint.atoms()) {
        if (key[i] * key[j] > 0) {
            acc += mass;
        } else {
            acc -= mass;
        }
    }
    return Covariance(acc);
}

/// Marginal distribution of the variables in `subset`, in the given order.
inline JointTable marginalize(const JointTable& joint, std::span<const std::size_t> subset) {
    if (subset.empty()) {
        throw DomainError("marginalize: empty subset");
    }
    std::vector<bool> seen(joint.arity(), false);
    for (std::size_t v : subset) {
        if (v >= joint.arity()) {
            throw std::out_of_range("marginalize: variable index " + std::to_string(v) + " out of range");
        }
        if (seen[v]) {
            throw DomainError("marginalize: repeated variable index " + std::to_string(v));
        }
        seen[v] = true;
    }
    JointTable::Atoms out;
    for (const auto& [key, mass] : joint.atoms()) {
        out[key.restrict_to(subset)] += mass;
    }
    return JointTable(subset.size(), std::move(out));
}

inline JointTable marginalize(const JointTable& joint, std::initializer_list<std::size_t> subset) {
    return marginalize(joint, std::span<const std::size_t>(subset.begin(), subset.size()));
}

/// Quantum prediction for the covariance of two spin measurements whose
/// setting vectors enclose `angle_radians`: -cos(angle), rationalized.
inline Covariance qm_covariance(double angle_radians, double tolerance = kDefaultPrecision) {
    if (!std::isfinite(angle_radians)) {
        throw DomainError("angle must be finite");
    }
    Rational r = rationalize(-std::cos(angle_radians), tolerance);
    // cos can round just past +/-1 only in pathological cases; clamp exactly.
    if (r > Rational(1)) {
        r = Rational(1);
    } else if (r < Rational(-1)) {
        r = Rational(-1);
    }
    return Covariance(std::move(r));
}

inline constexpr double kPi = 3.14159265358979323846;

inline double degrees(double deg) { return deg * kPi / 180.0; }

} // namespace corrlab
