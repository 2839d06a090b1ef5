#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corrlab/dist.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/rational.hpp"

namespace corrlab {

/// One marginal constraint: the joint law of `vars` must equal `table`.
struct MarginalConstraint {
    std::vector<std::size_t> vars;
    JointTable table;
};

/// A family of marginal tables over overlapping subsets of `arity` variables.
/// Subsets may form closed loops (AB, AC, BC).
class MarginalSystem {
public:
    explicit MarginalSystem(std::size_t arity) : arity_(arity) {
        if (arity == 0) {
            throw DomainError("marginal system needs at least one variable");
        }
    }

    MarginalSystem& add(std::vector<std::size_t> vars, JointTable table) {
        if (vars.empty()) {
            throw DomainError("marginal constraint over an empty subset");
        }
        if (table.arity() != vars.size()) {
            throw DomainError("constraint table arity " + std::to_string(table.arity()) +
                              " does not match subset size " + std::to_string(vars.size()));
        }
        std::vector<bool> seen(arity_, false);
        for (std::size_t v : vars) {
            if (v >= arity_) {
                throw std::out_of_range("constraint variable " + std::to_string(v) + " out of range");
            }
            if (seen[v]) {
                throw DomainError("constraint repeats variable " + std::to_string(v));
            }
            seen[v] = true;
        }
        constraints_.push_back({std::move(vars), std::move(table)});
        return *this;
    }

    MarginalSystem& add(const PairMarginal& pair) { return add({pair.var_i(), pair.var_j()}, pair.to_joint()); }

    std::size_t arity() const { return arity_; }
    const std::vector<MarginalConstraint>& constraints() const { return constraints_; }

    MarginalSystem without(std::size_t constraint_index) const {
        MarginalSystem out(arity_);
        for (std::size_t k = 0; k < constraints_.size(); ++k) {
            if (k != constraint_index) {
                out.constraints_.push_back(constraints_[k]);
            }
        }
        return out;
    }

private:
    std::size_t arity_;
    std::vector<MarginalConstraint> constraints_;
};

/// A, B, C with pair tables on AB, AC, BC built from covariances.
inline MarginalSystem triangle_system(const Covariance& ab, const Covariance& ac, const Covariance& bc) {
    MarginalSystem s(3);
    s.add(pair_table_from_covariance(ab, 0, 1));
    s.add(pair_table_from_covariance(ac, 0, 2));
    s.add(pair_table_from_covariance(bc, 1, 2));
    return s;
}

/// Variable order of the CHSH loop: A(a), A(d), B(b), B(c).
inline constexpr std::size_t kAa = 0, kAd = 1, kBb = 2, kBc = 3;

/// The closed loop (A(a),B(b)), (A(a),B(c)), (A(d),B(b)), (A(d),B(c)).
inline MarginalSystem chsh_loop_system(const Covariance& ab, const Covariance& ac, const Covariance& db,
                                       const Covariance& dc) {
    MarginalSystem s(4);
    s.add(pair_table_from_covariance(ab, kAa, kBb));
    s.add(pair_table_from_covariance(ac, kAa, kBc));
    s.add(pair_table_from_covariance(db, kAd, kBb));
    s.add(pair_table_from_covariance(dc, kAd, kBc));
    return s;
}

struct RealizabilityOptions {
    std::size_t max_arity = 12;
};

/// Equality system over the 2^n atom masses: one 0/1 row per constraint
/// cell, then the normalization row. Nonnegativity is implicit.
struct ConstraintSystem {
    struct RowLabel {
        std::size_t constraint; // == constraints().size() for the normalization row
        SignVector cell;
    };

    std::size_t arity = 0;
    std::size_t columns = 0;
    std::vector<std::vector<std::uint8_t>> coefficients;
    std::vector<Rational> rhs;
    std::vector<RowLabel> labels;

    std::size_t rows() const { return rhs.size(); }
    std::size_t cell_rows() const { return rhs.empty() ? 0 : rhs.size() - 1; }
};

inline ConstraintSystem build_constraint_system(const MarginalSystem& system, const RealizabilityOptions& opts = {}) {
    if (system.arity() > opts.max_arity) {
        throw CapacityError("marginal system has " + std::to_string(system.arity()) +
                            " variables, above the cap of " + std::to_string(opts.max_arity));
    }
    ConstraintSystem cs;
    cs.arity = system.arity();
    cs.columns = std::size_t{1} << system.arity();

    std::vector<SignVector> atoms;
    atoms.reserve(cs.columns);
    for (std::size_t j = 0; j < cs.columns; ++j) {
        atoms.push_back(SignVector::from_index(cs.arity, j));
    }

    const auto& constraints = system.constraints();
    for (std::size_t c = 0; c < constraints.size(); ++c) {
        const auto& con = constraints[c];
        const std::size_t cells = std::size_t{1} << con.vars.size();
        for (std::size_t k = 0; k < cells; ++k) {
            SignVector cell = SignVector::from_index(con.vars.size(), k);
            std::vector<std::uint8_t> row(cs.columns, 0);
            for (std::size_t j = 0; j < cs.columns; ++j) {
                row[j] = atoms[j].restrict_to(con.vars) == cell ? 1 : 0;
            }
            cs.coefficients.push_back(std::move(row));
            cs.rhs.push_back(con.table.mass(cell));
            cs.labels.push_back({c, std::move(cell)});
        }
    }
    cs.coefficients.emplace_back(cs.columns, 1);
    cs.rhs.emplace_back(1);
    cs.labels.push_back({constraints.size(), SignVector{}});
    return cs;
}

enum class Verdict { Feasible, Infeasible };

inline const char* to_string(Verdict v) { return v == Verdict::Feasible ? "FEASIBLE" : "INFEASIBLE"; }

/// Outcome of a realizability decision.
///
/// Feasible: `witness` is a joint table whose marginals reproduce every
/// constraint and `margin` is 0.
/// Infeasible: `certificate` holds one multiplier per constraint row
/// (normalization last). Its inner product with the right-hand sides equals
/// `margin` > 0 while every atom column scores <= 0, so no distribution can
/// satisfy the rows. Cell multipliers lie in [-1, 1], which also makes
/// `margin` a lower bound on the L1 violation of any distribution.
struct FeasibilityResult {
    Verdict verdict = Verdict::Feasible;
    std::optional<JointTable> witness;
    std::optional<std::vector<Rational>> certificate;
    Rational margin;
    std::size_t pivots = 0;

    bool feasible() const { return verdict == Verdict::Feasible; }
};

namespace detail {

/// Optimum of   min sum(s+ + s-)  s.t.  A x + s+ - s- = b,  1'x = 1,  x, s+, s- >= 0
/// by the primal simplex method with Bland's rule over exact rationals.
struct MinViolation {
    mpq_class value;
    std::vector<mpq_class> x;    // atom masses
    std::vector<mpq_class> dual; // one per row, normalization last
    std::size_t pivots = 0;
};

class ViolationSimplex {
public:
    explicit ViolationSimplex(const ConstraintSystem& cs)
        : m_(cs.cell_rows()), n_(cs.columns), cols_(cs.columns + 2 * cs.cell_rows()), rows_(m_ + 1),
          tab_(rows_ * cols_), rhs_(rows_), basis_(rows_), reduced_(cols_), coeff0_(m_) {
        // Start from the point mass on atom 0: x_0 is basic in the
        // normalization row, and each cell row takes whichever slack
        // absorbs its residual b_i - A_i0 with a nonnegative value.
        for (std::size_t j = 0; j < n_; ++j) {
            at(m_, j) = 1;
        }
        rhs_[m_] = 1;
        basis_[m_] = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& a = cs.coefficients[i];
            coeff0_[i] = a[0] != 0;
            for (std::size_t j = 1; j < n_; ++j) {
                at(i, j) = static_cast<int>(a[j]) - static_cast<int>(a[0]);
            }
            at(i, plus(i)) = 1;
            at(i, minus(i)) = -1;
            rhs_[i] = cs.rhs[i].value() - a[0];
            if (sgn(rhs_[i]) < 0) {
                for (std::size_t j = 0; j < cols_; ++j) {
                    at(i, j) = -at(i, j);
                }
                rhs_[i] = -rhs_[i];
                basis_[i] = minus(i);
            } else {
                basis_[i] = plus(i);
            }
        }
        for (std::size_t j = 0; j < cols_; ++j) {
            mpq_class z = 0;
            for (std::size_t r = 0; r < rows_; ++r) {
                if (cost(basis_[r]) != 0 && sgn(at(r, j)) != 0) {
                    z += at(r, j);
                }
            }
            reduced_[j] = cost(j) - z;
        }
    }

    MinViolation solve() {
        std::size_t pivots = 0;
        for (;;) {
            std::size_t entering = cols_;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (sgn(reduced_[j]) < 0) {
                    entering = j;
                    break;
                }
            }
            if (entering == cols_) {
                break;
            }
            std::size_t leave = rows_;
            mpq_class best;
            for (std::size_t r = 0; r < rows_; ++r) {
                if (sgn(at(r, entering)) <= 0) {
                    continue;
                }
                mpq_class ratio = rhs_[r] / at(r, entering);
                if (leave == rows_ || ratio < best || (ratio == best && basis_[r] < basis_[leave])) {
                    leave = r;
                    best = std::move(ratio);
                }
            }
            // The objective is bounded below by 0, so a blocking row exists.
            pivot(leave, entering);
            ++pivots;
        }

        MinViolation out;
        out.pivots = pivots;
        out.x.assign(n_, 0);
        out.value = 0;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (basis_[r] < n_) {
                out.x[basis_[r]] = rhs_[r];
            } else {
                out.value += rhs_[r];
            }
        }
        // Reduced cost of s+_i is 1 - y_i; that of x_0 is -(A_0'y + y_norm).
        out.dual.assign(rows_, 0);
        mpq_class a0y = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            out.dual[i] = 1 - reduced_[plus(i)];
            if (coeff0_[i]) {
                a0y += out.dual[i];
            }
        }
        out.dual[m_] = -a0y - reduced_[0];
        return out;
    }

private:
    mpq_class& at(std::size_t r, std::size_t c) { return tab_[r * cols_ + c]; }
    std::size_t plus(std::size_t i) const { return n_ + i; }
    std::size_t minus(std::size_t i) const { return n_ + m_ + i; }
    int cost(std::size_t j) const { return j < n_ ? 0 : 1; }

    void pivot(std::size_t p, std::size_t q) {
        const mpq_class piv = at(p, q);
        std::vector<std::size_t> nz;
        for (std::size_t j = 0; j < cols_; ++j) {
            if (sgn(at(p, j)) != 0) {
                at(p, j) /= piv;
                nz.push_back(j);
            }
        }
        rhs_[p] /= piv;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == p || sgn(at(r, q)) == 0) {
                continue;
            }
            const mpq_class f = at(r, q);
            for (std::size_t j : nz) {
                at(r, j) -= f * at(p, j);
            }
            rhs_[r] -= f * rhs_[p];
        }
        if (sgn(reduced_[q]) != 0) {
            const mpq_class f = reduced_[q];
            for (std::size_t j : nz) {
                reduced_[j] -= f * at(p, j);
            }
        }
        basis_[p] = q;
    }

    std::size_t m_, n_, cols_, rows_;
    std::vector<mpq_class> tab_;
    std::vector<mpq_class> rhs_;
    std::vector<std::size_t> basis_;
    std::vector<mpq_class> reduced_;
    std::vector<bool> coeff0_;
};

inline MinViolation minimize_violation(const ConstraintSystem& cs) {
    ViolationSimplex simplex(cs);
    return simplex.solve();
}

} // namespace detail

/// Decides whether the marginal tables of `system` are the marginals of one
/// joint distribution, returning a witness or a Farkas-type certificate.
///
/// `margin` is the least total absolute violation of the constraint cells
/// over all distributions on the atoms; it is zero exactly when feasible.
inline FeasibilityResult check_realizability(const MarginalSystem& system, const RealizabilityOptions& opts = {}) {
    const ConstraintSystem cs = build_constraint_system(system, opts);
    detail::MinViolation opt = detail::minimize_violation(cs);

    FeasibilityResult result;
    result.pivots = opt.pivots;
    result.margin = Rational(opt.value);
    if (sgn(opt.value) == 0) {
        std::vector<Rational> masses;
        masses.reserve(opt.x.size());
        for (auto& v : opt.x) {
            masses.emplace_back(std::move(v));
        }
        result.verdict = Verdict::Feasible;
        result.witness = JointTable::from_dense(cs.arity, masses);
    } else {
        std::vector<Rational> cert;
        cert.reserve(opt.dual.size());
        for (auto& v : opt.dual) {
            cert.emplace_back(std::move(v));
        }
        result.verdict = Verdict::Infeasible;
        result.certificate = std::move(cert);
    }
    return result;
}

/// Replays a result against its system with exact arithmetic and without
/// touching the solver: witnesses are re-marginalized, certificates are
/// re-scored on every atom column.
inline bool verify_certificate(const MarginalSystem& system, const FeasibilityResult& result,
                               const RealizabilityOptions& opts = {}) {
    if (result.feasible()) {
        if (!result.witness || result.certificate) {
            return false;
        }
        if (result.witness->arity() != system.arity()) {
            throw DomainError("witness arity " + std::to_string(result.witness->arity()) +
                              " does not match system arity " + std::to_string(system.arity()));
        }
        if (result.margin != Rational(0)) {
            return false;
        }
        for (const auto& con : system.constraints()) {
            if (!(marginalize(*result.witness, con.vars) == con.table)) {
                return false;
            }
        }
        return true;
    }

    if (!result.certificate || result.witness) {
        return false;
    }
    const ConstraintSystem cs = build_constraint_system(system, opts);
    const auto& y = *result.certificate;
    if (y.size() != cs.rows()) {
        throw DomainError("certificate length " + std::to_string(y.size()) + " does not match " +
                          std::to_string(cs.rows()) + " constraint rows");
    }
    for (std::size_t i = 0; i < cs.cell_rows(); ++i) {
        if (y[i].abs() > Rational(1)) {
            return false;
        }
    }
    Rational bound;
    for (std::size_t r = 0; r < cs.rows(); ++r) {
        bound += cs.rhs[r] * y[r];
    }
    if (bound.sign() <= 0 || bound != result.margin) {
        return false;
    }
    for (std::size_t j = 0; j < cs.columns; ++j) {
        Rational score;
        for (std::size_t r = 0; r < cs.rows(); ++r) {
            if (cs.coefficients[r][j] != 0) {
                score += y[r];
            }
        }
        if (score.sign() > 0) {
            return false;
        }
    }
    return true;
}

} // namespace corrlab
