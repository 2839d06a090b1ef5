#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "corrlab/errors.hpp"
#include "corrlab/rational.hpp"
#include "corrlab/rng.hpp"

namespace corrlab::ghz {

enum class Regime : std::uint8_t { yyx = 0, yxy = 1, xyy = 2, xxx = 3 };

inline constexpr std::array<Regime, 4> kRegimes{Regime::yyx, Regime::yxy, Regime::xyy, Regime::xxx};

inline const char* to_string(Regime r) {
    static constexpr std::array<const char*, 4> names{"yyx", "yxy", "xyy", "xxx"};
    return names[static_cast<std::size_t>(r)];
}

inline Regime parse_regime(std::string_view s) {
    for (Regime r : kRegimes) {
        if (s == to_string(r)) {
            return r;
        }
    }
    throw DomainError("unknown regime '" + std::string(s) + "'");
}

/// Product the three outputs must have in this regime.
inline int expected_product(Regime r) { return r == Regime::xxx ? 1 : -1; }

/// Observable measured by `node` (1..3) in regime `r`: 'X' or 'Y'.
inline char observable(Regime r, int node) {
    return static_cast<char>(to_string(r)[node - 1] - 'a' + 'A');
}

/// r_k(t) = sign(sin(2^k pi t)) with sign(0) = +1, evaluated exactly from the
/// parity of floor(2^k t).
inline int rademacher(unsigned k, const Rational& t) {
    if (k == 0) {
        throw DomainError("rademacher index must be at least 1");
    }
    if (t.sign() <= 0) {
        throw DomainError("rademacher: t must be positive, got " + t.str());
    }
    mpz_class scaled = t.numerator();
    mpz_mul_2exp(scaled.get_mpz_t(), scaled.get_mpz_t(), k);
    mpz_class quotient;
    mpz_class remainder;
    mpz_fdiv_qr(quotient.get_mpz_t(), remainder.get_mpz_t(), scaled.get_mpz_t(), t.denominator().get_mpz_t());
    if (remainder == 0) {
        return 1;
    }
    return mpz_even_p(quotient.get_mpz_t()) ? 1 : -1;
}

/// sign * prod r_k(t) over `indices`.
struct Response {
    int sign = 1;
    std::vector<unsigned> indices;

    int evaluate(const Rational& t) const {
        int v = sign;
        for (unsigned k : indices) {
            v *= rademacher(k, t);
        }
        return v;
    }

    /// Product of responses as a formal expression: r_k^2 = 1, so repeated
    /// indices cancel.
    friend Response operator*(const Response& a, const Response& b) {
        Response out{a.sign * b.sign, {}};
        std::vector<unsigned> x = a.indices;
        std::vector<unsigned> y = b.indices;
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out.indices));
        return out;
    }

    std::string str() const {
        std::string s = sign < 0 ? "-" : "";
        if (indices.empty()) {
            return s + "1";
        }
        for (std::size_t i = 0; i < indices.size(); ++i) {
            s += (i ? "*r" : "r") + std::to_string(indices[i]);
        }
        return s;
    }
};

/// Response function of every node in every regime.
class NodeAssignment {
public:
    /// The three-computer table with Rademacher indices (k1, k2, k3) in place
    /// of (1, 2, 3).
    static NodeAssignment table5(unsigned k1 = 1, unsigned k2 = 2, unsigned k3 = 3) {
        if (k1 == 0 || k2 == 0 || k3 == 0 || k1 == k2 || k1 == k3 || k2 == k3) {
            throw DomainError("rademacher indices must be distinct and at least 1");
        }
        NodeAssignment a;
        const Response node1_y{-1, {k1}};
        const Response node1_x{1, {k2, k3}};
        const Response node2_y{1, {k2}};
        const Response node2_x{1, {k1, k3}};
        const Response node3_x{1, {k1, k2}};
        a.at(1, Regime::yyx) = node1_y;
        a.at(1, Regime::yxy) = node1_y;
        a.at(1, Regime::xyy) = node1_x;
        a.at(1, Regime::xxx) = node1_x;
        a.at(2, Regime::yyx) = node2_y;
        a.at(2, Regime::yxy) = node2_x;
        a.at(2, Regime::xyy) = node2_y;
        a.at(2, Regime::xxx) = node2_x;
        a.at(3, Regime::yyx) = node3_x;
        a.at(3, Regime::yxy) = Response{1, {k3}};
        a.at(3, Regime::xyy) = Response{-1, {k3}};
        a.at(3, Regime::xxx) = node3_x;
        a.indices_ = {k1, k2, k3};
        return a;
    }

    const Response& at(int node, Regime r) const { return cells_.at(slot(node, r)); }
    Response& at(int node, Regime r) { return cells_.at(slot(node, r)); }

    /// Value of the node's response function; does not consult any window.
    int response(int node, Regime r, const Rational& t) const { return at(node, r).evaluate(t); }

    /// Formal product of the three nodes' responses in a regime.
    Response symbolic_product(Regime r) const { return at(1, r) * at(2, r) * at(3, r); }

    /// True when every regime's formal product is the constant it must be.
    bool satisfies_identities() const {
        return std::all_of(kRegimes.begin(), kRegimes.end(), [&](Regime r) {
            const Response p = symbolic_product(r);
            return p.indices.empty() && p.sign == expected_product(r);
        });
    }

    const std::array<unsigned, 3>& indices() const { return indices_; }

private:
    static std::size_t slot(int node, Regime r) {
        if (node < 1 || node > 3) {
            throw DomainError("node id must be 1, 2 or 3, got " + std::to_string(node));
        }
        return static_cast<std::size_t>(node - 1) * 4 + static_cast<std::size_t>(r);
    }

    std::array<Response, 12> cells_{};
    std::array<unsigned, 3> indices_{1, 2, 3};
};

/// Open interval (start, end) during which a regime is active.
struct Window {
    Regime regime = Regime::yyx;
    Rational start;
    Rational end;

    bool contains(const Rational& t) const { return start < t && t < end; }
    friend bool operator==(const Window&, const Window&) = default;
};

class Schedule {
public:
    explicit Schedule(std::vector<Window> windows) : windows_(std::move(windows)) {
        if (windows_.empty()) {
            throw DomainError("schedule needs at least one window");
        }
        std::array<bool, 4> seen{};
        for (std::size_t i = 0; i < windows_.size(); ++i) {
            const Window& w = windows_[i];
            if (w.start.sign() <= 0) {
                throw DomainError("schedule times must be positive");
            }
            if (!(w.start < w.end)) {
                throw DomainError(std::string("empty window for ") + to_string(w.regime));
            }
            if (i > 0 && w.start < windows_[i - 1].end) {
                throw DomainError(std::string("window for ") + to_string(w.regime) + " overlaps the previous one");
            }
            auto& flag = seen[static_cast<std::size_t>(w.regime)];
            if (flag) {
                throw DomainError(std::string("regime ") + to_string(w.regime) + " has more than one window");
            }
            flag = true;
        }
    }

    /// Windows of length 1 separated by gaps of 1/4, starting at t = 1.
    static Schedule standard() {
        std::vector<Window> w;
        Rational start(1);
        for (Regime r : kRegimes) {
            w.push_back({r, start, start + Rational(1)});
            start += Rational(5, 4);
        }
        return Schedule(std::move(w));
    }

    const std::vector<Window>& windows() const { return windows_; }

    std::optional<Window> window(Regime r) const {
        for (const auto& w : windows_) {
            if (w.regime == r) {
                return w;
            }
        }
        return std::nullopt;
    }

    const Window& require(Regime r) const {
        for (const auto& w : windows_) {
            if (w.regime == r) {
                return w;
            }
        }
        throw DomainError(std::string("schedule has no window for ") + to_string(r));
    }

    /// "yyx 1 2, yxy 9/4 13/4, ..."
    std::string str() const {
        std::string s;
        for (const auto& w : windows_) {
            if (!s.empty()) {
                s += ", ";
            }
            s += std::string(to_string(w.regime)) + " " + w.start.str() + " " + w.end.str();
        }
        return s;
    }

    static Schedule parse(std::string_view text) {
        std::vector<Window> windows;
        std::string item;
        std::istringstream all{std::string(text)};
        while (std::getline(all, item, ',')) {
            std::istringstream in(item);
            std::string regime, start, end, extra;
            if (!(in >> regime >> start >> end) || (in >> extra)) {
                throw DomainError("schedule entry must be '<regime> <start> <end>', got '" + item + "'");
            }
            windows.push_back({parse_regime(regime), Rational::parse(start), Rational::parse(end)});
        }
        return Schedule(std::move(windows));
    }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::vector<Window> windows_;
};

/// Output of `node` at time t; t must lie in the regime's window.
inline int node_output(const NodeAssignment& assignment, const Schedule& schedule, int node, Regime r,
                       const Rational& t) {
    if (!schedule.require(r).contains(t)) {
        throw DomainError("t = " + t.str() + " is outside the " + to_string(r) + " window");
    }
    return assignment.response(node, r, t);
}

struct TrialTriple {
    std::uint64_t trial = 0;
    Regime regime = Regime::yyx;
    Rational t;
    std::array<int, 3> outputs{1, 1, 1};

    int product() const { return outputs[0] * outputs[1] * outputs[2]; }
    friend bool operator==(const TrialTriple&, const TrialTriple&) = default;
};

/// Measurement times are start + length * m / 2^32 with m uniform in
/// [1, 2^32 - 1], so every time lies strictly inside the window.
inline constexpr std::uint64_t kTimeGrid = std::uint64_t{1} << 32U;

inline std::vector<Rational> draw_times(const Window& window, std::uint64_t samples, std::uint64_t seed) {
    rng::Engine eng = rng::make_engine(seed, "ghz.time", static_cast<std::uint64_t>(window.regime));
    const Rational length = window.end - window.start;
    const mpz_class grid(std::to_string(kTimeGrid));
    std::vector<Rational> times;
    times.reserve(samples);
    for (std::uint64_t i = 0; i < samples; ++i) {
        const std::uint64_t m = 1 + rng::uniform_below(eng, kTimeGrid - 1);
        const mpq_class frac(mpz_class(std::to_string(m)), grid);
        times.push_back(window.start + length * Rational(frac));
    }
    return times;
}

/// Runs one window, asking `evaluate(node, regime, t)` for each node's output.
template <class Evaluator>
std::vector<TrialTriple> run_window_with(const Schedule& schedule, Regime r, std::uint64_t samples,
                                         std::uint64_t seed, Evaluator&& evaluate, std::uint64_t first_trial = 0) {
    if (samples == 0) {
        throw DomainError("run_window: samples must be at least 1");
    }
    const Window& w = schedule.require(r);
    std::vector<TrialTriple> out;
    out.reserve(samples);
    std::uint64_t id = first_trial;
    for (const Rational& t : draw_times(w, samples, seed)) {
        TrialTriple trial{id++, r, t, {}};
        for (int node = 1; node <= 3; ++node) {
            trial.outputs[static_cast<std::size_t>(node - 1)] = evaluate(node, r, t);
        }
        out.push_back(std::move(trial));
    }
    return out;
}

inline std::vector<TrialTriple> run_window(const Schedule& schedule, Regime r, std::uint64_t samples,
                                           std::uint64_t seed,
                                           const NodeAssignment& assignment = NodeAssignment::table5(),
                                           std::uint64_t first_trial = 0) {
    return run_window_with(
        schedule, r, samples, seed,
        [&](int node, Regime regime, const Rational& t) { return node_output(assignment, schedule, node, regime, t); },
        first_trial);
}

/// All windows of the schedule in order, trial ids numbered consecutively.
inline std::vector<TrialTriple> run_experiment(const Schedule& schedule, std::uint64_t samples_per_regime,
                                               std::uint64_t seed,
                                               const NodeAssignment& assignment = NodeAssignment::table5()) {
    std::vector<TrialTriple> all;
    for (const auto& w : schedule.windows()) {
        auto part = run_window(schedule, w.regime, samples_per_regime, seed, assignment, all.size());
        std::move(part.begin(), part.end(), std::back_inserter(all));
    }
    return all;
}

/// Canonical text form, one trial per line: "<id> <regime> <num/den> o1 o2 o3 product".
inline std::string format_trials(const std::vector<TrialTriple>& trials) {
    auto sgn = [](int v) { return v > 0 ? "+1" : "-1"; };
    std::string s;
    for (const auto& tr : trials) {
        s += std::to_string(tr.trial) + " " + to_string(tr.regime) + " " + tr.t.fraction_str() + " " +
             sgn(tr.outputs[0]) + " " + sgn(tr.outputs[1]) + " " + sgn(tr.outputs[2]) + " " + sgn(tr.product()) +
             "\n";
    }
    return s;
}

struct ProductCounts {
    std::uint64_t trials = 0;
    std::uint64_t plus = 0;
    std::uint64_t minus = 0;
};

struct ProductTable {
    std::array<ProductCounts, 4> regimes{};

    const ProductCounts& operator[](Regime r) const { return regimes[static_cast<std::size_t>(r)]; }

    /// Every trial of every regime carries the required product.
    bool exact() const {
        for (Regime r : kRegimes) {
            const auto& c = (*this)[r];
            if ((expected_product(r) > 0 ? c.minus : c.plus) != 0) {
                return false;
            }
        }
        return true;
    }
};

inline ProductTable tabulate(const std::vector<TrialTriple>& trials) {
    ProductTable table;
    for (const auto& tr : trials) {
        auto& c = table.regimes[static_cast<std::size_t>(tr.regime)];
        ++c.trials;
        ++(tr.product() > 0 ? c.plus : c.minus);
    }
    return table;
}

/// Fraction of +1 outputs of `node` over trials of a single regime.
inline double marginal_balance(const std::vector<TrialTriple>& trials, int node) {
    if (trials.empty()) {
        throw InsufficientDataError("marginal_balance: no trials");
    }
    if (node < 1 || node > 3) {
        throw DomainError("node id must be 1, 2 or 3");
    }
    std::uint64_t plus = 0;
    for (const auto& tr : trials) {
        if (tr.regime != trials.front().regime) {
            throw DomainError("marginal_balance: trials span more than one regime");
        }
        plus += tr.outputs[static_cast<std::size_t>(node - 1)] > 0;
    }
    return static_cast<double>(plus) / static_cast<double>(trials.size());
}

/// Same node, same time, two different regimes.
struct ProbeReport {
    Rational t;
    int y3_yxy = 0;
    int y3_xyy = 0;
    int y1_yyx = 0;
    int y1_yxy = 0;

    int y3_product() const { return y3_yxy * y3_xyy; }
    int y1_product() const { return y1_yyx * y1_yxy; }
};

inline ProbeReport counterfactual_probe(const NodeAssignment& assignment, const Rational& t) {
    if (t.sign() <= 0) {
        throw DomainError("counterfactual_probe: t must be positive");
    }
    return {t, assignment.response(3, Regime::yxy, t), assignment.response(3, Regime::xyy, t),
            assignment.response(1, Regime::yyx, t), assignment.response(1, Regime::yxy, t)};
}

} // namespace corrlab::ghz
