#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iterator>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "corrlab/dist.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/rational.hpp"
#include "corrlab/rng.hpp"

namespace corrlab::aspect {

/// Rows of the sampling table, one per pair of settings.
enum class SettingPair : std::uint8_t { ab = 0, ac = 1, db = 2, dc = 3 };

inline constexpr std::array<SettingPair, 4> kSettingPairs{SettingPair::ab, SettingPair::ac, SettingPair::db,
                                                          SettingPair::dc};

inline const char* to_string(SettingPair p) {
    static constexpr std::array<const char*, 4> names{"ab", "ac", "db", "dc"};
    return names[static_cast<std::size_t>(p)];
}

/// Sign with which a row enters gamma.
inline int gamma_sign(SettingPair p) { return p == SettingPair::dc ? -1 : 1; }

/// 4x4 row-stochastic matrix: rows ab, ac, db, dc; columns in pair-cell
/// order (+,+), (+,-), (-,+), (-,-).
class StochasticMatrix {
public:
    using Row = std::array<Rational, 4>;

    explicit StochasticMatrix(std::array<Row, 4> rows) : rows_(std::move(rows)) {
        for (std::size_t r = 0; r < 4; ++r) {
            Rational total;
            for (const auto& p : rows_[r]) {
                if (p.sign() < 0) {
                    throw DomainError(std::string("negative probability in row ") + to_string(kSettingPairs[r]));
                }
                total += p;
            }
            if (total != Rational(1)) {
                throw DomainError(std::string("row ") + to_string(kSettingPairs[r]) + " sums to " + total.str());
            }
        }
    }

    static StochasticMatrix from_covariances(const std::array<Covariance, 4>& sigmas) {
        std::array<Row, 4> rows;
        for (std::size_t r = 0; r < 4; ++r) {
            rows[r] = pair_table_from_covariance(sigmas[r]).table();
        }
        return StochasticMatrix(rows);
    }

    static StochasticMatrix uniform() {
        const Rational q(1, 4);
        return StochasticMatrix({Row{q, q, q, q}, Row{q, q, q, q}, Row{q, q, q, q}, Row{q, q, q, q}});
    }

    /// Rows ab, ac, db perfectly correlated, row dc perfectly anti-correlated:
    /// every row mean is +/-1 in the direction gamma rewards, so gamma = 4.
    static StochasticMatrix gamma_max() {
        const Rational h(1, 2), z(0);
        const Row same{h, z, z, h};
        const Row opposite{z, h, h, z};
        return StochasticMatrix({same, same, same, opposite});
    }

    const Row& row(SettingPair p) const { return rows_[static_cast<std::size_t>(p)]; }
    const std::array<Row, 4>& rows() const { return rows_; }

    /// E(product) of one row.
    Rational row_mean(SettingPair p) const {
        const Row& r = row(p);
        return r[0] - r[1] - r[2] + r[3];
    }

    /// Expected value of gamma under any sampling that visits every row.
    Rational population_gamma() const {
        return row_mean(SettingPair::ab) + row_mean(SettingPair::ac) + row_mean(SettingPair::db) -
               row_mean(SettingPair::dc);
    }

private:
    std::array<Row, 4> rows_;
};

/// Rows are pair_table_from_covariance(qm_covariance(angle)) for the four
/// setting pairs (ab, ac, db, dc).
inline StochasticMatrix qm_matrix(const std::array<double, 4>& angles_radians, double tolerance = kDefaultPrecision) {
    std::array<Covariance, 4> sigmas;
    for (std::size_t r = 0; r < 4; ++r) {
        sigmas[r] = qm_covariance(angles_radians[r], tolerance);
    }
    return StochasticMatrix::from_covariances(sigmas);
}

struct RunRecord {
    SettingPair row = SettingPair::ab;
    int a = 1;
    int b = 1;
    std::uint64_t trial = 0;

    int product() const { return a * b; }
    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct GammaEstimate {
    std::array<double, 4> means{};
    std::array<std::uint64_t, 4> counts{};
    std::array<std::int64_t, 4> sums{}; // sum of products per row
    double gamma = 0.0;
    double standard_error = 0.0;

    friend bool operator==(const GammaEstimate&, const GammaEstimate&) = default;
};

/// Running per-row tallies of +/-1 products; merging is exact.
struct RowTally {
    std::array<std::uint64_t, 4> counts{};
    std::array<std::int64_t, 4> sums{};

    void add(SettingPair p, int product) {
        const auto r = static_cast<std::size_t>(p);
        ++counts[r];
        sums[r] += product;
    }
    void merge(const RowTally& o) {
        for (std::size_t r = 0; r < 4; ++r) {
            counts[r] += o.counts[r];
            sums[r] += o.sums[r];
        }
    }
};

/// gamma = mean(ab) + mean(ac) + mean(db) - mean(dc). The standard error
/// propagates each row's sample variance assuming independent rows.
inline GammaEstimate estimate_gamma(const RowTally& tally) {
    GammaEstimate est;
    double var = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
        const std::uint64_t n = tally.counts[r];
        if (n == 0) {
            throw InsufficientDataError(std::string("row ") + to_string(kSettingPairs[r]) + " has no trials");
        }
        const double mean = static_cast<double>(tally.sums[r]) / static_cast<double>(n);
        est.counts[r] = n;
        est.sums[r] = tally.sums[r];
        est.means[r] = mean;
        est.gamma += gamma_sign(kSettingPairs[r]) * mean;
        if (n > 1) {
            // products are +/-1, so the sum of squares is n
            const double sample_var =
                std::max(0.0, (static_cast<double>(n) - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
            var += sample_var / static_cast<double>(n);
        }
    }
    est.standard_error = std::sqrt(var);
    return est;
}

inline GammaEstimate estimate_gamma(std::span<const RunRecord> records) {
    RowTally tally;
    for (const auto& rec : records) {
        tally.add(rec.row, rec.product());
    }
    return estimate_gamma(tally);
}

/// Trials are generated in blocks of this many, each block from its own
/// derived streams, so sharded and sequential runs agree record for record.
inline constexpr std::uint64_t kBlockTrials = 1U << 16U;

namespace detail {

template <class BlockFn>
void for_each_block(std::uint64_t trials, unsigned workers, BlockFn&& fn) {
    const std::uint64_t blocks = (trials + kBlockTrials - 1) / kBlockTrials;
    workers = std::max(1U, workers);
    if (workers == 1 || blocks <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) {
            fn(b, b * kBlockTrials, std::min(trials, (b + 1) * kBlockTrials));
        }
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t b = w; b < blocks; b += workers) {
                fn(b, b * kBlockTrials, std::min(trials, (b + 1) * kBlockTrials));
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

inline std::size_t pick_cell(const std::array<double, 4>& cdf, double u) {
    for (std::size_t k = 0; k < 3; ++k) {
        if (u < cdf[k]) {
            return k;
        }
    }
    return 3;
}

} // namespace detail

/// Delayed-choice sampling: each trial picks a row uniformly, then one
/// outcome from that row's distribution. Deterministic in (matrix, trials,
/// seed) and independent of `workers`.
inline std::vector<RunRecord> sample_delayed_choice(const StochasticMatrix& matrix, std::uint64_t trials,
                                                    std::uint64_t seed, unsigned workers = 1) {
    if (trials == 0) {
        throw DomainError("sample_delayed_choice: trials must be at least 1");
    }
    std::array<std::array<double, 4>, 4> cdf{};
    for (std::size_t r = 0; r < 4; ++r) {
        Rational acc;
        for (std::size_t k = 0; k < 4; ++k) {
            acc += matrix.rows()[r][k];
            cdf[r][k] = acc.to_double();
        }
    }
    std::vector<RunRecord> out(trials);
    detail::for_each_block(trials, workers, [&](std::uint64_t block, std::uint64_t begin, std::uint64_t end) {
        rng::Engine row_eng = rng::make_engine(seed, "aspect.row", block);
        rng::Engine outcome_eng = rng::make_engine(seed, "aspect.outcome", block);
        for (std::uint64_t t = begin; t < end; ++t) {
            const auto r = static_cast<std::size_t>(rng::uniform_below(row_eng, 4));
            const std::size_t cell = detail::pick_cell(cdf[r], rng::uniform01(outcome_eng));
            out[t] = RunRecord{kSettingPairs[r], kPairCells[cell].first, kPairCells[cell].second, t};
        }
    });
    return out;
}

/// Deterministic responses of one hidden-variable value.
struct Responses {
    int a = 1; // A(a, lambda)
    int d = 1; // A(d, lambda)
    int b = 1; // B(b, lambda)
    int c = 1; // B(c, lambda)

    int alice(SettingPair p) const { return (p == SettingPair::ab || p == SettingPair::ac) ? a : d; }
    int bob(SettingPair p) const { return (p == SettingPair::ab || p == SettingPair::db) ? b : c; }
    /// a*b + a*c + d*b - d*c, always +/-2.
    int gamma() const { return a * b + a * c + d * b - d * c; }
};

/// Source-parameter model: lambda_s with probability p_s > 0, responses
/// depending only on the local setting and lambda.
class SourceModel {
public:
    SourceModel(std::vector<Rational> probabilities, std::vector<Responses> responses)
        : probabilities_(std::move(probabilities)), responses_(std::move(responses)) {
        if (probabilities_.empty() || probabilities_.size() != responses_.size()) {
            throw DomainError("source model needs one response set per lambda value");
        }
        Rational total;
        for (const auto& p : probabilities_) {
            if (p.sign() <= 0) {
                throw DomainError("source model probabilities must be positive, got " + p.str());
            }
            total += p;
        }
        if (total != Rational(1)) {
            throw DomainError("source model probabilities sum to " + total.str());
        }
        for (const auto& r : responses_) {
            for (int v : {r.a, r.d, r.b, r.c}) {
                if (v != 1 && v != -1) {
                    throw DomainError("source model responses must be +1 or -1");
                }
            }
        }
    }

    std::size_t support() const { return probabilities_.size(); }
    const std::vector<Rational>& probabilities() const { return probabilities_; }
    const std::vector<Responses>& responses() const { return responses_; }

    Rational population_gamma() const {
        Rational g;
        for (std::size_t s = 0; s < support(); ++s) {
            g += probabilities_[s] * Rational(responses_[s].gamma());
        }
        return g;
    }

private:
    std::vector<Rational> probabilities_;
    std::vector<Responses> responses_;
};

/// Random model with 1..max_support lambda values, integer weights in
/// 1..100 and uniformly random responses.
inline SourceModel random_source_model(rng::Engine& eng, std::size_t max_support = 8) {
    const std::size_t m = 1 + rng::uniform_below(eng, max_support);
    std::vector<long> weights(m);
    long total = 0;
    for (auto& w : weights) {
        total += (w = 1 + static_cast<long>(rng::uniform_below(eng, 100)));
    }
    std::vector<Rational> probs;
    std::vector<Responses> responses;
    auto sign = [&] { return rng::uniform_below(eng, 2) == 0 ? 1 : -1; };
    for (long w : weights) {
        probs.emplace_back(w, total);
        Responses r;
        r.a = sign();
        r.d = sign();
        r.b = sign();
        r.c = sign();
        responses.push_back(r);
    }
    return SourceModel(std::move(probs), std::move(responses));
}

struct SourceRecord {
    std::size_t lambda = 0;
    SettingPair row = SettingPair::ab;
    int a = 1;
    int b = 1;
    std::uint64_t trial = 0;

    int product() const { return a * b; }
    friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

/// Per trial: lambda from p, then settings chosen independently and
/// uniformly on each side, then the two local responses.
inline std::vector<SourceRecord> sample_source_model(const SourceModel& model, std::uint64_t trials,
                                                     std::uint64_t seed, unsigned workers = 1) {
    if (trials == 0) {
        throw DomainError("sample_source_model: trials must be at least 1");
    }
    std::vector<double> cdf;
    Rational acc;
    for (const auto& p : model.probabilities()) {
        acc += p;
        cdf.push_back(acc.to_double());
    }
    std::vector<SourceRecord> out(trials);
    detail::for_each_block(trials, workers, [&](std::uint64_t block, std::uint64_t begin, std::uint64_t end) {
        rng::Engine lambda_eng = rng::make_engine(seed, "source.lambda", block);
        rng::Engine alice_eng = rng::make_engine(seed, "source.setting.alice", block);
        rng::Engine bob_eng = rng::make_engine(seed, "source.setting.bob", block);
        for (std::uint64_t t = begin; t < end; ++t) {
            const double u = rng::uniform01(lambda_eng);
            std::size_t s = 0;
            while (s + 1 < cdf.size() && u >= cdf[s]) {
                ++s;
            }
            const bool alice_d = rng::uniform_below(alice_eng, 2) == 1;
            const bool bob_c = rng::uniform_below(bob_eng, 2) == 1;
            const SettingPair row = alice_d ? (bob_c ? SettingPair::dc : SettingPair::db)
                                            : (bob_c ? SettingPair::ac : SettingPair::ab);
            const Responses& resp = model.responses()[s];
            out[t] = SourceRecord{s, row, resp.alice(row), resp.bob(row), t};
        }
    });
    return out;
}

inline GammaEstimate estimate_gamma(std::span<const SourceRecord> records) {
    RowTally tally;
    for (const auto& rec : records) {
        tally.add(rec.row, rec.product());
    }
    return estimate_gamma(tally);
}

inline GammaEstimate simulate_source_model(const SourceModel& model, std::uint64_t trials, std::uint64_t seed,
                                           unsigned workers = 1) {
    return estimate_gamma(std::span<const SourceRecord>(sample_source_model(model, trials, seed, workers)));
}

struct LambdaGroup {
    std::size_t lambda = 0;
    std::uint64_t records = 0;
    std::uint64_t quadruples = 0;
    std::uint64_t discarded = 0;
};

/// Result of regrouping source-model records into complete setting
/// quadruples that share one lambda value.
struct ReorderReport {
    std::uint64_t records = 0;
    std::uint64_t quadruples = 0;
    std::uint64_t plus_two = 0;
    std::uint64_t minus_two = 0;
    std::uint64_t exceptions = 0; // quadruples whose gamma is not +/-2
    std::uint64_t discarded = 0;  // records left in incomplete quadruples
    double mean_gamma = 0.0;      // average over complete quadruples
    std::vector<LambdaGroup> groups;
    static constexpr const char* policy =
        "greedy arrival-order grouping per lambda; incomplete quadruples discarded";

    bool all_plus_minus_two() const { return exceptions == 0; }
};

/// Each record joins the oldest open quadruple of its lambda that still
/// lacks its setting pair, or opens a new one. Quadruples still open at the
/// end are discarded.
inline ReorderReport reorder_records(std::span<const SourceRecord> records, std::size_t support) {
    struct Open {
        std::array<const SourceRecord*, 4> slot{};
        int filled = 0;
    };
    std::vector<std::deque<Open>> open(support);
    ReorderReport rep;
    rep.records = records.size();
    rep.groups.resize(support);
    std::int64_t gamma_sum = 0;
    for (std::size_t s = 0; s < support; ++s) {
        rep.groups[s].lambda = s;
    }
    for (const auto& rec : records) {
        if (rec.lambda >= support) {
            throw DomainError("record lambda outside model support");
        }
        ++rep.groups[rec.lambda].records;
        const auto r = static_cast<std::size_t>(rec.row);
        auto& queue = open[rec.lambda];
        auto it = std::find_if(queue.begin(), queue.end(), [&](const Open& q) { return q.slot[r] == nullptr; });
        if (it == queue.end()) {
            queue.emplace_back();
            it = std::prev(queue.end());
        }
        it->slot[r] = &rec;
        if (++it->filled == 4) {
            int gamma = 0;
            for (std::size_t k = 0; k < 4; ++k) {
                gamma += gamma_sign(kSettingPairs[k]) * it->slot[k]->product();
            }
            ++rep.quadruples;
            ++rep.groups[rec.lambda].quadruples;
            gamma_sum += gamma;
            if (gamma == 2) {
                ++rep.plus_two;
            } else if (gamma == -2) {
                ++rep.minus_two;
            } else {
                ++rep.exceptions;
            }
            queue.erase(it);
        }
    }
    for (std::size_t s = 0; s < support; ++s) {
        auto& g = rep.groups[s];
        g.discarded = g.records - 4 * g.quadruples;
        rep.discarded += g.discarded;
    }
    rep.mean_gamma = rep.quadruples ? static_cast<double>(gamma_sum) / static_cast<double>(rep.quadruples) : 0.0;
    return rep;
}

inline ReorderReport reorder_demonstration(const SourceModel& model, std::uint64_t trials, std::uint64_t seed,
                                           unsigned workers = 1) {
    const auto records = sample_source_model(model, trials, seed, workers);
    return reorder_records(records, model.support());
}

} // namespace corrlab::aspect
