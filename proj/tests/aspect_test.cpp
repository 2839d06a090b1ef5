#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "corrlab/aspect.hpp"
#include "corrlab/inequalities.hpp"

using namespace corrlab;
using namespace corrlab::aspect;

namespace {

const double kSqrt2 = std::sqrt(2.0);

StochasticMatrix qm_reference() {
    return qm_matrix({degrees(135), degrees(135), degrees(135), degrees(45)});
}

ChshQuad row_covariances(const StochasticMatrix& m) {
    return {Covariance(m.row_mean(SettingPair::ab)), Covariance(m.row_mean(SettingPair::ac)),
            Covariance(m.row_mean(SettingPair::db)), Covariance(m.row_mean(SettingPair::dc))};
}

} // namespace

TEST(QmMatrix, ReferenceAnglesGiveExpectedRows) {
    const StochasticMatrix m = qm_reference();
    const Rational s = qm_covariance(degrees(135)).value();
    EXPECT_EQ(m.row_mean(SettingPair::ab), s);
    EXPECT_EQ(m.row_mean(SettingPair::ac), s);
    EXPECT_EQ(m.row_mean(SettingPair::db), s);
    EXPECT_EQ(m.row_mean(SettingPair::dc), -s);
    EXPECT_NEAR(s.to_double(), 1 / kSqrt2, 1e-9);
}

TEST(QmMatrix, DegenerateAngles) {
    const auto right = qm_matrix({degrees(90), degrees(90), degrees(90), degrees(90)});
    for (const auto& row : right.rows()) {
        for (const auto& p : row) {
            EXPECT_EQ(p, Rational(1, 4));
        }
    }
    const auto straight = qm_matrix({degrees(180), degrees(180), degrees(180), degrees(180)});
    for (const auto& row : straight.rows()) {
        EXPECT_EQ(row[0], Rational(1, 2));
        EXPECT_EQ(row[1], Rational(0));
        EXPECT_EQ(row[2], Rational(0));
        EXPECT_EQ(row[3], Rational(1, 2));
    }
}

TEST(StochasticMatrix, RejectsInvalidRows) {
    using Row = StochasticMatrix::Row;
    const Rational q(1, 4), h(1, 2);
    EXPECT_THROW(StochasticMatrix({Row{q, q, q, q}, Row{q, q, q, q}, Row{q, q, q, q}, Row{h, h, h, h}}),
                 DomainError);
    EXPECT_THROW(StochasticMatrix({Row{q, q, q, q}, Row{q, q, q, q}, Row{q, q, q, q},
                                   Row{Rational(-1, 4), h, h, h}}),
                 DomainError);
}

TEST(SampleDelayedChoice, UniformMatrixIsUniform) {
    constexpr std::uint64_t n = 1000000;
    const auto records = sample_delayed_choice(StochasticMatrix::uniform(), n, 42);
    ASSERT_EQ(records.size(), n);
    std::array<std::uint64_t, 4> rows{};
    std::map<std::pair<int, int>, std::uint64_t> cells;
    for (const auto& r : records) {
        ++rows[static_cast<std::size_t>(r.row)];
        ++cells[{r.a, r.b}];
    }
    const double sd = std::sqrt(n * 0.25 * 0.75);
    for (auto c : rows) {
        EXPECT_LE(std::fabs(static_cast<double>(c) - n / 4.0), 5 * sd);
    }
    for (const auto& [cell, c] : cells) {
        EXPECT_LE(std::fabs(static_cast<double>(c) - n / 4.0), 5 * sd);
    }
}

TEST(SampleDelayedChoice, DeterministicRowsAlwaysHitTheirCell) {
    using Row = StochasticMatrix::Row;
    const Rational one(1), z(0);
    const StochasticMatrix m({Row{one, z, z, z}, Row{z, one, z, z}, Row{z, z, one, z}, Row{z, z, z, one}});
    const auto records = sample_delayed_choice(m, 1000000, 9);
    for (const auto& r : records) {
        const auto cell = kPairCells[static_cast<std::size_t>(r.row)];
        ASSERT_EQ(r.a, cell.first);
        ASSERT_EQ(r.b, cell.second);
    }
}

TEST(SampleDelayedChoice, SeedDeterminismAndShardIndependence) {
    const auto m = qm_reference();
    const auto a = sample_delayed_choice(m, 300000, 1234);
    const auto b = sample_delayed_choice(m, 300000, 1234);
    const auto sharded = sample_delayed_choice(m, 300000, 1234, 3);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, sharded);
    const auto other = sample_delayed_choice(m, 300000, 1235);
    EXPECT_NE(a, other);
    EXPECT_THROW(sample_delayed_choice(m, 0, 1), DomainError);
}

TEST(EstimateGamma, QmMatrixNearTwoRootTwo) {
    const auto records = sample_delayed_choice(qm_reference(), 1000000, 2024);
    const GammaEstimate est = estimate_gamma(records);
    EXPECT_LE(std::fabs(est.gamma - 2 * kSqrt2), 5 * est.standard_error);
    EXPECT_GT(est.gamma, 2.0);
    EXPECT_GT(est.standard_error, 0.0);
}

TEST(EstimateGamma, GammaMaxMatrixReachesFour) {
    EXPECT_EQ(StochasticMatrix::gamma_max().population_gamma(), Rational(4));
    const auto est = estimate_gamma(sample_delayed_choice(StochasticMatrix::gamma_max(), 100000, 7));
    EXPECT_EQ(est.gamma, 4.0);
    EXPECT_EQ(est.standard_error, 0.0);
}

TEST(EstimateGamma, UniformMatrixNearZero) {
    const auto est = estimate_gamma(sample_delayed_choice(StochasticMatrix::uniform(), 200000, 8));
    EXPECT_LE(std::fabs(est.gamma), 5 * est.standard_error);
}

TEST(EstimateGamma, EmptyRowNamesTheRow) {
    std::vector<RunRecord> records{{SettingPair::ab, 1, 1, 0}, {SettingPair::ac, 1, -1, 1}, {SettingPair::db, -1, -1, 2}};
    try {
        estimate_gamma(records);
        FAIL() << "expected InsufficientDataError";
    } catch (const InsufficientDataError& e) {
        EXPECT_NE(std::string(e.what()).find("dc"), std::string::npos);
    }
}

TEST(EstimateGamma, HandComputedSmallSample) {
    std::vector<RunRecord> records{{SettingPair::ab, 1, 1, 0},   {SettingPair::ab, 1, -1, 1},
                                   {SettingPair::ac, 1, 1, 2},   {SettingPair::db, -1, -1, 3},
                                   {SettingPair::dc, -1, 1, 4}};
    const auto est = estimate_gamma(records);
    // means: ab 0, ac 1, db 1, dc -1 -> gamma 0 + 1 + 1 + 1 = 3
    EXPECT_EQ(est.gamma, 3.0);
    // only ab has n > 1: sample variance 2/1 over n = 2 -> se = 1
    EXPECT_DOUBLE_EQ(est.standard_error, 1.0);
}

// Population identity: for random stochastic matrices the estimate tracks
// chsh_value of the row covariances.
TEST(AspectProperties, PopulationGammaMatchesChshValue) {
    rng::Engine eng = rng::make_engine(77, "test.matrices");
    for (int trial = 0; trial < 12; ++trial) {
        std::array<StochasticMatrix::Row, 4> rows;
        for (auto& row : rows) {
            std::array<long, 4> w{};
            long total = 0;
            for (auto& x : w) {
                total += (x = static_cast<long>(rng::uniform_below(eng, 20)));
            }
            if (total == 0) {
                w[0] = total = 1;
            }
            for (std::size_t k = 0; k < 4; ++k) {
                row[k] = Rational(w[k], total);
            }
        }
        const StochasticMatrix m(rows);
        ASSERT_EQ(m.population_gamma(), chsh_value(row_covariances(m)));
        const auto est = estimate_gamma(sample_delayed_choice(m, 200000, 500 + trial));
        const double pop = m.population_gamma().to_double();
        if (est.standard_error == 0.0) {
            ASSERT_EQ(est.gamma, pop);
        } else {
            ASSERT_LE(std::fabs(est.gamma - pop), 5 * est.standard_error);
        }
    }
}

TEST(SourceModel, Validation) {
    EXPECT_THROW(SourceModel({Rational(1, 2)}, {Responses{}}), DomainError);
    EXPECT_THROW(SourceModel({Rational(1), Rational(0)}, {Responses{}, Responses{}}), DomainError);
    EXPECT_THROW(SourceModel({Rational(1)}, {Responses{1, 2, 1, 1}}), DomainError);
    EXPECT_THROW(SourceModel({Rational(1)}, {}), DomainError);
}

TEST(SimulateSourceModel, ConstantResponsesGiveExactlyTwo) {
    const SourceModel model({Rational(1)}, {Responses{1, 1, 1, 1}});
    const auto est = simulate_source_model(model, 100000, 3);
    EXPECT_EQ(est.gamma, 2.0);
    EXPECT_EQ(est.standard_error, 0.0);
}

TEST(SimulateSourceModel, TwoLambdaModelGivesTwo) {
    // Under lambda_1 all responses are +1, under lambda_2 all are -1: every
    // product is +1, so each row mean is 1 and gamma = 1 + 1 + 1 - 1.
    const SourceModel model({Rational(1, 2), Rational(1, 2)}, {Responses{1, 1, 1, 1}, Responses{-1, -1, -1, -1}});
    EXPECT_EQ(model.population_gamma(), Rational(2));
    EXPECT_EQ(simulate_source_model(model, 100000, 4).gamma, 2.0);
}

TEST(SimulateSourceModel, RandomModelsRespectTheBound) {
    rng::Engine eng = rng::make_engine(31337, "test.source-models");
    for (int k = 0; k < 20; ++k) {
        const SourceModel model = random_source_model(eng);
        ASSERT_LE(model.population_gamma().abs(), Rational(2));
        const auto est = simulate_source_model(model, 100000, 1000 + k);
        ASSERT_LE(std::fabs(est.gamma), 2 + 5 * est.standard_error) << "model " << k;
    }
}

TEST(SimulateSourceModel, SettingsAreBalanced) {
    const SourceModel model({Rational(1, 3), Rational(2, 3)}, {Responses{1, -1, 1, -1}, Responses{-1, 1, 1, 1}});
    const auto records = sample_source_model(model, 400000, 12);
    std::array<std::uint64_t, 4> rows{};
    std::array<std::uint64_t, 2> lambdas{};
    for (const auto& r : records) {
        ++rows[static_cast<std::size_t>(r.row)];
        ++lambdas[r.lambda];
    }
    const double n = 400000;
    for (auto c : rows) {
        EXPECT_LE(std::fabs(c - n / 4), 5 * std::sqrt(n * 0.25 * 0.75));
    }
    EXPECT_LE(std::fabs(lambdas[0] - n / 3), 5 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
    EXPECT_EQ(records, sample_source_model(model, 400000, 12, 4));
}

TEST(ReorderDemonstration, EveryCompleteQuadrupleIsPlusMinusTwo) {
    rng::Engine eng = rng::make_engine(5, "test.reorder");
    for (int k = 0; k < 10; ++k) {
        const SourceModel model = random_source_model(eng);
        const ReorderReport rep = reorder_demonstration(model, 10000, 70 + k);
        EXPECT_EQ(rep.exceptions, 0U);
        EXPECT_EQ(rep.plus_two + rep.minus_two, rep.quadruples);
        EXPECT_GT(rep.quadruples, 0U);
        EXPECT_EQ(rep.records, 10000U);
        EXPECT_EQ(rep.discarded + 4 * rep.quadruples, rep.records);
    }
}

TEST(ReorderDemonstration, TinyRunIsMostlyDiscarded) {
    const SourceModel model({Rational(1)}, {Responses{1, -1, 1, 1}});
    const ReorderReport rep = reorder_demonstration(model, 3, 1);
    EXPECT_EQ(rep.quadruples, 0U);
    EXPECT_EQ(rep.discarded, 3U);
}

TEST(ReorderDemonstration, CountsMatchIndependentRecount) {
    const SourceModel model({Rational(1)}, {Responses{1, 1, -1, 1}});
    for (std::uint64_t trials : {4ULL, 400ULL, 4001ULL, 65536ULL + 17}) {
        const auto records = sample_source_model(model, trials, 99);
        const ReorderReport rep = reorder_records(records, 1);
        // Recount: complete quadruples are limited by the rarest setting pair.
        std::array<std::uint64_t, 4> per_row{};
        for (const auto& r : records) {
            ++per_row[static_cast<std::size_t>(r.row)];
        }
        const std::uint64_t q = *std::min_element(per_row.begin(), per_row.end());
        EXPECT_EQ(rep.quadruples, q);
        EXPECT_EQ(rep.discarded, trials - 4 * q);
        EXPECT_EQ(rep.groups[0].quadruples, q);
        // gamma is the same for every quadruple of a single lambda value
        EXPECT_EQ(rep.minus_two + rep.plus_two, q);
        EXPECT_TRUE(rep.plus_two == 0 || rep.minus_two == 0);
    }
    // Perfectly balanced arrivals leave nothing behind.
    std::vector<SourceRecord> balanced;
    for (std::uint64_t t = 0; t < 40; ++t) {
        balanced.push_back({0, kSettingPairs[t % 4], 1, 1, t});
    }
    EXPECT_EQ(reorder_records(balanced, 1).discarded, 0U);
}
