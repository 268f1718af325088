#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mipcr/pca.hpp"
#include "mipcr/simulation.hpp"
#include "test_support.hpp"

using namespace mipcr;

namespace {

double corr(const Matrix& m, Index a, Index b) {
    Matrix pair(m.rows(), 2);
    pair << m.col(a), m.col(b);
    return test::brute_correlation(pair)(0, 1);
}

double sample_var(const Vector& v) { return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1); }

}  // namespace

TEST_CASE("condition layout and validation") {
    SimulationCondition c;
    CHECK(c.columns() == 56);
    c.items_per_other_factor = 39;
    CHECK(c.columns() == 242);
    for (auto [pn, count] : std::vector<std::pair<double, int>>{{0.0, 0}, {1.0 / 3, 2}, {2.0 / 3, 4}, {1.0, 6}}) {
        c.pn = pn;
        CHECK_NOTHROW(c.validate());
        CHECK(c.low_factors() == count);
    }
    c.pn = 0.25;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.pn = 0;
    c.loading = 1.0;
    CHECK_THROWS_AS(c.validate(), InputError);
    SimulationCondition d;
    CHECK(d.id() == "pn=0,ncat=inf");
    d.n_categories = 2;
    d.pn = 1;
    CHECK(d.id() == "pn=1,ncat=2");
}

TEST_CASE("factor correlation structure") {
    SimulationCondition c;
    c.pn = 1.0 / 3;
    const Matrix psi = factor_correlation(c);
    REQUIRE(psi.rows() == 7);
    CHECK(psi(0, 1) == 0.7);
    CHECK(psi(1, 4) == 0.7);
    CHECK(psi(0, 5) == 0.1);
    CHECK(psi(2, 6) == 0.1);
    CHECK(psi(5, 6) == 0.1);
    CHECK((psi.diagonal().array() == 1.0).all());
}

TEST_CASE("generated items reproduce the factor model correlations") {
    SimulationCondition c;
    Rng rng(1);
    const auto g = generate_complete(c, rng);
    REQUIRE(g.values.cols() == 56);
    CHECK(std::abs(corr(g.values, 0, 1) - 0.7225) < 0.05);
    CHECK(std::abs(corr(g.values, 4, 7) - 0.7225) < 0.05);
    CHECK(std::abs(corr(g.values, 0, 8) - 0.7225 * 0.7) < 0.06);
    CHECK(std::abs(corr(g.values, 8, 20) - 0.7225 * 0.7) < 0.06);
    for (Index j = 0; j < g.values.cols(); ++j) {
        CHECK(std::abs(g.values.col(j).mean() - 5.0) < 0.01);
        CHECK(std::abs(sample_var(g.values.col(j)) - 6.5) < 1e-9);
    }
    CHECK(g.roles[3] == ColumnRole::analysis_target);
    CHECK(g.roles[4] == ColumnRole::mar_predictor);
    CHECK(g.roles[7] == ColumnRole::mar_predictor);
    CHECK(g.roles[8] == ColumnRole::auxiliary);
}

TEST_CASE("pn = 1 weakens cross-factor correlations") {
    SimulationCondition c;
    c.pn = 1;
    Rng rng(2);
    const auto g = generate_complete(c, rng);
    CHECK(std::abs(corr(g.values, 0, 8) - 0.7225 * 0.1) < 0.1);
    CHECK(std::abs(corr(g.values, 0, 1) - 0.7225) < 0.05);
}

TEST_CASE("property: seven leading eigenvalues separate from the noise floor") {
    SimulationCondition c;
    int exact = 0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r) {
        Rng rng(100 + static_cast<std::uint64_t>(r));
        const Vector s = correlation_spectrum(generate_complete(c, rng).values);
        if ((s.array() > 1.5).count() == 7) ++exact;
    }
    CHECK(exact >= 38);
}

TEST_CASE("coarsening") {
    Rng rng(3);
    const Vector x = test::random_matrix(501, 1, rng).col(0);
    const Vector two = coarsen_column(x, 2);
    CHECK(std::abs((two.array() == 1.0).count() - 250) <= 1);
    for (Index i = 0; i < x.size(); ++i)
        for (Index j = 0; j < x.size(); ++j)
            if (x(i) <= x(j)) REQUIRE(two(i) <= two(j));
    const Vector five = coarsen_column(x, 5);
    CHECK(five.minCoeff() == 1);
    CHECK(five.maxCoeff() == 5);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs((five.array() == k).count() - 100) <= 1);

    Vector ties(6);
    ties << 1, 1, 1, 2, 2, 3;
    const Vector tied = coarsen_column(ties, 3);
    CHECK(tied(0) == tied(2));
    CHECK(tied(3) == tied(4));
}

TEST_CASE("coarsen leaves targets and the nCat = inf case alone") {
    SimulationCondition c;
    Rng rng(4);
    const auto g = generate_complete(c, rng);
    CHECK(coarsen(g.values, g.roles, std::nullopt) == g.values);
    const Matrix coarse = coarsen(g.values, g.roles, 2);
    CHECK(coarse.leftCols(4) == g.values.leftCols(4));
    CHECK(((coarse.rightCols(52).array() == 1.0) || (coarse.rightCols(52).array() == 2.0)).all());
}

TEST_CASE("property: coarsening attenuates correlations") {
    SimulationCondition c;
    Rng rng(5);
    const auto g = generate_complete(c, rng);
    const Matrix coarse = coarsen(g.values, g.roles, 3);
    const Matrix rc = correlation_matrix(g.values);
    const Matrix rd = correlation_matrix(coarse);
    CHECK(((rd.array().abs() - rc.array().abs()) <= 0.03).all());
}

TEST_CASE("intercept calibration") {
    CHECK(std::abs(calibrate_intercept(Vector::Zero(50), 0.5)) < 1e-8);
    CHECK(std::abs(calibrate_intercept(Vector::Zero(50), 0.3) - std::log(0.3 / 0.7)) < 1e-8);
    CHECK(std::abs(std::log(0.3 / 0.7) + 0.8473) < 1e-4);
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector s = 2.0 * test::random_matrix(300, 1, rng).col(0);
        const double target = 0.05 + 0.045 * trial;
        const double b = calibrate_intercept(s, target);
        double mean = 0;
        for (Index i = 0; i < s.size(); ++i) mean += 1.0 / (1.0 + std::exp(-(b + s(i))));
        CHECK(std::abs(mean / 300.0 - target) < 1e-6);
    }
}

TEST_CASE("amputation is right-tail MAR on the targets only") {
    SimulationCondition c;
    Rng rng(7);
    const auto g = generate_complete(c, rng);
    const auto a = ampute(g.values, g.values, g.roles, 0.3, rng);
    for (Index j = 4; j < 56; ++j) CHECK(a.data.observed_count(j) == 500);
    const Vector score = missingness_scores(g.values, g.roles);
    CHECK(std::abs(score.mean()) < 1e-12);
    CHECK(std::abs(sample_var(score) - 1.0) < 1e-12);
    for (Index j = 0; j < 4; ++j) {
        const double prop = 1.0 - static_cast<double>(a.data.observed_count(j)) / 500.0;
        CHECK(std::abs(prop - 0.3) < 0.04);
        double miss_sum = 0, obs_sum = 0;
        Index miss = 0;
        for (Index i = 0; i < 500; ++i) {
            if (a.data.observed(i, j)) {
                obs_sum += score(i);
            } else {
                miss_sum += score(i);
                ++miss;
            }
        }
        CHECK(miss_sum / static_cast<double>(miss) > obs_sum / static_cast<double>(500 - miss));
    }
    CHECK((a.scores - score).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("amputation uses the continuous predictors even on coarsened data") {
    SimulationCondition c;
    Rng data_rng(8);
    const auto g = generate_complete(c, data_rng);
    const Matrix coarse = coarsen(g.values, g.roles, 2);
    Rng r1(9), r2(9);
    const auto a = ampute(coarse, g.values, g.roles, 0.3, r1);
    const auto b = ampute(g.values, g.values, g.roles, 0.3, r2);
    CHECK(a.data.mask() == b.data.mask());
    CHECK(a.data.values()(0, 10) == coarse(0, 10));
}

TEST_CASE("response model refit diagnostics") {
    SimulationCondition c;
    double r2 = 0, auc = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        Rng rng(200 + static_cast<std::uint64_t>(r));
        const auto g = generate_complete(c, rng);
        const auto a = ampute(g.values, g.values, g.roles, 0.3, rng);
        Vector missing(500);
        for (Index i = 0; i < 500; ++i) missing(i) = a.data.observed(i, 0) ? 0.0 : 1.0;
        const auto fit = fit_response_model(missing, g.values.middleCols(4, 4));
        r2 += fit.mcfadden_r2;
        auc += fit.auc;
    }
    CHECK(std::abs(r2 / reps - 0.14) < 0.05);
    CHECK(std::abs(auc / reps - 0.74) < 0.04);
}

TEST_CASE("roc auc against a pairwise count") {
    Rng rng(10);
    const Vector score = test::random_matrix(60, 1, rng).col(0).array().round();
    Vector label(60);
    for (Index i = 0; i < 60; ++i) label(i) = (i % 3 == 0) ? 1.0 : 0.0;
    double wins = 0, pairs = 0;
    for (Index i = 0; i < 60; ++i)
        for (Index j = 0; j < 60; ++j)
            if (label(i) == 1.0 && label(j) == 0.0) {
                pairs += 1;
                wins += score(i) > score(j) ? 1.0 : (score(i) == score(j) ? 0.5 : 0.0);
            }
    CHECK(std::abs(roc_auc(score, label) - wins / pairs) < 1e-12);
    CHECK_THROWS_AS(roc_auc(score, Vector::Zero(60)), InputError);
}

TEST_CASE("metric examples") {
    const std::vector<double> truth{2.0, 2.0};
    const std::vector<double> same{2.0, 2.0};
    const std::vector<double> off{2.0, 2.2};
    CHECK(compute_prb(same, truth) == 0.0);
    CHECK(compute_prb(off, truth) == doctest::Approx(5.0));
    CHECK_THROWS_AS(compute_prb(same, std::vector<double>{1.0, -1.0}), InputError);
    CHECK(compute_ciw(same, same) == 0.0);
    CHECK(compute_cic(same, same, 2.0) == 1.0);
    const std::vector<double> lo{3.0, 4.0}, hi{3.5, 5.0};
    CHECK(compute_cic(lo, hi, 2.0) == 0.0);
    CHECK(compute_ciw(lo, hi) == doctest::Approx(0.75));
}

TEST_CASE("property: metrics match a literal re-evaluation") {
    Rng rng(11);
    std::normal_distribution<double> normal(1.0, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t s = 1 + static_cast<std::size_t>(trial);
        std::vector<double> est(s), full(s), lo(s), hi(s);
        for (std::size_t k = 0; k < s; ++k) {
            est[k] = normal(rng);
            full[k] = normal(rng);
            lo[k] = est[k] - std::abs(normal(rng));
            hi[k] = est[k] + std::abs(normal(rng));
        }
        double phi = 0, mean_est = 0, width = 0, covered = 0;
        for (std::size_t k = 0; k < s; ++k) {
            phi += full[k];
            mean_est += est[k];
        }
        phi /= static_cast<double>(s);
        mean_est /= static_cast<double>(s);
        for (std::size_t k = 0; k < s; ++k) {
            width += hi[k] - lo[k];
            covered += (lo[k] <= phi && phi <= hi[k]) ? 1.0 : 0.0;
        }
        CHECK(std::abs(true_value(full) - phi) < 1e-12);
        CHECK(std::abs(compute_prb(est, full) - 100.0 * std::abs(mean_est - phi) / std::abs(phi)) < 1e-12);
        CHECK(std::abs(compute_ciw(lo, hi) - width / static_cast<double>(s)) < 1e-12);
        CHECK(std::abs(compute_cic(lo, hi, phi) - covered / static_cast<double>(s)) < 1e-12);
    }
}

TEST_CASE("generation is deterministic in the rng") {
    SimulationCondition c;
    c.n = 50;
    Rng a(12), b(12);
    CHECK(generate_complete(c, a).values == generate_complete(c, b).values);
}
