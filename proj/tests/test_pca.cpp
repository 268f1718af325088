#include <doctest.h>

#include <cmath>

#include "mipcr/pca.hpp"
#include "test_support.hpp"

using namespace mipcr;

namespace {

double sample_variance(const Vector& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("standardize [1,2,3]") {
    Matrix m(3, 1);
    m << 1, 2, 3;
    const auto s = standardize(m);
    CHECK(s.centers(0) == doctest::Approx(2.0));
    CHECK(s.scales(0) == doctest::Approx(1.0));
    CHECK(std::abs(s.values.col(0).mean()) < 1e-12);
    CHECK(std::abs(sample_variance(s.values.col(0)) - 1.0) < 1e-10);
}

TEST_CASE("standardize matches a two-pass oracle and is idempotent") {
    Rng rng(1);
    const Matrix m = test::random_matrix(20, 5, rng) * 3.0 + Matrix::Constant(20, 5, 7.0);
    const auto s = standardize(m);
    for (Index j = 0; j < m.cols(); ++j) {
        double sum = 0;
        for (Index i = 0; i < m.rows(); ++i) sum += s.values(i, j);
        double ss = 0;
        for (Index i = 0; i < m.rows(); ++i) ss += (s.values(i, j) - sum / 20) * (s.values(i, j) - sum / 20);
        CHECK(std::abs(sum / 20) < 1e-12);
        CHECK(std::abs(ss / 19 - 1.0) < 1e-10);
    }
    const auto again = standardize(s.values);
    CHECK((again.values - s.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant columns become zero with scale 1") {
    Matrix m(4, 2);
    m << 1, 5, 2, 5, 3, 5, 4, 5;
    const auto s = standardize(m);
    CHECK(s.scales(1) == 1.0);
    CHECK(s.values.col(1).cwiseAbs().maxCoeff() == 0.0);
    const Matrix r = correlation_matrix(m);
    CHECK(r(0, 1) == 0.0);
    CHECK_THROWS_AS(standardize(Matrix::Ones(1, 2)), InputError);
}

TEST_CASE("correlation matrix matches direct summation") {
    Rng rng(2);
    const Matrix m = test::correlated_matrix(30, 6, rng);
    CHECK((correlation_matrix(m) - test::brute_correlation(m)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("perfectly correlated columns give eigenvalues [2, 0]") {
    Matrix m(5, 2);
    m << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    const auto r = pca(m, 2);
    CHECK(std::abs(r.eigenvalues(0) - 2.0) < 1e-10);
    CHECK(std::abs(r.eigenvalues(1)) < 1e-10);
}

TEST_CASE("independent columns give eigenvalues near 1") {
    Rng rng(3);
    const Matrix m = test::random_matrix(20000, 4, rng);
    const auto r = pca(m, 4);
    for (Index k = 0; k < 4; ++k) CHECK(std::abs(r.eigenvalues(k) - 1.0) < 0.05);
}

TEST_CASE("pca matches the Jacobi oracle up to sign") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = test::correlated_matrix(50, 8, rng);
        const auto r = pca(m, 8);
        const auto [values, vectors] = test::jacobi_eigen(test::brute_correlation(m));
        for (Index k = 0; k < 8; ++k) {
            CHECK(std::abs(r.eigenvalues(k) - values(k)) < 1e-8);
            const double same = (r.weights.col(k) - vectors.col(k)).cwiseAbs().maxCoeff();
            const double flipped = (r.weights.col(k) + vectors.col(k)).cwiseAbs().maxCoeff();
            CHECK(std::min(same, flipped) < 1e-6);
        }
    }
}

TEST_CASE("property: pca invariants on random inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        const Index n = 15 + trial, p = 2 + trial % 7;
        const Matrix m = test::correlated_matrix(n, p, rng);
        const auto r = pca(m, p);
        CHECK(std::abs(r.spectrum.sum() - static_cast<double>(p)) < 1e-9);
        for (Index k = 1; k < p; ++k) CHECK(r.eigenvalues(k) <= r.eigenvalues(k - 1));
        CHECK((r.weights.transpose() * r.weights - Matrix::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-10);
        for (Index k = 0; k < p; ++k) CHECK(std::abs(sample_variance(r.scores.col(k)) - r.eigenvalues(k)) < 1e-8);
        const Matrix z = standardize(m).values;
        CHECK((r.scores * r.weights.transpose() - z).cwiseAbs().maxCoeff() < 1e-8);
        const Matrix sc = correlation_matrix(r.scores.leftCols(std::min<Index>(p, 3)));
        for (Index a = 0; a < sc.rows(); ++a)
            for (Index b = 0; b < a; ++b) CHECK(std::abs(sc(a, b)) < 1e-8);
        for (Index k = 0; k < p; ++k) {
            Index arg = 0;
            r.weights.col(k).cwiseAbs().maxCoeff(&arg);
            CHECK(r.weights(arg, k) > 0);
        }
    }
}

TEST_CASE("pca is bit-for-bit deterministic and validates q") {
    Rng rng(6);
    const Matrix m = test::correlated_matrix(40, 6, rng);
    const auto a = pca(m, 3);
    const auto b = pca(m, 3);
    CHECK(a.scores == b.scores);
    CHECK(a.weights == b.weights);
    CHECK(a.q == 3);
    CHECK(a.scores.cols() == 3);
    CHECK_THROWS_AS(pca(m, 7), InputError);
    CHECK_THROWS_AS(pca(m, -1), InputError);
    Matrix bad = m;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(pca(bad, 2), InputError);
}

TEST_CASE("max_components") {
    CHECK(max_components(500, 52) == 52);
    CHECK(max_components(500, 56) == 56);
    CHECK(max_components(25, 65) == 25);
}

TEST_CASE("orientation puts the largest entry positive, first index on ties") {
    Matrix v(3, 2);
    v << -0.8, 0.5, 0.6, -0.5, 0.0, 0.1;
    orient_columns(v);
    CHECK(v(0, 0) == 0.8);
    CHECK(v(0, 1) == 0.5);
    CHECK(v(1, 1) == -0.5);
}

TEST_CASE("kaiser counts eigenvalues strictly above 1") {
    Vector s(4);
    s << 2.5, 1.2, 0.8, 0.5;
    CHECK(retained_components(s, RetentionRule::kaiser) == 2);
    CHECK(retained_components(Vector::Ones(5), RetentionRule::kaiser) == 0);
}

TEST_CASE("parallel analysis counts the leading run above the reference") {
    Vector s(4), ref(4);
    s << 3.0, 1.5, 1.4, 0.1;
    ref << 1.3, 1.2, 1.5, 0.5;
    CHECK(retained_components(s, RetentionRule::parallel_analysis, ref) == 2);
    CHECK_THROWS_AS(retained_components(s, RetentionRule::parallel_analysis, Vector::Ones(3)), InputError);
}

TEST_CASE("acceleration factor picks the elbow") {
    Vector s(6);
    s << 4.0, 3.6, 3.3, 0.5, 0.4, 0.2;
    // second differences at 1..4: 0.1, -2.5, 2.7, -0.1 -> elbow at 0-based 3
    CHECK(retained_components(s, RetentionRule::acceleration_factor) == 3);
    Vector two(2);
    two << 1.5, 0.5;
    CHECK_THROWS_AS(retained_components(two, RetentionRule::acceleration_factor), InputError);
    CHECK_THROWS_AS(retained_components(two, RetentionRule::optimal_coordinates), InputError);
}

TEST_CASE("optimal coordinates on a clear scree") {
    Vector s(8);
    s << 3.0, 2.5, 2.0, 0.15, 0.12, 0.1, 0.08, 0.05;
    CHECK(retained_components(s, RetentionRule::optimal_coordinates) == 3);
    CHECK(retained_components(s, RetentionRule::optimal_coordinates, Vector::Constant(8, 2.2)) == 2);
}

TEST_CASE("parallel reference is deterministic given the seed") {
    Rng a(9), b(9);
    const Vector ra = parallel_reference(60, 5, 20, 0.95, a);
    const Vector rb = parallel_reference(60, 5, 20, 0.95, b);
    CHECK(ra == rb);
    for (Index k = 1; k < ra.size(); ++k) CHECK(ra(k) <= ra(k - 1));
    CHECK(ra(0) > 1.0);
}

TEST_CASE("rule parsing and validation") {
    CHECK(parse_retention_rule("kaiser") == RetentionRule::kaiser);
    CHECK(parse_retention_rule(to_string(RetentionRule::parallel_analysis)) == RetentionRule::parallel_analysis);
    CHECK_THROWS_AS(parse_retention_rule("scree"), InputError);
    EnumerationRule bad;
    bad.quantile = 1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad.quantile = 0.5;
    bad.replicates = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("enumerate_components recovers a planted factor count") {
    Rng rng(10);
    const Index n = 400;
    Matrix m = test::random_matrix(n, 12, rng);
    const Matrix f = test::random_matrix(n, 3, rng);
    const double loading[3] = {2.0, 1.0, 0.6};
    for (Index j = 0; j < 12; ++j) m.col(j) = 0.6 * m.col(j) + loading[j % 3] * f.col(j % 3);
    CHECK(enumerate_components(m, {RetentionRule::kaiser}, rng) == 3);
    CHECK(enumerate_components(m, {RetentionRule::parallel_analysis}, rng) == 3);
    CHECK(enumerate_components(m, {RetentionRule::optimal_coordinates}, rng) == 3);
}
