#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mipcr/data.hpp"
#include "test_support.hpp"

using namespace mipcr;

namespace {

IncompleteData small_data() {
    Matrix v(3, 3);
    v << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    BoolMatrix mask = BoolMatrix::Constant(3, 3, true);
    mask(1, 0) = false;
    mask(2, 2) = false;
    return IncompleteData(v, mask, {"a", "b", "c"},
                          {ColumnRole::analysis_target, ColumnRole::mar_predictor, ColumnRole::auxiliary});
}

}  // namespace

TEST_CASE("masked cells hold NaN and observed cells keep their value") {
    const auto d = small_data();
    CHECK(std::isnan(d.values()(1, 0)));
    CHECK(std::isnan(d.values()(2, 2)));
    CHECK(d.values()(0, 0) == 1.0);
    CHECK(d.missing_count() == 2);
    CHECK(d.observed_count(0) == 2);
    CHECK(d.incomplete_columns() == std::vector<Index>{0, 2});
    CHECK(d.columns_with_role(ColumnRole::mar_predictor) == std::vector<Index>{1});
    CHECK(d.column_index("c") == 2);
    CHECK_THROWS_AS(d.column_index("zz"), InputError);
}

TEST_CASE("constructor rejects inconsistent input") {
    Matrix v = Matrix::Ones(3, 2);
    BoolMatrix mask = BoolMatrix::Constant(3, 2, true);
    std::vector<ColumnRole> roles(2, ColumnRole::auxiliary);
    CHECK_THROWS_AS(IncompleteData(v, BoolMatrix::Constant(2, 2, true), {"a", "b"}, roles), InputError);
    CHECK_THROWS_AS(IncompleteData(v, mask, {"a"}, roles), InputError);
    CHECK_THROWS_AS(IncompleteData(Matrix::Ones(3, 1), BoolMatrix::Constant(3, 1, true), {"a"},
                                   {ColumnRole::auxiliary}),
                    InputError);
    Matrix bad = v;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(IncompleteData(bad, mask, {"a", "b"}, roles), InputError);
    mask(0, 0) = false;
    CHECK_NOTHROW(IncompleteData(bad, mask, {"a", "b"}, roles));
}

TEST_CASE("response proportions") {
    const auto d = small_data();
    const auto r = response_proportions(d);
    REQUIRE(r.size() == 3);
    CHECK(r[0] == doctest::Approx(2.0 / 3.0));
    CHECK(r[1] == 1.0);
    CHECK(r[2] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("complete cases match a brute-force scan") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix v = test::random_matrix(40, 5, rng);
        const auto d = test::random_incomplete(v, {0, 2, 4}, 0.2, rng, 3);
        std::vector<Index> expected;
        for (Index i = 0; i < d.rows(); ++i) {
            bool all = true;
            for (Index j = 0; j < d.cols(); ++j) all = all && d.mask()(i, j);
            if (all) expected.push_back(i);
        }
        CHECK(complete_case_rows(d) == expected);
        const Matrix sub = select_rows(d.values(), expected);
        CHECK(sub.rows() == static_cast<Index>(expected.size()));
        CHECK(sub.allFinite());
    }
}

TEST_CASE("column subsets") {
    const auto all = ColumnSubset::all(4);
    CHECK(all.size() == 4);
    const auto rest = ColumnSubset::all_except(4, 1);
    CHECK(rest.indices() == std::vector<Index>{0, 2, 3});
    CHECK_FALSE(rest.contains(1));
    CHECK_THROWS_AS(ColumnSubset({0, 0}, 3), InputError);
    CHECK_THROWS_AS(ColumnSubset({3}, 3), InputError);
    Matrix m(2, 4);
    m << 1, 2, 3, 4, 5, 6, 7, 8;
    const Matrix e = rest.extract(m);
    CHECK(e(1, 2) == 8);
}

TEST_CASE("with_mask may only hide observed cells") {
    const auto d = small_data();
    BoolMatrix more = d.mask();
    more(0, 1) = false;
    const auto hidden = d.with_mask(more);
    CHECK(hidden.missing_count() == 3);
    BoolMatrix reveal = d.mask();
    reveal(1, 0) = true;
    CHECK_THROWS_AS(d.with_mask(reveal), InputError);
}

TEST_CASE("agrees_on_observed ignores missing cells") {
    const auto d = small_data();
    Matrix c = d.values();
    c(1, 0) = 100;
    c(2, 2) = -3;
    CHECK(agrees_on_observed(d, c));
    c(0, 0) = 1.5;
    CHECK_FALSE(agrees_on_observed(d, c));
}

TEST_CASE("csv reading handles quoting and NA tokens") {
    std::istringstream in("\"x,1\",y\n1,NA\n\"2\",3.5\n");
    const auto d = read_csv(in);
    CHECK(d.names() == std::vector<std::string>{"x,1", "y"});
    CHECK_FALSE(d.observed(0, 1));
    CHECK(d.values()(1, 1) == 3.5);

    std::istringstream custom("a,b\n.,1\n2,3\n");
    const auto e = read_csv(custom, ".");
    CHECK_FALSE(e.observed(0, 0));
}

TEST_CASE("csv errors name the location") {
    std::istringstream ragged("a,b\n1,2\n3\n");
    try {
        read_csv(ragged);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream junk("a,b\n1,2\n3,x\n");
    try {
        read_csv(junk);
        FAIL("expected an error");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), InputError);
    std::istringstream all_missing("a,b\n1,NA\n2,NA\n");
    CHECK_THROWS_AS(read_csv(all_missing), InputError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), InputError);
}

TEST_CASE("split and quote are inverse") {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", ""};
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) line += (i ? "," : "") + quote_csv_field(fields[i]);
    CHECK(split_csv_record(line) == fields);
}

TEST_CASE("format_double round-trips") {
    Rng rng(3);
    std::normal_distribution<double> normal(0.0, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = normal(rng) * std::pow(10.0, static_cast<double>(i % 7) - 3);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("property: csv write then read reproduces values and mask") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix v = test::random_matrix(25, 4, rng);
        const auto d = test::random_incomplete(v, {1, 3}, 0.3, rng, 2);
        std::stringstream buf;
        write_csv(buf, d);
        const auto back = read_csv(buf);
        CHECK(back.names() == d.names());
        CHECK(back.mask() == d.mask());
        CHECK(agrees_on_observed(d, back.values().unaryExpr([](double x) { return std::isnan(x) ? 0.0 : x; })));
    }
}
