#include <doctest.h>

#include <random>
#include <stdexcept>

#include "varlat/metrics.hpp"

using namespace varlat;

TEST_CASE("lp_norm basics") {
    CHECK(lp_norm({3, 4}, 2) == doctest::Approx(5.0));
    CHECK(lp_norm({3, 4}, 1) == doctest::Approx(7.0));
    CHECK(lp_norm({7}, 3.5) == doctest::Approx(7.0));
    CHECK(lp_norm({}, 2) == 0.0);
    CHECK_THROWS_AS(lp_norm({1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("percentile nearest rank") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(percentile(v, 99) == 99.0);
    CHECK(percentile(v, 100) == 100.0);
    CHECK(percentile(v, 1) == 1.0);
    CHECK(percentile({42}, 50) == 42.0);
    CHECK(percentile({5, 1, 3}, 100) == 5.0);
    CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
    CHECK_THROWS_AS(percentile({1.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(percentile({1.0}, 101), std::invalid_argument);
}

TEST_CASE("summarize fields") {
    LatencySummary s = summarize({1, 2, 3, 4}, 1.0);
    CHECK(s.n == 4);
    CHECK(s.mean_ns == doctest::Approx(2.5));
    CHECK(s.variance_ns2 == doctest::Approx(1.25));  // population
    CHECK(s.lp_value == doctest::Approx(10.0));
}

TEST_CASE("covariance_matrix worked fixture") {
    // B=[1,2], C=[3,5]
    auto m = covariance_matrix({{1, 3}, {2, 5}});
    CHECK(m[0][0] == doctest::Approx(0.25));
    CHECK(m[1][1] == doctest::Approx(1.0));
    CHECK(m[0][1] == doctest::Approx(0.5));
    CHECK(m[1][0] == doctest::Approx(0.5));
}

TEST_CASE("covariance_matrix degenerate cases") {
    auto m = covariance_matrix({{7, 1, 1}, {7, 2, 2}, {7, 3, 3}});
    for (int j = 0; j < 3; ++j) CHECK(m[0][j] == doctest::Approx(0.0));  // constant col
    CHECK(m[1][2] == doctest::Approx(m[1][1]));  // duplicated column: Cov == Var
    CHECK_THROWS_AS(covariance_matrix({{1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(covariance_matrix({{1, 2}, {1}}), std::invalid_argument);
}

TEST_CASE("CoMoment matches two-pass and closes Eq. 1") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(1e6, 2e6);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 500; ++i) rows.push_back({d(rng), d(rng), d(rng), d(rng)});

    CoMoment acc(4);
    for (const auto& r : rows) acc.add(r);
    auto two_pass = covariance_matrix(rows);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(acc.covariance(i, j) ==
                  doctest::Approx(two_pass[i][j]).epsilon(1e-12));

    // Var of row sums == sum of all matrix entries.
    std::vector<double> sums;
    for (const auto& r : rows) sums.push_back(r[0] + r[1] + r[2] + r[3]);
    CoMoment sum_acc(1);
    for (double s : sums) sum_acc.add({s});
    double total = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) total += acc.covariance(i, j);
    CHECK(sum_acc.variance(0) == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("CoMoment merge equals concatenation on random splits") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0, 1e9);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 300; ++i) rows.push_back({d(rng), d(rng), d(rng)});

    CoMoment whole(3);
    for (const auto& r : rows) whole.add(r);

    for (std::size_t cut : {std::size_t{1}, std::size_t{57}, std::size_t{150}, std::size_t{299}}) {
        CoMoment a(3), b(3);
        for (std::size_t i = 0; i < cut; ++i) a.add(rows[i]);
        for (std::size_t i = cut; i < rows.size(); ++i) b.add(rows[i]);
        a.merge(b);
        CHECK(a.rows() == whole.rows());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(a.covariance(i, j) ==
                      doctest::Approx(whole.covariance(i, j)).epsilon(1e-12));
    }

    // Merge into an empty accumulator and merge an empty one.
    CoMoment empty(3), copy(3);
    for (const auto& r : rows) copy.add(r);
    empty.merge(copy);
    copy.merge(CoMoment(3));
    CHECK(empty.variance(1) == doctest::Approx(whole.variance(1)).epsilon(1e-12));
    CHECK(copy.variance(1) == doctest::Approx(whole.variance(1)).epsilon(1e-12));
}

TEST_CASE("shift invariance and scale equivariance") {
    std::vector<std::vector<double>> rows = {{1, 9}, {4, 2}, {3, 7}, {8, 1}};
    auto base = covariance_matrix(rows);

    auto shifted = rows;
    for (auto& r : shifted) r[0] += 1e12;
    auto m1 = covariance_matrix(shifted);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(m1[i][j] == doctest::Approx(base[i][j]).epsilon(1e-9));

    auto scaled = rows;
    for (auto& r : scaled)
        for (auto& x : r) x *= 3.0;
    auto m2 = covariance_matrix(scaled);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(m2[i][j] == doctest::Approx(9.0 * base[i][j]).epsilon(1e-12));
}
