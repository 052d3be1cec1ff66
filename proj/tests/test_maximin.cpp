#include <doctest.h>

#include <cmath>

#include "chernet/maximin.hpp"

using namespace chernet;

namespace {

DivergenceTable random_table(std::size_t M, std::size_t K, RandomStream& rng) {
    DivergenceTable t(M, K);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t k = 0; k < K; ++k) t.at(i, j, k) = i == j ? 0.0 : 2.0 * uniform01(rng);
    return t;
}

ObservationModel bern3() {
    // p[i][k] = P(y = 1 | h_i, u_k)
    const double p[3][3] = {{0.1, 0.2, 0.3}, {0.5, 0.4, 0.6}, {0.9, 0.7, 0.8}};
    std::vector<Categorical> d;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) d.push_back(Categorical::bernoulli(p[i][k]));
    return ObservationModel({3, 1, 3, 2}, d);
}

}  // namespace

TEST_CASE("maximin on a fixed table matches the LP reference") {
    DivergenceTable t(3, 3);
    const double r1[3] = {1.0, 0.2, 0.5}, r2[3] = {0.1, 0.9, 0.4};
    for (int k = 0; k < 3; ++k) {
        t.at(0, 1, k) = r1[k];
        t.at(0, 2, k) = r2[k];
    }
    const ActionPMF pmf = solve_maximin(t, 0);
    // scipy linprog, tests/oracle/oracle_values.py
    CHECK(pmf.value == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(pmf.q[0] == doctest::Approx(0.4375).epsilon(1e-12));
    CHECK(pmf.q[1] == doctest::Approx(0.5625).epsilon(1e-12));
    CHECK(pmf.q[2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(pmf.indistinguishable);
}

TEST_CASE("capabilities of a three-action Bernoulli sensor") {
    const PolicyCache cache(bern3());
    // scipy linprog, tests/oracle/oracle_values.py
    CHECK(cache.capability(0, 0) == doctest::Approx(0.3680642071684971).epsilon(1e-12));
    CHECK(cache.capability(0, 1) == doctest::Approx(0.5108256237659907).epsilon(1e-12));
    CHECK(cache.capability(0, 2) == doctest::Approx(0.36806420716849714).epsilon(1e-12));
    const auto table = divergence_table(bern3(), 0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& pmf = cache.policy(0, i);
        CHECK(maximin_objective(table, i, pmf.q) == doctest::Approx(pmf.value).epsilon(1e-12));
    }
}

TEST_CASE("a dominant action takes all the mass") {
    DivergenceTable t(2, 3);
    t.at(0, 1, 0) = 0.1;
    t.at(0, 1, 1) = 0.7;
    t.at(0, 1, 2) = 0.3;
    const ActionPMF pmf = solve_maximin(t, 0);
    CHECK(pmf.value == doctest::Approx(0.7));
    CHECK(pmf.q[1] == doctest::Approx(1.0));
}

TEST_CASE("indistinguishable hypothesis yields the uniform pmf") {
    DivergenceTable t(2, 2);
    const ActionPMF pmf = solve_maximin(t, 0);
    CHECK(pmf.indistinguishable);
    CHECK(pmf.value == 0.0);
    CHECK(pmf.q[0] == doctest::Approx(0.5));
    CHECK(pmf.q[1] == doctest::Approx(0.5));
}

TEST_CASE("solver agrees with the grid oracle on random tables") {
    RandomStream rng(2024);
    for (int t = 0; t < 60; ++t) {
        const std::size_t M = 2 + static_cast<std::size_t>(t % 3);
        const DivergenceTable table = random_table(M, M, rng);
        for (std::size_t i = 0; i < M; ++i) {
            const ActionPMF exact = solve_maximin(table, i);
            const ActionPMF grid = brute_force_maximin(table, i, 0.01);
            CHECK(exact.value >= grid.value - 1e-12);
            CHECK(std::abs(exact.value - grid.value) <= 0.01 * table.max_entry());
            double sum = 0.0;
            for (double q : exact.q) {
                CHECK(q >= -1e-12);
                sum += q;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("value is homogeneous in the table") {
    RandomStream rng(9);
    const DivergenceTable t = random_table(3, 3, rng);
    const double v = solve_maximin(t, 1).value;
    CHECK(solve_maximin(t.scaled(3.0), 1).value == doctest::Approx(3.0 * v).epsilon(1e-12));
}

TEST_CASE("value lies between the pure-strategy bounds") {
    RandomStream rng(10);
    for (int t = 0; t < 100; ++t) {
        const DivergenceTable table = random_table(4, 4, rng);
        const ActionPMF pmf = solve_maximin(table, 0);
        double lower = 0.0, upper = 1e300;
        for (std::size_t k = 0; k < 4; ++k) {
            double m = 1e300;
            for (std::size_t j = 1; j < 4; ++j) m = std::min(m, table(0, j, k));
            lower = std::max(lower, m);
        }
        for (std::size_t j = 1; j < 4; ++j) {
            double m = 0.0;
            for (std::size_t k = 0; k < 4; ++k) m = std::max(m, table(0, j, k));
            upper = std::min(upper, m);
        }
        CHECK(pmf.value >= lower - 1e-12);
        CHECK(pmf.value <= upper + 1e-12);
    }
}

TEST_CASE("grid step is validated") {
    DivergenceTable t(2, 2);
    CHECK_THROWS(brute_force_maximin(t, 0, 0.0));
    CHECK_THROWS(brute_force_maximin(t, 0, 0.7));
}

TEST_CASE("action draws follow the policy") {
    const ObservationModel m = bern3();
    const PolicyCache cache(m);
    RandomStream rng(1);
    for (int t = 0; t < 1000; ++t) CHECK(cache.draw_action(0, 0, rng) == 0);
}
