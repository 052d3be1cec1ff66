#include <doctest.h>

#include <cmath>

#include "chernet/chernoff.hpp"
#include "chernet/harness.hpp"

using namespace chernet;

namespace {

// M = 2, one sensor, two actions. Action 0 is Bern(0.9) vs Bern(0.1).
ObservationModel coin_model() {
    std::vector<Categorical> d = {Categorical::bernoulli(0.9), Categorical::bernoulli(0.6),
                                  Categorical::bernoulli(0.1), Categorical::bernoulli(0.5)};
    return ObservationModel({2, 1, 2, 2}, d);
}

}  // namespace

TEST_CASE("worst case llr") {
    WorstCaseLLR w = worst_case_llr(std::vector<double>{5.0, 1.0, 0.5});
    CHECK(w.leader == 0);
    CHECK(w.margin == doctest::Approx(4.0));
    w = worst_case_llr(std::vector<double>{2.0, 2.0, 2.0});
    CHECK(w.leader == 0);
    CHECK(w.margin == 0.0);
    const WorstCaseLLR shifted = worst_case_llr(std::vector<double>{105.0, 101.0, 100.5});
    CHECK(shifted.margin == doctest::Approx(4.0));
    CHECK(argmax_lowest({1.0, 3.0, 3.0}) == 1);
}

TEST_CASE("margin is additive over observation blocks") {
    SensorTestState a(3, 0), b(3, 0);
    const std::vector<double> x = {-0.1, -0.5, -2.0}, y = {-1.0, -0.2, -0.3};
    a.absorb(x);
    a.absorb(y);
    const std::vector<double> sum = {x[0] + y[0], x[1] + y[1], x[2] + y[2]};
    b.absorb(sum);
    CHECK(worst_case_llr(a).margin == doctest::Approx(worst_case_llr(b).margin));
    CHECK(a.steps() == 2);
    CHECK(a.temp_decision() == worst_case_llr(a).leader);
    a.reset();
    CHECK(a.steps() == 0);
    CHECK(a.cum_llh()[1] == 0.0);
}

TEST_CASE("identical hypotheses never separate") {
    std::vector<Categorical> d(4, Categorical::bernoulli(0.3));
    const ObservationModel m({2, 1, 2, 2}, d, ObservationModel::Check::floor_only);
    const PolicyCache cache(m);
    SensorTestState s(2, 0);
    RandomStream rng(4);
    for (int t = 0; t < 1000; ++t) step(s, m, cache, rng, 1);
    CHECK(worst_case_llr(s).margin == 0.0);
    CHECK(s.temp_decision() == 0);
    RandomStream rng2(4);
    CHECK_THROWS_AS(run_standard_test(m, 0, cache, 1.0, 0, rng2, 1000), TimeoutError);
}

TEST_CASE("replay with the same seed is identical") {
    const ObservationModel m = coin_model();
    const PolicyCache cache(m);
    SensorTestState a(2, 0), b(2, 0);
    RandomStream ra(77), rb(77);
    for (int t = 0; t < 200; ++t) {
        const StepOutcome oa = step(a, m, cache, ra, 0);
        const StepOutcome ob = step(b, m, cache, rb, 0);
        CHECK(oa.action == ob.action);
        CHECK(oa.observation == ob.observation);
    }
    CHECK(a.cum_llh() == b.cum_llh());
}

TEST_CASE("margin grows at the capability rate") {
    const ObservationModel m = coin_model();
    const PolicyCache cache(m);
    const double v = cache.capability(0, 0);
    CHECK(v == doctest::Approx(1.7577796618689758).epsilon(1e-12));
    SensorTestState s(2, 0);
    RandomStream rng(123);
    const int n = 10'000;
    for (int t = 0; t < n; ++t) step(s, m, cache, rng, 0);
    const double slope = worst_case_llr(s).margin / n;
    CHECK(slope == doctest::Approx(v).epsilon(0.2));
}

TEST_CASE("standard test stops at once for a tiny threshold") {
    const ObservationModel m = coin_model();
    const PolicyCache cache(m);
    RandomStream rng(1);
    const StandardTestResult r = run_standard_test(m, 0, cache, 1e-9, 0, rng);
    CHECK(r.stopping_time == 1);
    RandomStream rng2(1);
    CHECK_THROWS_AS(run_standard_test(m, 0, cache, 0.0, 0, rng2), std::invalid_argument);
}

TEST_CASE("standard test error rate and mean stopping time") {
    const ObservationModel m = coin_model();
    const PolicyCache cache(m);
    const double c = 0.01;
    std::uint64_t errors = 0;
    const int trials = 10'000;
    for (int t = 0; t < trials; ++t) {
        RandomStream rng(derive_seed(5, t));
        errors += run_standard_test(m, 0, cache, std::abs(std::log(c)), 0, rng).decision != 0;
    }
    CHECK(wilson_interval(errors, trials).hi <= c);

    const double gamma = 20.0;
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
        RandomStream rng(derive_seed(6, t));
        total += static_cast<double>(run_standard_test(m, 0, cache, gamma, 0, rng).stopping_time);
    }
    CHECK(total / trials == doctest::Approx(gamma / cache.capability(0, 0)).epsilon(0.15));
}

TEST_CASE("standard test error rate on the generated model") {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::standard;
    cfg.L = 1;
    cfg.seed = 17;
    cfg.trials = 10'000;
    for (double c : {0.1, 0.03, 0.01}) {
        cfg.c = c;
        const AggregateStats s = run_experiment(cfg).stats;
        CHECK(s.err_hi <= 2 * c);
    }
}

TEST_CASE("fusion-center model") {
    const ObservationModel single = generate_bernoulli_model(3, 1, 99);
    const ObservationModel fct = build_fct_model(single);
    CHECK(fct.sensors() == 1);
    CHECK(fct.actions() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) CHECK(fct.dist(i, 0, k)[1] == single.dist(i, 0, k)[1]);

    const ObservationModel two = generate_bernoulli_model(3, 2, 99);
    const ObservationModel f2 = build_fct_model(two);
    CHECK(f2.actions() == 6);
    // Action l * M + k activates sensor l with u_k.
    CHECK(f2.dist(2, 0, 1 * 3 + 2)[1] == two.dist(2, 1, 2)[1]);
}

TEST_CASE("cloned sensors do not change the fusion-center value") {
    const ObservationModel one = generate_bernoulli_model(3, 1, 5);
    std::vector<Categorical> d;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t k = 0; k < 3; ++k) d.push_back(one.dist(i, 0, k));
    const ObservationModel clones({3, 2, 3, 2}, d);
    const ObservationModel fct = build_fct_model(clones);
    const DivergenceTable t = divergence_table(fct, 0);
    const PolicyCache base(one);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(solve_maximin(t, i).value == doctest::Approx(base.capability(0, i)).epsilon(1e-10));
        CHECK(brute_force_maximin(divergence_table(one, 0), i, 0.01).value <= base.capability(0, i) + 1e-12);
    }
}

TEST_CASE("fusion-center samples equal its stopping time") {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::fct;
    cfg.L = 3;
    cfg.seed = 3;
    cfg.trials = 200;
    const Experiment exp = prepare_experiment(cfg);
    const MonteCarloResult r = run_monte_carlo(exp, cfg, 1, true);
    for (const auto& rec : r.records) CHECK(rec.samples == rec.decision_time);
}
