#include <doctest.h>

#include <cmath>

#include "chernet/dct.hpp"
#include "chernet/errors.hpp"
#include "chernet/harness.hpp"

using namespace chernet;

TEST_CASE("capability table") {
    const CapabilityTable t(2, 2, {1.0, 2.0, 3.0, 2.0});
    CHECK(t.total(0) == doctest::Approx(4.0));
    CHECK(t.total(1) == doctest::Approx(4.0));
    CHECK(t.rho(0, 0) == doctest::Approx(0.25));
    CHECK(t.rho(1, 0) == doctest::Approx(0.75));
    CHECK(t.rho(0, 1) + t.rho(1, 1) == doctest::Approx(1.0));
    CHECK(t.max_total() == doctest::Approx(4.0));
    CHECK(t.row(1) == std::vector<double>{3.0, 2.0});
    try {
        CapabilityTable(2, 2, {1.0, 0.0, 3.0, 2.0});
        FAIL("expected a configuration error");
    } catch (const ConfigurationError& e) {
        const std::string what = e.what();
        CHECK(what.find("hypothesis 1") != std::string::npos);
        CHECK(what.find("sensor 0") != std::string::npos);
    }
}

TEST_CASE("response fractions sum to one") {
    const ObservationModel m = generate_bernoulli_model(3, 7, 21);
    std::vector<std::uint64_t> comms;
    const CapabilityTable t = dct_initialize(m, PolicyCache(m), &comms);
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < 7; ++l) s += t.rho(l, i);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(comms == std::vector<std::uint64_t>(7, 2));
}

TEST_CASE("fusion center decides only on unanimity") {
    FusionState f(3);
    std::vector<DctMessage> inbox = {{0, 1}, {1, 1}};
    CHECK_FALSE(dct_fusion_round(f, inbox));
    inbox = {{2, 0}};
    CHECK_FALSE(dct_fusion_round(f, inbox));
    inbox = {{2, 1}};
    CHECK(dct_fusion_round(f, inbox));
    CHECK(*f.decided == 1);
    // One message each for sensors 0 and 1, two for sensor 2, plus the halt.
    CHECK(f.comms == std::vector<std::uint64_t>{2, 2, 3});
}

TEST_CASE("sensor sends only when its triggered hypothesis changes") {
    const ObservationModel m = generate_bernoulli_model(3, 2, 4);
    const PolicyCache cache(m);
    const CapabilityTable t = capability_table(cache);
    DctSensor s(0, t, 0.01, 99);
    std::optional<std::size_t> last;
    std::uint64_t sent = 0;
    for (std::uint64_t n = 1; n <= 300; ++n) {
        if (auto msg = dct_sensor_round(s, m, cache, 0, n)) {
            CHECK(msg->hypothesis != last);
            last = msg->hypothesis;
            ++sent;
        }
    }
    CHECK(sent >= 1);
    CHECK(s.last_sent == last);
}

TEST_CASE("decentralized trials") {
    const ObservationModel m = generate_bernoulli_model(3, 5, 8);
    const PolicyCache cache(m);
    const CapabilityTable t = capability_table(cache);
    SUBCASE("deterministic replay") {
        const TrialRecord a = run_dct_trial(m, cache, t, 0.01, 0, 1234);
        const TrialRecord b = run_dct_trial(m, cache, t, 0.01, 0, 1234);
        CHECK(a.decision == b.decision);
        CHECK(a.decision_time == b.decision_time);
        CHECK(a.comms == b.comms);
        CHECK(a.trigger_times == b.trigger_times);
    }
    SUBCASE("record invariants") {
        for (std::uint64_t s = 0; s < 200; ++s) {
            const TrialRecord r = run_dct_trial(m, cache, t, 0.05, 2, s);
            CHECK(r.decision_time >= 1);
            CHECK(r.correct == (r.decision == 2));
            CHECK(r.samples == 5 * r.decision_time);
            for (auto c : r.comms) CHECK(c >= 4);
            for (auto tt : r.trigger_times) CHECK(tt <= r.decision_time);
        }
    }
    SUBCASE("single sensor reduces to the standard test") {
        const ObservationModel one = generate_bernoulli_model(3, 1, 8);
        const PolicyCache pc(one);
        const CapabilityTable t1 = capability_table(pc);
        CHECK(t1.rho(0, 1) == doctest::Approx(1.0));
        const double c = 0.01;
        for (std::uint64_t s = 0; s < 50; ++s) {
            const TrialRecord r = run_dct_trial(one, pc, t1, c, 1, s);
            RandomStream rng(derive_seed(s, 0));
            const StandardTestResult st = run_standard_test(one, 0, pc, std::abs(std::log(c)), 1, rng);
            CHECK(r.decision_time == st.stopping_time);
            CHECK(r.decision == st.decision);
        }
    }
    CHECK_THROWS_AS(run_dct_trial(m, cache, t, 1.5, 0, 1), std::invalid_argument);
}

TEST_CASE("decentralized error rate at c = 0.01") {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::dct;
    cfg.M = 3;
    cfg.L = 5;
    cfg.c = 0.01;
    cfg.trials = 10'000;
    cfg.seed = 7;
    const AggregateStats s = run_experiment(cfg).stats;
    CHECK(s.err_rate <= 0.02);
    CHECK(s.mean_comms >= 4.0);
}
