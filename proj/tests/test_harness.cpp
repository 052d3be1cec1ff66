#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chernet/errors.hpp"
#include "chernet/harness.hpp"

using namespace chernet;

TEST_CASE("wilson interval") {
    // statsmodels proportion_confint(method="wilson")
    Interval ci = wilson_interval(5, 100);
    CHECK(ci.lo == doctest::Approx(0.021543679154367966).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(0.11175046923191914).epsilon(1e-12));
    ci = wilson_interval(0, 50);
    CHECK(ci.lo == 0.0);
    CHECK(ci.hi == doctest::Approx(0.07134759913335874).epsilon(1e-12));
    ci = wilson_interval(37, 10000);
    CHECK(ci.lo == doctest::Approx(0.002685648037750953).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(0.005095508744982636).epsilon(1e-12));
}

TEST_CASE("bound evaluators") {
    CHECK(leading_time(0.01, 2.0) == doctest::Approx(2.302585092994046).epsilon(1e-14));
    CHECK(dct_error_bound(3, 0.01) == doctest::Approx(0.02));
    CHECK(dct_error_bound(3, 0.9) == 1.0);
    for (double c = 0.001; c < 1.0; c += 0.01) {
        for (double I : {0.5, 1.0, 3.0}) {
            if (c >= I) continue;
            CHECK(cct_error_bound(3, c, I) <= dct_error_bound(3, c) + 1e-15);
        }
    }
    GraphArtifacts exact{4, 1, 1, 1.0, 1.0};
    CHECK(cct_time_bound(0.01, 2.0, 3.0, exact) == doctest::Approx(std::abs(std::log(0.01)) / (2.0 - 0.01)));
    CHECK(phase1_bound(0.01, 3.0, exact) == doctest::Approx(1 + 1 + 4 + 1));
    const BoundReport r = theoretical_bounds(Protocol::dct, 3, 0.01, 2.0, 2.0, std::nullopt);
    CHECK(r.err == doctest::Approx(0.02));
    CHECK(r.en == doctest::Approx(2.302585092994046));
    CHECK(std::isnan(r.nc));
    CHECK_THROWS(theoretical_bounds(Protocol::cct, 3, 0.01, 2.0, 2.0, std::nullopt));
}

TEST_CASE("bernoulli model generator") {
    const ObservationModel m = generate_bernoulli_model(3, 4, 10);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 4; ++l)
            for (std::size_t k = 0; k < 3; ++k) {
                const double p = m.dist(i, l, k)[1];
                CHECK(p >= static_cast<double>(i) / 3.0);
                CHECK(p <= static_cast<double>(i + 1) / 3.0);
            }
    const ObservationModel again = generate_bernoulli_model(3, 4, 10);
    const ObservationModel bigger = generate_bernoulli_model(3, 6, 10);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 4; ++l)
            for (std::size_t k = 0; k < 3; ++k) {
                CHECK(again.dist(i, l, k)[1] == m.dist(i, l, k)[1]);
                CHECK(bigger.dist(i, l, k)[1] == m.dist(i, l, k)[1]);
            }
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const PolicyCache pc(generate_bernoulli_model(3, 2, s));
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < 3; ++i) CHECK(pc.capability(l, i) > 0.0);
    }
}

TEST_CASE("model text round trip") {
    const ObservationModel m = generate_bernoulli_model(3, 2, 1);
    std::stringstream ss;
    write_model(ss, m);
    const ObservationModel back = read_model(ss);
    CHECK(back.shape().hypotheses == 3);
    CHECK(back.shape().sensors == 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t k = 0; k < 3; ++k) CHECK(back.dist(i, l, k)[0] == m.dist(i, l, k)[0]);
    std::istringstream missing("model 2 1 2 2\n0 0 0 0.5 0.5\n");
    CHECK_THROWS(read_model(missing));
    std::istringstream bad("model 2 1 2 2\n0 0 0 0.5\n");
    CHECK_THROWS(read_model(bad));
}

TEST_CASE("config parsing") {
    std::istringstream in("# experiment\nprotocol = cct\nM=4\nc=0.003\nomega=1,2,3,4\nseed=99\ntrue_hypothesis=uniform\n");
    const ExperimentConfig cfg = parse_config(in);
    CHECK(cfg.protocol == Protocol::cct);
    CHECK(cfg.M == 4);
    CHECK(cfg.c == 0.003);
    CHECK(cfg.omega == std::vector<double>{1, 2, 3, 4});
    CHECK(*cfg.seed == 99);
    CHECK_FALSE(cfg.true_hypothesis.has_value());
    CHECK_NOTHROW(cfg.validate());

    std::istringstream echoed(format_config(cfg));
    const ExperimentConfig again = parse_config(echoed);
    CHECK(format_config(again) == format_config(cfg));

    std::istringstream unknown("M=3\nbogus=1\n");
    try {
        parse_config(unknown);
        FAIL("expected a configuration error");
    } catch (const ConfigurationError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("bogus") != std::string::npos);
    }
    std::istringstream badnum("trials=ten\n");
    CHECK_THROWS_AS(parse_config(badnum), ConfigurationError);

    ExperimentConfig bad;
    bad.c = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigurationError);
    bad = {};
    bad.omega = {1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigurationError);
    bad = {};
    CHECK_THROWS_AS(prepare_experiment(bad), ConfigurationError);  // no seed
}

TEST_CASE("monte carlo is deterministic and order independent") {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::cct;
    cfg.L = 8;
    cfg.c = 0.03;
    cfg.trials = 300;
    cfg.seed = 12;
    const Experiment exp = prepare_experiment(cfg);
    const MonteCarloResult par = run_monte_carlo(exp, cfg, 77, true);
    const MonteCarloResult ser = run_monte_carlo_serial(exp, cfg, 77, true);
    CHECK(csv_row(par.stats) == csv_row(ser.stats));

    std::vector<TrialRecord> reversed = par.records;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(csv_row(aggregate(reversed, exp, cfg, 77)) == csv_row(par.stats));

    ExperimentConfig one = cfg;
    one.trials = 1;
    const MonteCarloResult single = run_monte_carlo(exp, one, 77, true);
    const TrialRecord direct = run_trial(exp, one, derive_seed(77, 0));
    CHECK(single.records[0].decision_time == direct.decision_time);
    CHECK(single.records[0].decision == direct.decision);
}

TEST_CASE("risk and summary invariants") {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::dct;
    cfg.c = 0.1;
    cfg.trials = 2000;
    cfg.seed = 3;
    cfg.omega = {10, 10, 10};
    cfg.true_hypothesis.reset();
    const AggregateStats s = run_experiment(cfg).stats;
    CHECK(s.risk >= cfg.c * s.mean_N);
    CHECK(s.err_lo <= s.err_rate);
    CHECK(s.err_rate <= s.err_hi);
    CHECK(s.mean_N2 >= s.mean_N * s.mean_N);
    double joint = 0.0;
    for (double e : s.err_by_hypothesis) joint += e;
    CHECK(joint == doctest::Approx(s.err_rate));
}

TEST_CASE("csv output is reproducible") {
    ExperimentConfig cfg;
    cfg.trials = 500;
    cfg.seed = 5;
    const std::string a = csv_row(run_experiment(cfg).stats);
    const std::string b = csv_row(run_experiment(cfg).stats);
    CHECK(a == b);
    const std::string header = csv_header();
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(a.begin(), a.end(), ','));
}

TEST_CASE("sweep records failing cells and continues") {
    ExperimentConfig cfg;
    cfg.axis = "c";
    cfg.values = {0.1, 1.5, 0.05};
    cfg.trials = 100;
    cfg.seed = 1;
    const auto rows = sweep(cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].stats.has_value());
    CHECK_FALSE(rows[1].stats.has_value());
    CHECK_FALSE(rows[1].error.empty());
    CHECK(rows[2].stats.has_value());
    cfg.values = {0.1};
    CHECK_THROWS_AS(sweep(cfg), ConfigurationError);
}

TEST_CASE("fusion-center test collects fewer samples than the decentralized one") {
    ExperimentConfig cfg;
    cfg.c = 0.01;
    cfg.trials = 2000;
    cfg.seed = 7;
    cfg.protocol = Protocol::fct;
    const AggregateStats fct = run_experiment(cfg).stats;
    cfg.protocol = Protocol::dct;
    const AggregateStats dct = run_experiment(cfg).stats;
    CHECK(fct.mean_samples <= 1.1 * dct.mean_samples);
}

TEST_CASE("trend helpers") {
    CHECK(mostly_increasing({1, 2, 3}));
    CHECK_FALSE(mostly_increasing({1, 3, 2}));
    CHECK(mostly_increasing({1, 3, 2, 4}, 1));
    CHECK(mostly_decreasing({3, 2, 1}));
    CHECK_FALSE(mostly_decreasing({3, 3, 1}));
}
