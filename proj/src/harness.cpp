#include "chernet/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "chernet/chernoff.hpp"
#include "chernet/errors.hpp"

namespace chernet {

namespace {

constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kTopologyStream = 2;
constexpr std::uint64_t kTruthStream = 0x7472757468ULL;

}  // namespace

double default_slack(double c) { return c <= 1e-3 ? 1.5 : 2.0; }

NetworkGraph generate_topology(std::size_t L, std::uint64_t seed, std::string* warning) {
    if (L == 0) throw std::invalid_argument("generate_topology: L must be at least 1");
    if (L < 3) {
        if (warning) *warning = "L=" + std::to_string(L) + " is too small for a ring; using a path";
        return NetworkGraph::path(L);
    }
    const std::size_t ring = std::max<std::size_t>(3, (L + 1) / 2);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t l = 0; l < ring; ++l) edges.emplace_back(l, (l + 1) % ring);
    RandomStream rng(seed);
    for (std::size_t l = ring; l < L; ++l) {
        const auto anchor = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ring)), ring - 1);
        edges.emplace_back(anchor, l);
    }
    return NetworkGraph(L, edges);
}

ObservationModel generate_bernoulli_model(std::size_t M, std::size_t L, std::uint64_t seed) {
    if (M < 2 || L < 1) throw std::invalid_argument("generate_bernoulli_model: need M >= 2 and L >= 1");
    const std::size_t K = M;
    std::vector<Categorical> dists(M * L * K, Categorical::bernoulli(0.5));
    RandomStream rng(seed);
    const double width = 1.0 / static_cast<double>(M);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < M; ++i) {
                double p = (static_cast<double>(i) + uniform01(rng)) * width;
                p = std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
                dists[((i * L) + l) * K + k] = Categorical::bernoulli(p);
            }
        }
    }
    return ObservationModel({M, L, K, 2}, std::move(dists));
}

ObservationModel read_model(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&](std::istringstream& ss) {
        while (std::getline(in, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            ss.clear();
            ss.str(line);
            return true;
        }
        return false;
    };
    auto fail = [&](const std::string& what) -> std::invalid_argument {
        return std::invalid_argument("model line " + std::to_string(line_no) + ": " + what);
    };

    std::istringstream ss;
    if (!next(ss)) throw std::invalid_argument("model: empty input");
    std::string tag;
    ModelShape shape;
    if (!(ss >> tag >> shape.hypotheses >> shape.sensors >> shape.actions >> shape.alphabet) || tag != "model") {
        throw fail("expected header 'model M L K A'");
    }
    const std::size_t count = shape.hypotheses * shape.sensors * shape.actions;
    std::vector<std::optional<Categorical>> slots(count);
    std::size_t filled = 0;
    while (next(ss)) {
        std::size_t i = 0, l = 0, k = 0;
        if (!(ss >> i >> l >> k)) throw fail("expected 'i l k p_0 ... p_{A-1}'");
        if (i >= shape.hypotheses || l >= shape.sensors || k >= shape.actions) throw fail("index out of range");
        std::vector<double> probs(shape.alphabet);
        for (auto& p : probs) {
            if (!(ss >> p)) throw fail("expected " + std::to_string(shape.alphabet) + " probabilities");
        }
        std::string extra;
        if (ss >> extra) throw fail("trailing token '" + extra + "'");
        auto& slot = slots[((i * shape.sensors) + l) * shape.actions + k];
        if (slot) throw fail("duplicate entry");
        try {
            slot = Categorical(std::move(probs));
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
        ++filled;
    }
    if (filled != count) {
        throw std::invalid_argument("model: expected " + std::to_string(count) + " entries, got " +
                                    std::to_string(filled));
    }
    std::vector<Categorical> dists;
    dists.reserve(count);
    for (auto& s : slots) dists.push_back(std::move(*s));
    return ObservationModel(shape, std::move(dists));
}

void write_model(std::ostream& out, const ObservationModel& model) {
    const auto& s = model.shape();
    out << "model " << s.hypotheses << ' ' << s.sensors << ' ' << s.actions << ' ' << s.alphabet << '\n';
    for (std::size_t i = 0; i < s.hypotheses; ++i) {
        for (std::size_t l = 0; l < s.sensors; ++l) {
            for (std::size_t k = 0; k < s.actions; ++k) {
                out << i << ' ' << l << ' ' << k;
                for (double p : model.dist(i, l, k).probs()) out << ' ' << format_double(p);
                out << '\n';
            }
        }
    }
}

GraphArtifacts graph_artifacts(const NetworkGraph& g, const WeightMatrix& w) {
    GraphArtifacts a;
    a.sensors = g.size();
    a.radius = radius(g);
    a.diameter = diameter(g);
    a.eta = ergodic_coefficient(w.matrix());
    a.eta_h = ergodic_coefficient(matrix_power(w.matrix(), std::max<std::size_t>(a.radius, 1)));
    return a;
}

double dct_error_bound(std::size_t M, double c) {
    return std::min(static_cast<double>(M - 1) * c, 1.0);
}

double cct_error_bound(std::size_t M, double c, double I) {
    if (c >= I) return 1.0;
    return std::min(static_cast<double>(M - 1) * std::pow(c, 1.0 / (1.0 - c / I)), 1.0);
}

double leading_time(double c, double I) { return std::abs(std::log(c)) / I; }

namespace {

// h * log(x) / log(1 - eta_h), taken as 0 once eta_h = 1.
double contraction_rounds(double log_x, const GraphArtifacts& g) {
    if (g.eta_h >= 1.0) return 0.0;
    return static_cast<double>(g.radius) * log_x / std::log1p(-g.eta_h);
}

}  // namespace

double cct_time_bound(double c, double I, double max_I, const GraphArtifacts& g) {
    const double consensus = std::max(0.0, contraction_rounds(std::log(c / max_I), g));
    const double detection = c < I ? std::abs(std::log(c)) / (I - c) : std::numeric_limits<double>::infinity();
    return std::max(consensus, detection);
}

double phase1_bound(double c, double max_I, const GraphArtifacts& g) {
    const double h = static_cast<double>(g.radius);
    const double k0 = contraction_rounds(std::log(c / max_I), g) + h;
    const double log_d = g.diameter > 1 ? std::log(static_cast<double>(g.diameter)) : 0.0;
    const double kd = contraction_rounds(-log_d, g) + h + static_cast<double>(g.sensors) + 1.0;
    return k0 + kd;
}

BoundReport theoretical_bounds(Protocol p, std::size_t M, double c, double I, double max_I,
                               const std::optional<GraphArtifacts>& g) {
    BoundReport r;
    r.nc = std::numeric_limits<double>::quiet_NaN();
    if (p == Protocol::cct) {
        if (!g) throw std::invalid_argument("theoretical_bounds: consensus bounds need graph artifacts");
        r.err = cct_error_bound(M, c, I);
        r.en = cct_time_bound(c, I, max_I, *g);
        r.nc = phase1_bound(c, max_I, *g);
    } else {
        r.err = dct_error_bound(M, c);
        r.en = leading_time(c, I);
    }
    return r;
}

double Experiment::rate(Protocol p, std::size_t i) const {
    switch (p) {
        case Protocol::standard: return policies.capability(0, i);
        case Protocol::fct: return fct_policies.capability(0, i);
        case Protocol::dct:
        case Protocol::cct: return table.total(i);
    }
    return 0.0;
}

namespace {

std::ifstream open_input(const std::string& spec, const char* key) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw ConfigurationError(std::string(key) + ": cannot open '" + path + "'");
    return in;
}

}  // namespace

Experiment prepare_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.seed) throw ConfigurationError("seed: a master seed is required");
    Experiment exp;
    try {
        if (cfg.model == "bernoulli") {
            exp.model = generate_bernoulli_model(cfg.M, cfg.L, derive_seed(*cfg.seed, kModelStream));
        } else {
            auto in = open_input(cfg.model, "model");
            exp.model = read_model(in);
        }
    } catch (const ConfigurationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigurationError(std::string("model: ") + e.what());
    }
    if (exp.model.hypotheses() != cfg.M || exp.model.sensors() != cfg.L) {
        throw ConfigurationError("model: file has M=" + std::to_string(exp.model.hypotheses()) +
                                 ", L=" + std::to_string(exp.model.sensors()) + " but the config says M=" +
                                 std::to_string(cfg.M) + ", L=" + std::to_string(cfg.L));
    }
    exp.policies = PolicyCache(exp.model);
    exp.table = capability_table(exp.policies);
    if (cfg.protocol == Protocol::fct) {
        exp.fct_model = build_fct_model(exp.model);
        exp.fct_policies = PolicyCache(exp.fct_model);
    }
    if (cfg.protocol == Protocol::cct) {
        try {
            if (cfg.topology == "generated") {
                exp.graph = generate_topology(cfg.L, derive_seed(*cfg.seed, kTopologyStream), &exp.warning);
            } else {
                auto in = open_input(cfg.topology, "topology");
                exp.graph = read_edge_list(in);
            }
        } catch (const ConfigurationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigurationError(std::string("topology: ") + e.what());
        }
        if (exp.graph.size() != cfg.L) {
            throw ConfigurationError("topology: graph has " + std::to_string(exp.graph.size()) +
                                     " sensors but L=" + std::to_string(cfg.L));
        }
        if (!exp.graph.connected()) throw ConfigurationError("topology: graph is not connected");
        exp.weights = metropolis_weights(exp.graph);
        exp.artifacts = graph_artifacts(exp.graph, exp.weights);
    }
    return exp;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (successes == 0) ci.lo = 0.0;
    if (successes == n) ci.hi = 1.0;
    return ci;
}

TrialRecord run_trial(const Experiment& exp, const ExperimentConfig& cfg, std::uint64_t trial_seed,
                      CctEventLog* log) {
    const std::size_t truth =
        cfg.true_hypothesis ? *cfg.true_hypothesis : derive_seed(trial_seed, kTruthStream) % cfg.M;
    auto single = [&](const ObservationModel& model, const PolicyCache& policies) {
        RandomStream rng(trial_seed);
        StandardTestResult r;
        try {
            r = run_standard_test(model, 0, policies, std::abs(std::log(cfg.c)), truth, rng);
        } catch (const TimeoutError& e) {
            throw TimeoutError(std::string(e.what()) + " (seed " + std::to_string(trial_seed) + ")", trial_seed);
        }
        TrialRecord rec;
        rec.decision = r.decision;
        rec.true_hypothesis = truth;
        rec.correct = r.decision == truth;
        rec.decision_time = r.stopping_time;
        rec.samples = r.stopping_time;
        rec.seed = trial_seed;
        return rec;
    };
    switch (cfg.protocol) {
        case Protocol::standard: return single(exp.model, exp.policies);
        case Protocol::fct: return single(exp.fct_model, exp.fct_policies);
        case Protocol::dct: return run_dct_trial(exp.model, exp.policies, exp.table, cfg.c, truth, trial_seed);
        case Protocol::cct:
            return run_cct_trial(exp.model, exp.policies, exp.table, exp.graph, exp.weights, cfg.c, truth,
                                 trial_seed, log);
    }
    throw std::logic_error("run_trial: unhandled protocol");
}

AggregateStats aggregate(const std::vector<TrialRecord>& records, const Experiment& exp,
                         const ExperimentConfig& cfg, std::uint64_t cell_seed) {
    AggregateStats s;
    s.protocol = cfg.protocol;
    s.M = cfg.M;
    s.L = cfg.L;
    s.c = cfg.c;
    s.trials = records.size();
    s.seed = cell_seed;
    s.err_by_hypothesis.assign(cfg.M, 0.0);

    double sum_n = 0.0, sum_n2 = 0.0, sum_nc = 0.0, sum_comms = 0.0, sum_samples = 0.0;
    std::uint64_t comm_slots = 0;
    std::vector<std::uint64_t> errors_by(cfg.M, 0);
    for (const auto& r : records) {
        if (!r.correct) {
            ++s.errors;
            ++errors_by[r.true_hypothesis];
        }
        if (!r.unanimous) ++s.split_decisions;
        const double n = static_cast<double>(r.decision_time);
        sum_n += n;
        sum_n2 += n * n;
        sum_nc += static_cast<double>(r.consensus_time);
        s.max_Nc = std::max(s.max_Nc, r.consensus_time);
        s.max_consensus_spread = std::max(s.max_consensus_spread, r.consensus_spread);
        for (auto cnt : r.comms) sum_comms += static_cast<double>(cnt);
        comm_slots += r.comms.size();
        sum_samples += static_cast<double>(r.samples);
    }
    const double n = static_cast<double>(s.trials);
    s.err_rate = static_cast<double>(s.errors) / n;
    const Interval ci = wilson_interval(s.errors, s.trials);
    s.err_lo = ci.lo;
    s.err_hi = ci.hi;
    s.mean_N = sum_n / n;
    s.mean_N2 = sum_n2 / n;
    s.mean_Nc = sum_nc / n;
    s.mean_comms = comm_slots ? sum_comms / static_cast<double>(comm_slots) : 0.0;
    s.mean_samples = sum_samples / n;
    s.risk = cfg.c * s.mean_N;
    for (std::size_t i = 0; i < cfg.M; ++i) {
        s.err_by_hypothesis[i] = static_cast<double>(errors_by[i]) / n;
        s.risk += cfg.omega_at(i) * s.err_by_hypothesis[i];
    }

    double max_rate = 0.0;
    for (std::size_t i = 0; i < cfg.M; ++i) max_rate = std::max(max_rate, exp.rate(cfg.protocol, i));
    if (cfg.true_hypothesis) {
        s.bounds = theoretical_bounds(cfg.protocol, cfg.M, cfg.c, exp.rate(cfg.protocol, *cfg.true_hypothesis),
                                      max_rate, exp.artifacts);
    } else {
        // Bayes average over a uniform truth; the error bound takes the worst hypothesis.
        s.bounds = {};
        for (std::size_t i = 0; i < cfg.M; ++i) {
            const BoundReport b = theoretical_bounds(cfg.protocol, cfg.M, cfg.c, exp.rate(cfg.protocol, i),
                                                     max_rate, exp.artifacts);
            s.bounds.err = std::max(s.bounds.err, b.err);
            s.bounds.en += b.en / static_cast<double>(cfg.M);
            s.bounds.nc = b.nc;
        }
    }
    s.slack = cfg.slack ? *cfg.slack : default_slack(cfg.c);
    return s;
}

namespace {

MonteCarloResult finish(std::vector<TrialRecord>&& records, std::vector<std::exception_ptr>& errors,
                        std::vector<CctEventLog>&& logs, const Experiment& exp, const ExperimentConfig& cfg,
                        std::uint64_t cell_seed, bool keep_records) {
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    MonteCarloResult out;
    out.stats = aggregate(records, exp, cfg, cell_seed);
    if (keep_records) out.records = std::move(records);
    out.logs = std::move(logs);
    return out;
}

}  // namespace

MonteCarloResult run_monte_carlo(const Experiment& exp, const ExperimentConfig& cfg, std::uint64_t cell_seed,
                                 bool keep_records) {
    const std::size_t n = cfg.trials;
    const bool logging = cfg.log_events && cfg.protocol == Protocol::cct;
    std::vector<TrialRecord> records(n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<CctEventLog> logs(logging ? n : 0);
    const int threads = cfg.jobs ? static_cast<int>(cfg.jobs) : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(n); ++t) {
        const auto idx = static_cast<std::size_t>(t);
        try {
            records[idx] = run_trial(exp, cfg, derive_seed(cell_seed, idx), logging ? &logs[idx] : nullptr);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    return finish(std::move(records), errors, std::move(logs), exp, cfg, cell_seed, keep_records);
}

MonteCarloResult run_monte_carlo_serial(const Experiment& exp, const ExperimentConfig& cfg,
                                        std::uint64_t cell_seed, bool keep_records) {
    const std::size_t n = cfg.trials;
    const bool logging = cfg.log_events && cfg.protocol == Protocol::cct;
    std::vector<TrialRecord> records(n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<CctEventLog> logs(logging ? n : 0);
    for (std::size_t t = 0; t < n; ++t) {
        try {
            records[t] = run_trial(exp, cfg, derive_seed(cell_seed, t), logging ? &logs[t] : nullptr);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    }
    return finish(std::move(records), errors, std::move(logs), exp, cfg, cell_seed, keep_records);
}

MonteCarloResult run_experiment(const ExperimentConfig& cfg, bool keep_records) {
    const Experiment exp = prepare_experiment(cfg);
    return run_monte_carlo(exp, cfg, derive_seed(*cfg.seed, 0), keep_records);
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.seed) throw ConfigurationError("seed: a master seed is required");
    if (cfg.axis.empty()) throw ConfigurationError("axis: required for a sweep");
    if (cfg.values.size() < 2) throw ConfigurationError("values: a sweep needs at least 2 values");
    std::vector<SweepRow> rows;
    for (std::size_t j = 0; j < cfg.values.size(); ++j) {
        SweepRow row;
        row.value = cfg.values[j];
        ExperimentConfig cell = cfg;
        try {
            if (cfg.axis == "c") {
                cell.c = row.value;
            } else {
                if (!(row.value >= 1.0) || row.value != std::floor(row.value)) {
                    throw ConfigurationError("values: L must be a positive integer");
                }
                cell.L = static_cast<std::size_t>(row.value);
            }
            const Experiment exp = prepare_experiment(cell);
            row.stats = run_monte_carlo(exp, cell, derive_seed(*cfg.seed, j)).stats;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string csv_header() {
    return "protocol,M,L,c,trials,err_rate,err_lo,err_hi,mean_N,mean_N2,mean_Nc,risk,mean_comms,"
           "bound_err,bound_EN,bound_Nc,seed";
}

std::string csv_row(const AggregateStats& s) {
    auto num = [](double x) { return std::isnan(x) ? std::string() : format_double(x); };
    std::ostringstream out;
    out << to_string(s.protocol) << ',' << s.M << ',' << s.L << ',' << num(s.c) << ',' << s.trials << ','
        << num(s.err_rate) << ',' << num(s.err_lo) << ',' << num(s.err_hi) << ',' << num(s.mean_N) << ','
        << num(s.mean_N2) << ',' << num(s.mean_Nc) << ',' << num(s.risk) << ',' << num(s.mean_comms) << ','
        << num(s.bounds.err) << ',' << num(s.bounds.en) << ',' << num(s.bounds.nc) << ',' << s.seed;
    return out.str();
}

bool mostly_increasing(const std::vector<double>& xs, std::size_t inversions) {
    std::size_t drops = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) drops += xs[i] <= xs[i - 1];
    return drops <= inversions;
}

bool mostly_decreasing(const std::vector<double>& xs, std::size_t inversions) {
    std::size_t rises = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) rises += xs[i] >= xs[i - 1];
    return rises <= inversions;
}

}  // namespace chernet
