#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chernet/cct.hpp"
#include "chernet/dct.hpp"
#include "chernet/maximin.hpp"
#include "chernet/network.hpp"
#include "chernet/probability.hpp"
#include "chernet/trial.hpp"

namespace chernet {

enum class Protocol { standard, fct, dct, cct };

std::string to_string(Protocol p);
/// Throws ConfigurationError on an unknown name.
Protocol parse_protocol(const std::string& name);

struct ExperimentConfig {
    Protocol protocol = Protocol::dct;
    std::size_t M = 3;
    std::size_t L = 5;
    double c = 0.01;
    /// Wrong-decision costs; empty means 1 for every hypothesis.
    std::vector<double> omega;
    std::size_t trials = 1000;
    std::optional<std::uint64_t> seed;
    /// "generated" or "file:<path>".
    std::string topology = "generated";
    /// "bernoulli" or "file:<path>".
    std::string model = "bernoulli";
    /// Fixed hypothesis index; nullopt draws it uniformly per trial.
    std::optional<std::size_t> true_hypothesis = 0;
    /// Worker cap, 0 for the OpenMP default.
    std::size_t jobs = 0;
    /// Multiplier on the leading-order time bounds; nullopt uses default_slack(c).
    std::optional<double> slack;
    std::string out;
    bool log_events = false;
    /// Sweep axis ("c" or "L") and its values.
    std::string axis;
    std::vector<double> values;

    /// Throws ConfigurationError naming the offending key.
    void validate() const;
    double omega_at(std::size_t i) const { return omega.empty() ? 1.0 : omega[i]; }
};

/// Applies one key=value setting. Throws ConfigurationError for unknown
/// keys or unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat key=value file; '#' starts a comment. Errors carry the line number.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});

/// Inverse of parse_config for every key that differs from a missing value.
std::string format_config(const ExperimentConfig& cfg);

/// 1.5 at c <= 1e-3, 2.0 above.
double default_slack(double c);

/// Ring on max(3, ceil(L/2)) sensors; every remaining sensor is attached by
/// one edge to a uniformly drawn ring sensor. L = 1 gives the single node and
/// L = 2 the single edge; both set `warning` when given.
NetworkGraph generate_topology(std::size_t L, std::uint64_t seed, std::string* warning = nullptr);

/// Bernoulli observations: p_{i,l}^{u_k} is uniform on the i-th of M equal
/// bins of (0, 1), then clamped to the probability floor. Draws run sensor
/// by sensor, so the first L sensors are the same for every larger L.
ObservationModel generate_bernoulli_model(std::size_t M, std::size_t L, std::uint64_t seed);

/// Text model format: header `model M L K A`, then one line per
/// (i, l, k): `i l k p_0 ... p_{A-1}`. '#' starts a comment.
ObservationModel read_model(std::istream& in);
void write_model(std::ostream& out, const ObservationModel& model);

/// Graph quantities the consensus-based bounds need.
struct GraphArtifacts {
    std::size_t sensors = 0;
    std::size_t radius = 0;    // h
    std::size_t diameter = 0;  // d
    double eta = 0.0;          // eta(W)
    double eta_h = 0.0;        // eta(W^h)
};

GraphArtifacts graph_artifacts(const NetworkGraph& g, const WeightMatrix& w);

/// min{(M-1) c, 1}.
double dct_error_bound(std::size_t M, double c);
/// min{(M-1) c^{1/(1 - c/I)}, 1}; 1 when c >= I.
double cct_error_bound(std::size_t M, double c, double I);
/// |log c| / I.
double leading_time(double c, double I);
/// max{h log(c / max I) / log(1 - eta_h), |log c| / (I - c)}. The first term
/// vanishes when eta_h = 1 (exact agreement after h rounds).
double cct_time_bound(double c, double I, double max_I, const GraphArtifacts& g);
/// Consensus time plus detection time:
///   h (log(c / max I) / log(1 - eta_h) + 1) + h (-log d / log(1 - eta_h) + 1) + L + 1.
double phase1_bound(double c, double max_I, const GraphArtifacts& g);

struct BoundReport {
    double err = 0.0;
    /// Leading-order E[N] term, without slack.
    double en = 0.0;
    /// Phase-1 duration bound; NaN outside the consensus-based protocol.
    double nc = 0.0;
};

/// `I` is the per-step information rate for the true hypothesis under the
/// protocol (v for one sensor, I(i) for the network tests).
BoundReport theoretical_bounds(Protocol p, std::size_t M, double c, double I, double max_I,
                               const std::optional<GraphArtifacts>& g);

/// Everything shared read-only by the trials of one Monte Carlo block.
struct Experiment {
    ObservationModel model;
    PolicyCache policies;
    CapabilityTable table;
    NetworkGraph graph;
    WeightMatrix weights;
    std::optional<GraphArtifacts> artifacts;
    ObservationModel fct_model;
    PolicyCache fct_policies;
    std::string warning;

    /// Information rate of hypothesis i under protocol p.
    double rate(Protocol p, std::size_t i) const;
};

/// Builds the model and topology from the config. The model is drawn from
/// derive_seed(seed, 1) and the topology from derive_seed(seed, 2).
Experiment prepare_experiment(const ExperimentConfig& cfg);

/// Wilson score interval at 95%.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

struct AggregateStats {
    Protocol protocol = Protocol::dct;
    std::size_t M = 0;
    std::size_t L = 0;
    double c = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t errors = 0;
    double err_rate = 0.0;
    double err_lo = 0.0;
    double err_hi = 0.0;
    /// Joint frequency of (true = i, wrong decision).
    std::vector<double> err_by_hypothesis;
    double mean_N = 0.0;
    double mean_N2 = 0.0;
    double mean_Nc = 0.0;
    std::uint64_t max_Nc = 0;
    double max_consensus_spread = 0.0;
    double risk = 0.0;
    /// Mean over trials and sensors of the per-sensor message count.
    double mean_comms = 0.0;
    double mean_samples = 0.0;
    std::uint64_t split_decisions = 0;
    BoundReport bounds;
    double slack = 0.0;
    std::uint64_t seed = 0;
};

struct MonteCarloResult {
    AggregateStats stats;
    std::vector<TrialRecord> records;
    /// Filled for the consensus-based protocol when cfg.log_events is set.
    std::vector<CctEventLog> logs;
};

/// Runs one trial with its own derived seed.
TrialRecord run_trial(const Experiment& exp, const ExperimentConfig& cfg, std::uint64_t trial_seed,
                      CctEventLog* log = nullptr);

/// Trial t uses derive_seed(cell_seed, t). Trials run under OpenMP; results
/// are stored by index and aggregated in index order, so the output does not
/// depend on scheduling. A timeout rethrows the one from the lowest trial index.
MonteCarloResult run_monte_carlo(const Experiment& exp, const ExperimentConfig& cfg, std::uint64_t cell_seed,
                                 bool keep_records = false);

/// Same contract, plain loop. Kept as the reference for the parallel path.
MonteCarloResult run_monte_carlo_serial(const Experiment& exp, const ExperimentConfig& cfg,
                                        std::uint64_t cell_seed, bool keep_records = false);

/// Folds records (in the given order) into summary statistics.
AggregateStats aggregate(const std::vector<TrialRecord>& records, const Experiment& exp,
                         const ExperimentConfig& cfg, std::uint64_t cell_seed);

/// Builds the experiment and runs one block with cell seed derive_seed(seed, 0).
MonteCarloResult run_experiment(const ExperimentConfig& cfg, bool keep_records = false);

struct SweepRow {
    double value = 0.0;
    std::optional<AggregateStats> stats;
    std::string error;
};

/// One block per value of cfg.axis. Cell j uses derive_seed(seed, j). The
/// model comes from the master seed in every cell, so sweeping L grows one
/// fixed network. Failed cells record the error and the sweep continues.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg);

std::string csv_header();
std::string csv_row(const AggregateStats& s);
/// Shortest round-trip decimal form.
std::string format_double(double x);

/// True if `xs` is increasing with at most `inversions` adjacent drops.
bool mostly_increasing(const std::vector<double>& xs, std::size_t inversions = 0);
bool mostly_decreasing(const std::vector<double>& xs, std::size_t inversions = 0);

}  // namespace chernet
