#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chernet/chernoff.hpp"
#include "chernet/dct.hpp"
#include "chernet/network.hpp"
#include "chernet/trial.hpp"

namespace chernet {

/// State of one sensor in the consensus-based test.
struct CctSensorState {
    /// Capability estimate. Evolves by the weighted average until Phase 1
    /// ends at this sensor, then is frozen and scaled by L.
    std::vector<double> est;
    /// Unscaled frozen estimate, rebroadcast to neighbors still in Phase 1.
    std::vector<double> frozen;
    std::uint64_t y = 0;  // consecutive rounds of local c/L^2-agreement
    std::uint64_t z = 0;  // propagated agreement counter
    bool phase1_done = false;
    std::uint64_t phase1_round = 0;

    SensorTestState test;
    RandomStream rng;
    /// v_{i,l} for this sensor.
    std::vector<double> capability;

    std::optional<std::size_t> local_decision;
    std::optional<std::size_t> prev_local_decision;
    std::uint64_t x = 0;  // rounds the neighborhood has agreed with this sensor
    std::uint64_t d = 0;  // network-percolated minimum of x

    bool halted = false;
    std::uint64_t halt_round = 0;
    std::optional<std::size_t> final_decision;

    MessageCounts messages;

    CctSensorState(std::size_t sensor, std::vector<double> v_row, std::uint64_t seed);
};

enum class CctEventKind { consensus, phase1_term, local, halt };

/// One line of the optional trial log.
struct CctEvent {
    std::uint64_t round = 0;
    std::size_t sensor = 0;
    CctEventKind kind = CctEventKind::consensus;
    /// Local or final decision; -1 for null. Unused for consensus events.
    long hypothesis = -1;
    std::uint64_t d = 0;
    std::uint64_t x = 0;
    /// Estimate vector: unscaled for consensus, scaled for phase1_term.
    std::vector<double> values;
};

/// CSV event log. Header:
///   round,sensor,event,hypothesis,d,x,values
/// `event` is one of consensus|phase1_term|local|halt, `values` is a
/// ';'-separated list printed with 17 significant digits. A `consensus`
/// line at round 0 records each sensor's initial estimate.
struct CctEventLog {
    std::vector<CctEvent> events;

    void write_csv(std::ostream& out) const;
    static CctEventLog read_csv(std::istream& in);
};

/// Network-wide state driven by the per-phase round functions.
struct CctNetwork {
    const NetworkGraph* graph = nullptr;
    const WeightMatrix* weights = nullptr;
    double c = 0.0;
    std::vector<CctSensorState> sensors;
    /// Sensors that will receive a Phase-1 termination bit at the next round boundary.
    std::vector<bool> phase1_inbox;
    /// Sensors that will receive the Phase-3 termination bit (with the final decision).
    std::vector<std::optional<std::size_t>> halt_inbox;
    CctEventLog* log = nullptr;

    CctNetwork(const NetworkGraph& g, const WeightMatrix& w, const CapabilityTable& table, double c,
               std::uint64_t seed, CctEventLog* log = nullptr);

    std::size_t size() const { return sensors.size(); }
    bool all_phase1_done() const;
    bool all_halted() const;
};

/// Phase 1 (linear consensus with localized stopping) for one round:
/// pending termination bits are delivered first, then every sensor still in
/// Phase 1 broadcasts (est, z), averages with its neighbors' broadcasts,
/// updates z = min(y, min_{N u {l}} z) + 1 using last round's y, terminates
/// when z > L+1, and otherwise updates y against the c/L^2 threshold.
void phase1_round(CctNetwork& net, std::uint64_t round);

/// Phase 2 at one sensor: one Chernoff step, then, once Phase 1 is over,
/// local_decision = leader if margin >= (v_leader / est_leader) |log c|,
/// else null. Throws ConfigurationError if est_leader <= 0.
void phase2_round(CctSensorState& sensor, const ObservationModel& model, const PolicyCache& policies,
                  double c, std::size_t true_hypothesis);

/// Phase 3 for one round: every sensor past Phase 1 broadcasts
/// (local decision, d), updates d from last round's counters, then x from
/// this round's decisions. A sensor with d > L+1 halts with the decision
/// its agreement streak certified and sends the termination bit.
void phase3_round(CctNetwork& net, std::uint64_t round);

/// Delivers termination bits queued in the previous round: receivers halt,
/// adopt the final decision and forward the bit.
void deliver_halts(CctNetwork& net, std::uint64_t round);

/// Full consensus-based trial. Sensor l draws from derive_seed(seed, l).
/// decision_time is the round in which the last sensor halted.
TrialRecord run_cct_trial(const ObservationModel& model, const PolicyCache& policies,
                          const CapabilityTable& table, const NetworkGraph& graph,
                          const WeightMatrix& weights, double c, std::size_t true_hypothesis,
                          std::uint64_t seed, CctEventLog* log = nullptr,
                          std::uint64_t round_cap = kDefaultStepCap);

/// Max over sensor pairs and hypotheses of |est_l(i) - est_j(i)|.
double max_pairwise_spread(const std::vector<std::vector<double>>& estimates);

}  // namespace chernet
