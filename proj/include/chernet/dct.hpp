#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chernet/chernoff.hpp"
#include "chernet/maximin.hpp"
#include "chernet/probability.hpp"
#include "chernet/trial.hpp"

namespace chernet {

/// Sensor capabilities v_{i,l}, network totals I(i) = sum_l v_{i,l} and
/// threshold shares rho_{i,l} = v_{i,l} / I(i).
class CapabilityTable {
public:
    CapabilityTable() = default;
    /// Rows are sensors, columns hypotheses. Throws ConfigurationError when
    /// some v_{i,l} is not strictly positive.
    CapabilityTable(std::size_t sensors, std::size_t hypotheses, std::vector<double> v);

    std::size_t sensors() const { return sensors_; }
    std::size_t hypotheses() const { return hypotheses_; }
    double v(std::size_t sensor, std::size_t hypothesis) const { return v_[sensor * hypotheses_ + hypothesis]; }
    double rho(std::size_t sensor, std::size_t hypothesis) const { return rho_[sensor * hypotheses_ + hypothesis]; }
    double total(std::size_t hypothesis) const { return totals_[hypothesis]; }
    const std::vector<double>& totals() const { return totals_; }
    double max_total() const;
    /// v row of one sensor, (v_{1,l}, ..., v_{M,l}).
    std::vector<double> row(std::size_t sensor) const;

private:
    std::size_t sensors_ = 0;
    std::size_t hypotheses_ = 0;
    std::vector<double> v_;
    std::vector<double> totals_;
    std::vector<double> rho_;
};

CapabilityTable capability_table(const PolicyCache& policies);

/// Initialization phase: each sensor reports v_l, the fusion center answers
/// with rho_l. Two messages per sensor, counted into `comms` when given.
CapabilityTable dct_initialize(const ObservationModel& model, const PolicyCache& policies,
                               std::vector<std::uint64_t>* comms = nullptr);

/// Per-sensor state of the test phase.
struct DctSensor {
    SensorTestState test;
    /// rho_{i,l} |log c| per hypothesis, fixed at setup.
    std::vector<double> thresholds;
    std::optional<std::size_t> last_sent;
    std::uint64_t last_sent_round = 0;
    RandomStream rng;

    DctSensor(std::size_t sensor, const CapabilityTable& table, double c, std::uint64_t seed);
};

struct DctMessage {
    std::size_t sender = 0;
    std::size_t hypothesis = 0;
};

/// One Chernoff step at a sensor, then the trigger check
///   margin >= rho_{leader,l} |log c|.
/// A message goes out only when the triggered hypothesis differs from the
/// last one this sensor sent. The sensor never stops on its own.
std::optional<DctMessage> dct_sensor_round(DctSensor& sensor, const ObservationModel& model,
                                           const PolicyCache& policies, std::size_t true_hypothesis,
                                           std::uint64_t round);

struct FusionState {
    std::vector<std::optional<std::size_t>> latest;
    std::optional<std::size_t> decided;
    std::vector<std::uint64_t> comms;

    explicit FusionState(std::size_t sensors) : latest(sensors), comms(sensors, 0) {}
};

/// Records each incoming decision (one message each). When every sensor's
/// latest decision names the same hypothesis, decides it and queues a halt
/// message to every sensor. Returns true on halt.
bool dct_fusion_round(FusionState& fusion, std::span<const DctMessage> inbox);

/// Full decentralized trial. Sensor l draws from the stream
/// derive_seed(seed, l). Throws TimeoutError past `round_cap` rounds.
TrialRecord run_dct_trial(const ObservationModel& model, const PolicyCache& policies,
                          const CapabilityTable& table, double c, std::size_t true_hypothesis,
                          std::uint64_t seed, std::uint64_t round_cap = kDefaultStepCap);

}  // namespace chernet
