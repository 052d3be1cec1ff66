#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chernet/errors.hpp"
#include "chernet/maximin.hpp"
#include "chernet/probability.hpp"

namespace chernet {

inline constexpr std::uint64_t kDefaultStepCap = 10'000'000;

/// Leader hypothesis and its log-likelihood lead over the runner-up.
struct WorstCaseLLR {
    std::size_t leader = 0;
    double margin = 0.0;
};

/// Index of the largest entry, lowest index on ties.
std::size_t argmax_lowest(const std::vector<double>& values);

/// Cumulative log-likelihoods at one sensor. With a uniform prior the MAP
/// hypothesis is the log-likelihood argmax and the posterior ratio of the
/// stopping rule is the leader's margin.
class SensorTestState {
public:
    SensorTestState(std::size_t hypotheses, std::size_t sensor_id)
        : cum_llh_(hypotheses, 0.0), sensor_id_(sensor_id) {}

    const std::vector<double>& cum_llh() const { return cum_llh_; }
    std::uint64_t steps() const { return steps_; }
    std::size_t temp_decision() const { return temp_decision_; }
    std::size_t sensor_id() const { return sensor_id_; }

    /// Adds one observation's log-likelihood vector.
    void absorb(std::span<const double> llh);
    /// Same as absorb(log_likelihoods(model, sensor_id, action, observation)).
    void absorb(const ObservationModel& model, std::size_t action, std::size_t observation);
    void reset();

private:
    std::vector<double> cum_llh_;
    std::uint64_t steps_ = 0;
    std::size_t temp_decision_ = 0;
    std::size_t sensor_id_ = 0;
};

WorstCaseLLR worst_case_llr(const SensorTestState& state);
WorstCaseLLR worst_case_llr(const std::vector<double>& cum_llh);

struct StepOutcome {
    std::size_t action = 0;
    std::size_t observation = 0;
};

/// One Chernoff step: draw u ~ Q_{i*}, observe under the true hypothesis,
/// update the likelihoods and the temporary decision. Consumes two engine
/// outputs (action, then observation).
StepOutcome step(SensorTestState& state, const ObservationModel& model, const PolicyCache& policies,
                 RandomStream& rng, std::size_t true_hypothesis);

struct StandardTestResult {
    std::size_t decision = 0;
    std::uint64_t stopping_time = 0;
};

/// Single-sensor Chernoff test: steps until the margin reaches `threshold`.
/// Throws TimeoutError after `step_cap` steps.
StandardTestResult run_standard_test(const ObservationModel& model, std::size_t sensor,
                                     const PolicyCache& policies, double threshold,
                                     std::size_t true_hypothesis, RandomStream& rng,
                                     std::uint64_t step_cap = kDefaultStepCap);

/// Fusion-center model: one super-sensor whose action index l * M + k
/// activates sensor l with probing action u_k.
ObservationModel build_fct_model(const ObservationModel& model);

}  // namespace chernet
