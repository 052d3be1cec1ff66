#include "chernet/chernoff.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace chernet {

std::size_t argmax_lowest(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

void SensorTestState::absorb(std::span<const double> llh) {
    for (std::size_t i = 0; i < cum_llh_.size(); ++i) cum_llh_[i] += llh[i];
    ++steps_;
    temp_decision_ = argmax_lowest(cum_llh_);
}

void SensorTestState::absorb(const ObservationModel& model, std::size_t action,
                             std::size_t observation) {
    for (std::size_t i = 0; i < cum_llh_.size(); ++i) {
        cum_llh_[i] += model.log_prob(i, sensor_id_, action, observation);
    }
    ++steps_;
    temp_decision_ = argmax_lowest(cum_llh_);
}

void SensorTestState::reset() {
    std::fill(cum_llh_.begin(), cum_llh_.end(), 0.0);
    steps_ = 0;
    temp_decision_ = 0;
}

WorstCaseLLR worst_case_llr(const std::vector<double>& cum_llh) {
    if (cum_llh.size() < 2) throw std::invalid_argument("worst_case_llr: need M >= 2");
    WorstCaseLLR out;
    out.leader = argmax_lowest(cum_llh);
    double runner_up = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cum_llh.size(); ++j) {
        if (j != out.leader) runner_up = std::max(runner_up, cum_llh[j]);
    }
    out.margin = cum_llh[out.leader] - runner_up;
    return out;
}

WorstCaseLLR worst_case_llr(const SensorTestState& state) { return worst_case_llr(state.cum_llh()); }

StepOutcome step(SensorTestState& state, const ObservationModel& model, const PolicyCache& policies,
                 RandomStream& rng, std::size_t true_hypothesis) {
    const std::size_t sensor = state.sensor_id();
    StepOutcome out;
    out.action = policies.draw_action(sensor, state.temp_decision(), rng);
    out.observation = sample(model.dist(true_hypothesis, sensor, out.action), rng);
    state.absorb(model, out.action, out.observation);
    return out;
}

StandardTestResult run_standard_test(const ObservationModel& model, std::size_t sensor,
                                     const PolicyCache& policies, double threshold,
                                     std::size_t true_hypothesis, RandomStream& rng,
                                     std::uint64_t step_cap) {
    if (!(threshold > 0.0)) throw std::invalid_argument("run_standard_test: threshold must be > 0");
    SensorTestState state(model.hypotheses(), sensor);
    while (state.steps() < step_cap) {
        step(state, model, policies, rng, true_hypothesis);
        const WorstCaseLLR w = worst_case_llr(state);
        if (w.margin >= threshold) return {w.leader, state.steps()};
    }
    std::ostringstream msg;
    msg << "standard Chernoff test exceeded " << step_cap << " steps at sensor " << sensor;
    throw TimeoutError(msg.str(), 0);
}

ObservationModel build_fct_model(const ObservationModel& model) {
    ModelShape shape = model.shape();
    const std::size_t L = shape.sensors;
    const std::size_t K = shape.actions;
    shape.sensors = 1;
    shape.actions = K * L;
    std::vector<Categorical> dists;
    dists.reserve(shape.hypotheses * shape.actions);
    for (std::size_t i = 0; i < shape.hypotheses; ++i) {
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t k = 0; k < K; ++k) dists.push_back(model.dist(i, l, k));
        }
    }
    return ObservationModel(shape, std::move(dists), ObservationModel::Check::floor_only);
}

}  // namespace chernet
