#include "chernet/dct.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chernet/errors.hpp"

namespace chernet {

CapabilityTable::CapabilityTable(std::size_t sensors, std::size_t hypotheses, std::vector<double> values)
    : sensors_(sensors), hypotheses_(hypotheses), v_(std::move(values)), totals_(hypotheses, 0.0),
      rho_(sensors * hypotheses, 0.0) {
    if (v_.size() != sensors * hypotheses) {
        throw std::invalid_argument("capability table: expected L*M entries");
    }
    for (std::size_t l = 0; l < sensors; ++l) {
        for (std::size_t i = 0; i < hypotheses; ++i) {
            if (!(v(l, i) > 0.0)) {
                std::ostringstream msg;
                msg << "zero capability v for hypothesis " << i << " at sensor " << l
                    << ": the sensor cannot separate that hypothesis from some rival";
                throw ConfigurationError(msg.str());
            }
            totals_[i] += v(l, i);
        }
    }
    for (std::size_t l = 0; l < sensors; ++l) {
        for (std::size_t i = 0; i < hypotheses; ++i) {
            rho_[l * hypotheses + i] = v(l, i) / totals_[i];
        }
    }
}

double CapabilityTable::max_total() const {
    return *std::max_element(totals_.begin(), totals_.end());
}

std::vector<double> CapabilityTable::row(std::size_t sensor) const {
    return {v_.begin() + static_cast<std::ptrdiff_t>(sensor * hypotheses_),
            v_.begin() + static_cast<std::ptrdiff_t>((sensor + 1) * hypotheses_)};
}

CapabilityTable capability_table(const PolicyCache& policies) {
    std::vector<double> v;
    v.reserve(policies.sensors() * policies.hypotheses());
    for (std::size_t l = 0; l < policies.sensors(); ++l) {
        for (std::size_t i = 0; i < policies.hypotheses(); ++i) v.push_back(policies.capability(l, i));
    }
    return CapabilityTable(policies.sensors(), policies.hypotheses(), std::move(v));
}

CapabilityTable dct_initialize(const ObservationModel& model, const PolicyCache& policies,
                               std::vector<std::uint64_t>* comms) {
    if (policies.sensors() != model.sensors() || policies.hypotheses() != model.hypotheses()) {
        throw std::invalid_argument("dct_initialize: policy cache does not match the model");
    }
    CapabilityTable table = capability_table(policies);
    if (comms) {
        comms->assign(model.sensors(), 0);
        for (auto& c : *comms) c += 2;  // v up, rho down
    }
    return table;
}

DctSensor::DctSensor(std::size_t sensor, const CapabilityTable& table, double c, std::uint64_t seed)
    : test(table.hypotheses(), sensor), thresholds(table.hypotheses()), rng(seed) {
    const double log_c = std::abs(std::log(c));
    for (std::size_t i = 0; i < table.hypotheses(); ++i) thresholds[i] = table.rho(sensor, i) * log_c;
}

std::optional<DctMessage> dct_sensor_round(DctSensor& sensor, const ObservationModel& model,
                                           const PolicyCache& policies, std::size_t true_hypothesis,
                                           std::uint64_t round) {
    step(sensor.test, model, policies, sensor.rng, true_hypothesis);
    const WorstCaseLLR w = worst_case_llr(sensor.test);
    if (w.margin < sensor.thresholds[w.leader]) return std::nullopt;
    if (sensor.last_sent == w.leader) return std::nullopt;
    sensor.last_sent = w.leader;
    sensor.last_sent_round = round;
    return DctMessage{sensor.test.sensor_id(), w.leader};
}

bool dct_fusion_round(FusionState& fusion, std::span<const DctMessage> inbox) {
    for (const auto& msg : inbox) {
        fusion.latest.at(msg.sender) = msg.hypothesis;
        ++fusion.comms[msg.sender];
    }
    if (fusion.decided || fusion.latest.empty()) return false;
    const auto& first = fusion.latest.front();
    if (!first) return false;
    const bool unanimous = std::all_of(fusion.latest.begin(), fusion.latest.end(),
                                       [&](const auto& h) { return h == first; });
    if (!unanimous) return false;
    fusion.decided = *first;
    for (auto& c : fusion.comms) ++c;  // halt broadcast
    return true;
}

TrialRecord run_dct_trial(const ObservationModel& model, const PolicyCache& policies,
                          const CapabilityTable& table, double c, std::size_t true_hypothesis,
                          std::uint64_t seed, std::uint64_t round_cap) {
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("run_dct_trial: c must lie in (0, 1)");
    const std::size_t L = model.sensors();
    std::vector<DctSensor> sensors;
    sensors.reserve(L);
    for (std::size_t l = 0; l < L; ++l) sensors.emplace_back(l, table, c, derive_seed(seed, l));

    FusionState fusion(L);
    fusion.comms.assign(L, 2);  // initialization exchange
    std::vector<DctMessage> inbox;
    inbox.reserve(L);

    for (std::uint64_t round = 1; round <= round_cap; ++round) {
        inbox.clear();
        for (auto& s : sensors) {
            if (auto msg = dct_sensor_round(s, model, policies, true_hypothesis, round)) inbox.push_back(*msg);
        }
        if (dct_fusion_round(fusion, inbox)) {
            TrialRecord rec;
            rec.decision = *fusion.decided;
            rec.true_hypothesis = true_hypothesis;
            rec.correct = rec.decision == true_hypothesis;
            rec.decision_time = round;
            rec.comms = fusion.comms;
            rec.samples = round * L;
            rec.seed = seed;
            rec.trigger_times.reserve(L);
            for (const auto& s : sensors) rec.trigger_times.push_back(s.last_sent_round);
            return rec;
        }
    }
    std::ostringstream msg;
    msg << "decentralized trial exceeded " << round_cap << " rounds (seed " << seed << ")";
    throw TimeoutError(msg.str(), seed);
}

}  // namespace chernet
