#include "chernet/probability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace chernet {

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) {
        throw DimensionError("categorical needs an alphabet of at least 2 symbols");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("categorical entries must be finite and non-negative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "categorical entries sum to " << total << ", expected 1";
        throw std::invalid_argument(msg.str());
    }
}

Categorical Categorical::clamped(double floor) const {
    std::vector<double> out(probs_.size());
    std::transform(probs_.begin(), probs_.end(), out.begin(),
                   [floor](double p) { return std::clamp(p, floor, 1.0 - floor); });
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& p : out) p /= total;
    // Renormalization can leave a residue of a few ulp; fold it into the largest entry.
    const double residue = 1.0 - std::accumulate(out.begin(), out.end(), 0.0);
    *std::max_element(out.begin(), out.end()) += residue;
    return Categorical(std::move(out));
}

double kl_divergence(const Categorical& p, const Categorical& q) {
    if (p.size() != q.size()) {
        throw DimensionError("kl_divergence: alphabet sizes differ");
    }
    double d = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        if (p[a] == 0.0) continue;
        if (q[a] == 0.0) {
            throw InfiniteDivergenceError("kl_divergence: q(a) = 0 where p(a) > 0");
        }
        d += p[a] * std::log(p[a] / q[a]);
    }
    // Rounding can produce -1e-17 for p == q.
    return std::max(d, 0.0);
}

std::size_t sample(const Categorical& p, RandomStream& rng) {
    const double u = uniform01(rng);
    double cdf = 0.0;
    const std::size_t last = p.size() - 1;
    for (std::size_t a = 0; a < last; ++a) {
        cdf += p[a];
        if (u < cdf) return a;
    }
    // Zero-probability tail symbols are never returned.
    std::size_t a = last;
    while (a > 0 && p[a] == 0.0) --a;
    return a;
}

ObservationModel::ObservationModel(ModelShape shape, std::vector<Categorical> dists, Check check)
    : shape_(shape), dists_(std::move(dists)) {
    if (shape_.hypotheses < 2 || shape_.sensors < 1 || shape_.actions < 1 || shape_.alphabet < 2) {
        throw DimensionError("observation model needs M >= 2, L >= 1, K >= 1, A >= 2");
    }
    if (dists_.size() != shape_.hypotheses * shape_.sensors * shape_.actions) {
        throw DimensionError("observation model: expected M*L*K distributions");
    }
    validate(check);
    log_probs_.reserve(dists_.size() * shape_.alphabet);
    for (const auto& d : dists_) {
        for (double p : d.probs()) log_probs_.push_back(std::log(p));
    }
}

void ObservationModel::validate(Check check) const {
    // Clamp-then-renormalize can dip a hair under the floor.
    const double min_entry = kProbabilityFloor * (1.0 - 1e-3);
    for (const auto& d : dists_) {
        if (d.size() != shape_.alphabet) {
            throw DimensionError("observation model: inconsistent alphabet size");
        }
        for (double p : d.probs()) {
            if (p < min_entry) {
                throw std::invalid_argument(
                    "observation model: entry below the probability floor (divergence would be unbounded)");
            }
        }
    }
    if (check == Check::floor_only) return;
    const std::size_t M = shape_.hypotheses;
    for (std::size_t l = 0; l < shape_.sensors; ++l) {
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = 0; j < M; ++j) {
                if (i == j) continue;
                bool separated = false;
                for (std::size_t k = 0; k < shape_.actions && !separated; ++k) {
                    separated = kl_divergence(dists_[index(i, l, k)], dists_[index(j, l, k)]) > 0.0;
                }
                if (!separated) {
                    std::ostringstream msg;
                    msg << "observation model: hypotheses " << i << " and " << j
                        << " are indistinguishable at sensor " << l << " under every action";
                    throw std::invalid_argument(msg.str());
                }
            }
        }
    }
}

const Categorical& ObservationModel::dist(std::size_t hypothesis, std::size_t sensor,
                                          std::size_t action) const {
    if (hypothesis >= shape_.hypotheses || sensor >= shape_.sensors || action >= shape_.actions) {
        throw std::out_of_range("observation model index out of range");
    }
    return dists_[index(hypothesis, sensor, action)];
}

void ObservationModel::log_likelihoods(std::size_t sensor, std::size_t action,
                                       std::size_t observation, std::span<double> out) const {
    if (sensor >= shape_.sensors || action >= shape_.actions || observation >= shape_.alphabet) {
        throw std::out_of_range("log_likelihoods: index out of range");
    }
    if (out.size() != shape_.hypotheses) {
        throw DimensionError("log_likelihoods: output span must hold M entries");
    }
    for (std::size_t i = 0; i < shape_.hypotheses; ++i) {
        out[i] = log_prob(i, sensor, action, observation);
    }
}

ObservationModel ObservationModel::restricted_to(std::size_t sensor) const {
    if (sensor >= shape_.sensors) throw std::out_of_range("restricted_to: sensor out of range");
    ModelShape s = shape_;
    s.sensors = 1;
    std::vector<Categorical> out;
    out.reserve(s.hypotheses * s.actions);
    for (std::size_t i = 0; i < s.hypotheses; ++i) {
        for (std::size_t k = 0; k < s.actions; ++k) out.push_back(dist(i, sensor, k));
    }
    return ObservationModel(s, std::move(out), Check::floor_only);
}

std::vector<double> log_likelihoods(const ObservationModel& model, std::size_t sensor,
                                    std::size_t action, std::size_t observation) {
    std::vector<double> out(model.hypotheses());
    model.log_likelihoods(sensor, action, observation, out);
    return out;
}

}  // namespace chernet
