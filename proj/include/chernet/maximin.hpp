#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chernet/probability.hpp"

namespace chernet {

/// d(i, j, k) = D(p_{i,l}^{u_k} || p_{j,l}^{u_k}) for one sensor l.
class DivergenceTable {
public:
    DivergenceTable(std::size_t hypotheses, std::size_t actions);

    std::size_t hypotheses() const { return hypotheses_; }
    std::size_t actions() const { return actions_; }

    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return d_[(i * hypotheses_ + j) * actions_ + k];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return d_[(i * hypotheses_ + j) * actions_ + k];
    }

    /// Row d(i, j, .) as a span over actions.
    std::span<const double> row(std::size_t i, std::size_t j) const {
        return {d_.data() + (i * hypotheses_ + j) * actions_, actions_};
    }

    double max_entry() const;
    DivergenceTable scaled(double s) const;

private:
    std::size_t hypotheses_;
    std::size_t actions_;
    std::vector<double> d_;
};

DivergenceTable divergence_table(const ObservationModel& model, std::size_t sensor);

/// Maximin action distribution for one hypothesis at one sensor.
struct ActionPMF {
    std::vector<double> q;
    /// max_q min_{j != i} sum_k q(k) d(i, j, k): the capability v_{i,l}.
    double value = 0.0;
    /// Set when value == 0: the hypothesis cannot be told apart from some
    /// other one at this sensor; q is then uniform.
    bool indistinguishable = false;
};

/// Exact maximin solution by vertex enumeration of
///   maximize t  s.t.  sum_k q_k d(i,j,k) >= t  (j != i),  q in the simplex.
/// Among optimal vertices the lexicographically smallest q is returned.
ActionPMF solve_maximin(const DivergenceTable& table, std::size_t hypothesis);

/// Grid search over the simplex with spacing `grid_step`; test oracle for
/// solve_maximin. Cost grows as (1/step)^(K-1), keep K small.
ActionPMF brute_force_maximin(const DivergenceTable& table, std::size_t hypothesis, double grid_step);

/// min_{j != i} sum_k q_k d(i, j, k).
double maximin_objective(const DivergenceTable& table, std::size_t hypothesis,
                         std::span<const double> q);

/// Per-sensor, per-hypothesis maximin policies, computed once at setup and
/// read-only afterwards.
class PolicyCache {
public:
    PolicyCache() = default;
    explicit PolicyCache(const ObservationModel& model);

    std::size_t sensors() const { return sensors_; }
    std::size_t hypotheses() const { return hypotheses_; }

    const ActionPMF& policy(std::size_t sensor, std::size_t hypothesis) const {
        return policies_[sensor * hypotheses_ + hypothesis];
    }
    double capability(std::size_t sensor, std::size_t hypothesis) const {
        return policy(sensor, hypothesis).value;
    }

    /// Draws an action from Q_{hypothesis} at `sensor`; one engine output.
    std::size_t draw_action(std::size_t sensor, std::size_t hypothesis, RandomStream& rng) const;

private:
    std::size_t sensors_ = 0;
    std::size_t hypotheses_ = 0;
    std::vector<ActionPMF> policies_;
    std::vector<std::vector<double>> cdfs_;
};

}  // namespace chernet
