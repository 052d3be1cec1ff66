#include "chernet/maximin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace chernet {

DivergenceTable::DivergenceTable(std::size_t hypotheses, std::size_t actions)
    : hypotheses_(hypotheses), actions_(actions), d_(hypotheses * hypotheses * actions, 0.0) {}

double DivergenceTable::max_entry() const {
    return d_.empty() ? 0.0 : *std::max_element(d_.begin(), d_.end());
}

DivergenceTable DivergenceTable::scaled(double s) const {
    DivergenceTable out = *this;
    for (double& x : out.d_) x *= s;
    return out;
}

DivergenceTable divergence_table(const ObservationModel& model, std::size_t sensor) {
    const std::size_t M = model.hypotheses();
    const std::size_t K = model.actions();
    DivergenceTable table(M, K);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            if (i == j) continue;
            for (std::size_t k = 0; k < K; ++k) {
                table.at(i, j, k) = kl_divergence(model.dist(i, sensor, k), model.dist(j, sensor, k));
            }
        }
    }
    return table;
}

double maximin_objective(const DivergenceTable& table, std::size_t hypothesis,
                         std::span<const double> q) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < table.hypotheses(); ++j) {
        if (j == hypothesis) continue;
        const auto row = table.row(hypothesis, j);
        worst = std::min(worst, std::inner_product(row.begin(), row.end(), q.begin(), 0.0));
    }
    return worst;
}

namespace {

// Dense Gaussian elimination with partial pivoting; nullopt when singular.
std::optional<std::vector<double>> solve_dense(std::vector<double> a, std::vector<double> b,
                                               std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (std::abs(a[pivot * n + col]) < 1e-13) return std::nullopt;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return x;
}

// Visit every size-`k` subset of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(std::span<const std::size_t>(idx));
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
        if (pos == 0) return;
        ++idx[pos - 1];
        for (std::size_t p = pos; p < k; ++p) idx[p] = idx[p - 1] + 1;
    }
}

bool lex_less(std::span<const double> a, std::span<const double> b, double tol) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k] - tol) return true;
        if (a[k] > b[k] + tol) return false;
    }
    return false;
}

ActionPMF uniform_flagged(std::size_t actions) {
    ActionPMF out;
    out.q.assign(actions, 1.0 / static_cast<double>(actions));
    out.value = 0.0;
    out.indistinguishable = true;
    return out;
}

void check_solution(const DivergenceTable& table, std::size_t i, const ActionPMF& pmf) {
    const std::size_t M = table.hypotheses();
    const std::size_t K = table.actions();
    double lower = 0.0;  // max_k min_j d
    for (std::size_t k = 0; k < K; ++k) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < M; ++j) {
            if (j != i) m = std::min(m, table(i, j, k));
        }
        lower = std::max(lower, m);
    }
    double upper = std::numeric_limits<double>::infinity();  // min_j max_k d
    for (std::size_t j = 0; j < M; ++j) {
        if (j == i) continue;
        const auto row = table.row(i, j);
        upper = std::min(upper, *std::max_element(row.begin(), row.end()));
    }
    const double tol = 1e-9 * std::max(1.0, table.max_entry());
    if (pmf.value < lower - tol || pmf.value > upper + tol) {
        std::ostringstream msg;
        msg << "maximin value " << pmf.value << " outside duality sandwich [" << lower << ", "
            << upper << "]";
        throw std::logic_error(msg.str());
    }
    if (!pmf.indistinguishable && maximin_objective(table, i, pmf.q) < pmf.value - 1e-8) {
        throw std::logic_error("maximin solution violates a constraint");
    }
}

}  // namespace

ActionPMF solve_maximin(const DivergenceTable& table, std::size_t hypothesis) {
    const std::size_t M = table.hypotheses();
    const std::size_t K = table.actions();
    if (M < 2) throw std::invalid_argument("solve_maximin: need at least two hypotheses");
    if (hypothesis >= M) throw std::out_of_range("solve_maximin: hypothesis out of range");

    std::vector<std::size_t> rivals;
    for (std::size_t j = 0; j < M; ++j) {
        if (j != hypothesis) rivals.push_back(j);
    }
    const std::size_t m = rivals.size();
    const double scale = std::max(1.0, table.max_entry());
    const double value_tol = 1e-12 * scale;

    std::optional<ActionPMF> best;
    std::vector<double> q(K);
    // A vertex of {(q, t)} fixes K - s coordinates of q at zero and makes s
    // rival constraints tight; together with sum(q) = 1 that is s + 1 equations.
    for (std::size_t s = 1; s <= std::min(K, m); ++s) {
        const std::size_t n = s + 1;
        for_each_combination(K, s, [&](std::span<const std::size_t> support) {
            for_each_combination(m, s, [&](std::span<const std::size_t> tight) {
                std::vector<double> a(n * n, 0.0);
                std::vector<double> b(n, 0.0);
                for (std::size_t r = 0; r < s; ++r) {
                    const auto row = table.row(hypothesis, rivals[tight[r]]);
                    for (std::size_t c = 0; c < s; ++c) a[r * n + c] = row[support[c]];
                    a[r * n + s] = -1.0;
                }
                for (std::size_t c = 0; c < s; ++c) a[s * n + c] = 1.0;
                b[s] = 1.0;
                const auto x = solve_dense(std::move(a), std::move(b), n);
                if (!x) return;
                std::fill(q.begin(), q.end(), 0.0);
                for (std::size_t c = 0; c < s; ++c) {
                    const double v = (*x)[c];
                    if (v < -1e-12) return;
                    q[support[c]] = std::max(v, 0.0);
                }
                const double total = std::accumulate(q.begin(), q.end(), 0.0);
                for (double& v : q) v /= total;
                const double value = maximin_objective(table, hypothesis, q);
                // The tight constraints define t; any other violated one makes the vertex infeasible.
                if (value < (*x)[s] - 1e-10 * scale) return;
                if (!best || value > best->value + value_tol ||
                    (value > best->value - value_tol && lex_less(q, best->q, 1e-12))) {
                    best = ActionPMF{q, value, false};
                }
            });
        });
    }

    if (!best || best->value <= 0.0) {
        ActionPMF flagged = uniform_flagged(K);
        check_solution(table, hypothesis, flagged);
        return flagged;
    }
    check_solution(table, hypothesis, *best);
    return *best;
}

ActionPMF brute_force_maximin(const DivergenceTable& table, std::size_t hypothesis,
                              double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 0.5)) {
        throw std::invalid_argument("brute_force_maximin: grid_step must lie in (0, 0.5]");
    }
    const std::size_t K = table.actions();
    const auto n = static_cast<std::size_t>(std::ceil(1.0 / grid_step - 1e-9));
    std::vector<std::size_t> counts(K, 0);
    std::vector<double> q(K);
    ActionPMF best;
    best.value = -1.0;

    // Compositions of n into K parts, enumerated with q lexicographically ascending.
    auto visit = [&](auto&& self, std::size_t k, std::size_t remaining) -> void {
        if (k + 1 == K) {
            counts[k] = remaining;
            for (std::size_t c = 0; c < K; ++c) q[c] = static_cast<double>(counts[c]) / n;
            const double value = maximin_objective(table, hypothesis, q);
            if (value > best.value + 1e-15) {
                best.q = q;
                best.value = value;
            }
            return;
        }
        for (std::size_t c = 0; c <= remaining; ++c) {
            counts[k] = c;
            self(self, k + 1, remaining - c);
        }
    };
    visit(visit, 0, n);

    if (best.value <= 0.0) return uniform_flagged(K);
    return best;
}

PolicyCache::PolicyCache(const ObservationModel& model)
    : sensors_(model.sensors()), hypotheses_(model.hypotheses()) {
    policies_.reserve(sensors_ * hypotheses_);
    cdfs_.reserve(sensors_ * hypotheses_);
    for (std::size_t l = 0; l < sensors_; ++l) {
        const DivergenceTable table = divergence_table(model, l);
        for (std::size_t i = 0; i < hypotheses_; ++i) {
            policies_.push_back(solve_maximin(table, i));
            const auto& q = policies_.back().q;
            std::vector<double> cdf(q.size());
            std::partial_sum(q.begin(), q.end(), cdf.begin());
            cdfs_.push_back(std::move(cdf));
        }
    }
}

std::size_t PolicyCache::draw_action(std::size_t sensor, std::size_t hypothesis,
                                     RandomStream& rng) const {
    const auto& cdf = cdfs_[sensor * hypotheses_ + hypothesis];
    const double u = uniform01(rng) * cdf.back();
    // First action whose cumulative mass exceeds u; never a zero-mass action.
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace chernet
