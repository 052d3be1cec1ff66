#include "chernet/cct.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "chernet/errors.hpp"

namespace chernet {

CctSensorState::CctSensorState(std::size_t sensor, std::vector<double> v_row, std::uint64_t seed)
    : est(v_row), test(v_row.size(), sensor), rng(seed), capability(std::move(v_row)) {}

CctNetwork::CctNetwork(const NetworkGraph& g, const WeightMatrix& w, const CapabilityTable& table,
                       double c_, std::uint64_t seed, CctEventLog* log_)
    : graph(&g), weights(&w), c(c_), phase1_inbox(g.size(), false), halt_inbox(g.size()), log(log_) {
    if (w.size() != g.size() || table.sensors() != g.size()) {
        throw std::invalid_argument("CctNetwork: graph, weights and capability table sizes differ");
    }
    sensors.reserve(g.size());
    for (std::size_t l = 0; l < g.size(); ++l) sensors.emplace_back(l, table.row(l), derive_seed(seed, l));
    if (log) {
        for (std::size_t l = 0; l < g.size(); ++l) {
            log->events.push_back({0, l, CctEventKind::consensus, -1, 0, 0, sensors[l].est});
        }
    }
}

bool CctNetwork::all_phase1_done() const {
    return std::all_of(sensors.begin(), sensors.end(), [](const auto& s) { return s.phase1_done; });
}

bool CctNetwork::all_halted() const {
    return std::all_of(sensors.begin(), sensors.end(), [](const auto& s) { return s.halted; });
}

namespace {

void finish_phase1(CctNetwork& net, std::size_t l, std::uint64_t round) {
    auto& s = net.sensors[l];
    const double L = static_cast<double>(net.size());
    s.frozen = s.est;
    for (double& e : s.est) e *= L;
    s.phase1_done = true;
    s.phase1_round = round;
    s.x = 0;
    s.d = 0;
    ++s.messages.phase1_term;
    if (net.log) net.log->events.push_back({round, l, CctEventKind::phase1_term, -1, 0, 0, s.est});
}

long as_index(const std::optional<std::size_t>& h) { return h ? static_cast<long>(*h) : -1L; }

}  // namespace

void phase1_round(CctNetwork& net, std::uint64_t round) {
    const std::size_t L = net.size();
    if (net.all_phase1_done()) return;
    const auto& g = *net.graph;
    const Matrix& w = net.weights->matrix();
    const double local_tol = net.c / (static_cast<double>(L) * static_cast<double>(L));

    std::vector<bool> emitted(L, false);
    for (std::size_t l = 0; l < L; ++l) {
        if (net.phase1_inbox[l] && !net.sensors[l].phase1_done) {
            finish_phase1(net, l, round);
            emitted[l] = true;
        }
    }
    std::fill(net.phase1_inbox.begin(), net.phase1_inbox.end(), false);

    // Everything below reads this snapshot, so the round is synchronous.
    std::vector<const std::vector<double>*> broadcast(L);
    std::vector<std::uint64_t> z_prev(L);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& s = net.sensors[l];
        broadcast[l] = s.phase1_done ? &s.frozen : &s.est;
        z_prev[l] = s.z;
    }
    for (std::size_t l = 0; l < L; ++l) {
        auto& s = net.sensors[l];
        bool talks = !s.phase1_done;
        if (!talks) {
            for (std::size_t j : g.neighbors(l)) talks = talks || !net.sensors[j].phase1_done;
        }
        if (talks) ++s.messages.consensus;
    }

    struct Update {
        std::vector<double> est;
        std::uint64_t y = 0;
        std::uint64_t z = 0;
        bool terminate = false;
    };
    std::vector<std::optional<Update>> updates(L);
    const std::size_t M = net.sensors.front().est.size();
    for (std::size_t l = 0; l < L; ++l) {
        const auto& s = net.sensors[l];
        if (s.phase1_done) continue;
        Update u;
        u.est.assign(M, 0.0);
        for (std::size_t i = 0; i < M; ++i) u.est[i] = w(l, l) * (*broadcast[l])[i];
        std::uint64_t z_min = std::min(s.y, z_prev[l]);
        double spread = 0.0;
        for (std::size_t j : g.neighbors(l)) {
            for (std::size_t i = 0; i < M; ++i) {
                u.est[i] += w(l, j) * (*broadcast[j])[i];
                spread = std::max(spread, std::abs((*broadcast[l])[i] - (*broadcast[j])[i]));
            }
            z_min = std::min(z_min, z_prev[j]);
        }
        u.z = z_min + 1;
        u.terminate = u.z > L + 1;
        u.y = u.terminate ? s.y : (spread <= local_tol ? s.y + 1 : 0);
        updates[l] = std::move(u);
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (!updates[l]) continue;
        auto& s = net.sensors[l];
        s.est = std::move(updates[l]->est);
        s.y = updates[l]->y;
        s.z = updates[l]->z;
        if (updates[l]->terminate) {
            finish_phase1(net, l, round);
            emitted[l] = true;
        }
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (!emitted[l]) continue;
        for (std::size_t j : g.neighbors(l)) {
            if (!net.sensors[j].phase1_done) net.phase1_inbox[j] = true;
        }
    }
    if (net.log) {
        for (std::size_t l = 0; l < L; ++l) {
            const auto& s = net.sensors[l];
            net.log->events.push_back(
                {round, l, CctEventKind::consensus, -1, 0, 0, s.phase1_done ? s.frozen : s.est});
        }
    }
}

void phase2_round(CctSensorState& sensor, const ObservationModel& model, const PolicyCache& policies,
                  double c, std::size_t true_hypothesis) {
    if (sensor.halted) return;
    step(sensor.test, model, policies, sensor.rng, true_hypothesis);
    sensor.prev_local_decision = sensor.local_decision;
    if (!sensor.phase1_done) return;
    const WorstCaseLLR wc = worst_case_llr(sensor.test);
    const double estimate = sensor.est[wc.leader];
    if (!(estimate > 0.0)) {
        std::ostringstream msg;
        msg << "sensor " << sensor.test.sensor_id() << ": non-positive capability estimate for hypothesis "
            << wc.leader;
        throw ConfigurationError(msg.str());
    }
    const double threshold = sensor.capability[wc.leader] / estimate * std::abs(std::log(c));
    if (wc.margin >= threshold) {
        sensor.local_decision = wc.leader;
    } else {
        sensor.local_decision.reset();
    }
}

void phase3_round(CctNetwork& net, std::uint64_t round) {
    const std::size_t L = net.size();
    const auto& g = *net.graph;
    auto active = [&](std::size_t l) {
        const auto& s = net.sensors[l];
        return s.phase1_done && !s.halted;
    };

    std::vector<std::uint64_t> d_prev(L, 0);
    std::vector<std::optional<std::size_t>> decision(L);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& s = net.sensors[l];
        if (!s.phase1_done) continue;
        d_prev[l] = s.d;
        decision[l] = s.halted ? s.final_decision : s.local_decision;
    }

    std::vector<bool> halting(L, false);
    for (std::size_t l = 0; l < L; ++l) {
        if (!active(l)) continue;
        auto& s = net.sensors[l];
        ++s.messages.decision;
        std::uint64_t d_min = std::min(d_prev[l], s.x);
        bool neighbors_agree = decision[l].has_value();
        for (std::size_t j : g.neighbors(l)) {
            d_min = std::min(d_min, d_prev[j]);
            neighbors_agree = neighbors_agree && decision[j] == decision[l];
        }
        const std::uint64_t d_next = d_min + 1;
        std::uint64_t x_next = 0;
        if (neighbors_agree) x_next = (s.local_decision == s.prev_local_decision) ? s.x + 1 : 1;
        // x^{(n-1)} >= L+1 certified the previous local decision, so that one is final.
        if (d_next > L + 1) {
            halting[l] = true;
            s.final_decision = s.prev_local_decision;
        }
        s.d = d_next;
        s.x = x_next;
        if (net.log) {
            net.log->events.push_back({round, l, CctEventKind::local, as_index(s.local_decision), s.d, s.x, {}});
        }
    }
    for (std::size_t l = 0; l < L; ++l) {
        if (!halting[l]) continue;
        auto& s = net.sensors[l];
        s.halted = true;
        s.halt_round = round;
        ++s.messages.phase3_term;
        if (net.log) net.log->events.push_back({round, l, CctEventKind::halt, as_index(s.final_decision), s.d, s.x, {}});
        for (std::size_t j : g.neighbors(l)) {
            if (!net.sensors[j].halted && !halting[j] && !net.halt_inbox[j]) net.halt_inbox[j] = s.final_decision;
        }
    }
}

void deliver_halts(CctNetwork& net, std::uint64_t round) {
    const std::size_t L = net.size();
    std::vector<std::optional<std::size_t>> inbox(L);
    std::swap(inbox, net.halt_inbox);
    for (std::size_t l = 0; l < L; ++l) {
        if (!inbox[l]) continue;
        auto& s = net.sensors[l];
        if (s.halted) continue;
        s.halted = true;
        s.halt_round = round;
        s.final_decision = inbox[l];
        ++s.messages.phase3_term;
        if (net.log) net.log->events.push_back({round, l, CctEventKind::halt, as_index(s.final_decision), s.d, s.x, {}});
        for (std::size_t j : net.graph->neighbors(l)) {
            if (!net.sensors[j].halted && !inbox[j] && !net.halt_inbox[j]) net.halt_inbox[j] = inbox[l];
        }
    }
}

double max_pairwise_spread(const std::vector<std::vector<double>>& estimates) {
    double spread = 0.0;
    if (estimates.empty()) return spread;
    const std::size_t M = estimates.front().size();
    for (std::size_t i = 0; i < M; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& e : estimates) {
            lo = std::min(lo, e[i]);
            hi = std::max(hi, e[i]);
        }
        spread = std::max(spread, hi - lo);
    }
    return spread;
}

TrialRecord run_cct_trial(const ObservationModel& model, const PolicyCache& policies,
                          const CapabilityTable& table, const NetworkGraph& graph,
                          const WeightMatrix& weights, double c, std::size_t true_hypothesis,
                          std::uint64_t seed, CctEventLog* log, std::uint64_t round_cap) {
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("run_cct_trial: c must lie in (0, 1)");
    if (graph.size() != model.sensors()) throw std::invalid_argument("run_cct_trial: graph size != L");
    CctNetwork net(graph, weights, table, c, seed, log);
    const std::size_t L = net.size();

    for (std::uint64_t round = 1; round <= round_cap; ++round) {
        deliver_halts(net, round);
        phase1_round(net, round);
        for (auto& s : net.sensors) phase2_round(s, model, policies, c, true_hypothesis);
        phase3_round(net, round);
        if (!net.all_halted()) continue;

        TrialRecord rec;
        rec.true_hypothesis = true_hypothesis;
        rec.decision = *net.sensors.front().final_decision;
        rec.unanimous = std::all_of(net.sensors.begin(), net.sensors.end(),
                                    [&](const auto& s) { return s.final_decision == rec.decision; });
        rec.correct = rec.unanimous && rec.decision == true_hypothesis;
        rec.decision_time = round;
        rec.seed = seed;
        std::vector<std::vector<double>> scaled;
        scaled.reserve(L);
        for (const auto& s : net.sensors) {
            rec.consensus_time = std::max(rec.consensus_time, s.phase1_round);
            rec.trigger_times.push_back(s.halt_round);
            rec.messages.push_back(s.messages);
            rec.comms.push_back(s.messages.total());
            rec.samples += s.test.steps();
            scaled.push_back(s.est);
        }
        rec.consensus_spread = max_pairwise_spread(scaled);
        return rec;
    }
    std::ostringstream msg;
    msg << "consensus-based trial exceeded " << round_cap << " rounds (seed " << seed << ")";
    throw TimeoutError(msg.str(), seed);
}

namespace {

const char* kind_name(CctEventKind k) {
    switch (k) {
        case CctEventKind::consensus: return "consensus";
        case CctEventKind::phase1_term: return "phase1_term";
        case CctEventKind::local: return "local";
        case CctEventKind::halt: return "halt";
    }
    return "?";
}

CctEventKind parse_kind(const std::string& s) {
    if (s == "consensus") return CctEventKind::consensus;
    if (s == "phase1_term") return CctEventKind::phase1_term;
    if (s == "local") return CctEventKind::local;
    if (s == "halt") return CctEventKind::halt;
    throw std::invalid_argument("event log: unknown event '" + s + "'");
}

}  // namespace

void CctEventLog::write_csv(std::ostream& out) const {
    out << "round,sensor,event,hypothesis,d,x,values\n";
    char buf[32];
    for (const auto& e : events) {
        out << e.round << ',' << e.sensor << ',' << kind_name(e.kind) << ',' << e.hypothesis << ','
            << e.d << ',' << e.x << ',';
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", e.values[i]);
            if (i) out << ';';
            out << buf;
        }
        out << '\n';
    }
}

CctEventLog CctEventLog::read_csv(std::istream& in) {
    CctEventLog log;
    std::string line;
    if (!std::getline(in, line) || line != "round,sensor,event,hypothesis,d,x,values") {
        throw std::invalid_argument("event log: missing or unexpected header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (!line.empty() && line.back() == ',') cols.emplace_back();
        if (cols.size() != 7) {
            throw std::invalid_argument("event log line " + std::to_string(line_no) + ": expected 7 columns");
        }
        CctEvent e;
        e.round = std::stoull(cols[0]);
        e.sensor = std::stoull(cols[1]);
        e.kind = parse_kind(cols[2]);
        e.hypothesis = std::stol(cols[3]);
        e.d = std::stoull(cols[4]);
        e.x = std::stoull(cols[5]);
        std::stringstream vs(cols[6]);
        std::string v;
        while (std::getline(vs, v, ';')) {
            if (!v.empty()) e.values.push_back(std::stod(v));
        }
        log.events.push_back(std::move(e));
    }
    return log;
}

}  // namespace chernet
