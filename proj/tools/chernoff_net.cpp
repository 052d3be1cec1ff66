// chernoff_net: command-line driver for the sequential test simulator.
//
//   chernoff_net run      --protocol dct --M 3 --L 5 --c 0.01 --trials 1000 --seed 7 --out dct.csv
//   chernoff_net sweep    --protocol cct --axis L --values 4,8,12 --seed 7
//   chernoff_net bounds   --M 3 --c 0.01 --I 2.0
//   chernoff_net validate-graph net.txt --seed 7
//
// Exit status: 0 ok, 2 configuration error, 3 runtime error (timeouts included).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "chernet/errors.hpp"
#include "chernet/harness.hpp"

namespace {

using namespace chernet;

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

// Write to a sibling temp file, then rename over the target.
void write_atomically(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << text;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("write to '" + tmp + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
    } else {
        write_atomically(path, text);
    }
}

nlohmann::json to_json(const AggregateStats& s) {
    auto num = [](double x) -> nlohmann::json {
        if (std::isnan(x)) return nullptr;
        return x;
    };
    return {{"protocol", to_string(s.protocol)}, {"M", s.M}, {"L", s.L}, {"c", s.c},
            {"trials", s.trials}, {"errors", s.errors}, {"err_rate", s.err_rate},
            {"err_lo", s.err_lo}, {"err_hi", s.err_hi}, {"mean_N", s.mean_N},
            {"mean_N2", s.mean_N2}, {"mean_Nc", num(s.mean_Nc)}, {"risk", s.risk},
            {"mean_comms", s.mean_comms}, {"bound_err", s.bounds.err}, {"bound_EN", s.bounds.en},
            {"bound_Nc", num(s.bounds.nc)}, {"slack", s.slack}, {"seed", s.seed}};
}

struct ConfigFlags {
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> overrides;
    std::map<std::string, std::string> values;
    bool log_events = false;
    CLI::Option* log_flag = nullptr;
    bool print_config = false;
    std::string format = "csv";
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool sweep_axis) {
    cmd->add_option("--config", f.config_path, "key=value config file; flags override it");
    auto add = [&](const std::string& flag, const std::string& key, const std::string& help) {
        f.overrides.emplace_back(key, cmd->add_option(flag, f.values[key], help));
    };
    add("--protocol", "protocol", "standard | fct | dct | cct");
    add("--M", "M", "number of hypotheses");
    add("--L", "L", "number of sensors");
    add("--c", "c", "observation cost per unit time, in (0, 1)");
    add("--omega", "omega", "comma-separated wrong-decision costs");
    add("--trials", "trials", "Monte Carlo trials per block");
    add("--seed", "seed", "master seed (required)");
    add("--topology", "topology", "generated | file:<edge list>");
    add("--model", "model", "bernoulli | file:<model file>");
    add("--true-hypothesis", "true_hypothesis", "fixed index or 'uniform'");
    add("--out", "out", "output path (stdout if absent)");
    add("--jobs", "jobs", "worker cap; CHERNOFF_NET_JOBS is the fallback");
    add("--slack", "slack", "multiplier on the leading-order time bound");
    if (sweep_axis) {
        add("--axis", "axis", "c | L");
        add("--values", "values", "comma-separated axis values");
    }
    f.log_flag = cmd->add_flag("--log-events", f.log_events, "write per-round event logs (cct)");
    cmd->add_flag("--print-config", f.print_config, "print the effective config and exit");
    cmd->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve_config(const ConfigFlags& f) {
    ExperimentConfig cfg;
    bool jobs_set = false;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw ConfigurationError("cannot open config file '" + f.config_path + "'");
        const ExperimentConfig defaults;
        cfg = parse_config(in);
        jobs_set = cfg.jobs != defaults.jobs;
    }
    for (const auto& [key, opt] : f.overrides) {
        if (opt->count() == 0) continue;
        apply_setting(cfg, key, f.values.at(key));
        jobs_set = jobs_set || key == "jobs";
    }
    if (f.log_flag->count()) cfg.log_events = f.log_events;
    if (!jobs_set) {
        if (const char* env = std::getenv("CHERNOFF_NET_JOBS")) apply_setting(cfg, "jobs", env);
    }
    cfg.validate();
    return cfg;
}

std::string events_csv(const std::vector<CctEventLog>& logs) {
    std::ostringstream out;
    out << "trial,round,sensor,event,hypothesis,d,x,values\n";
    for (std::size_t t = 0; t < logs.size(); ++t) {
        std::ostringstream one;
        logs[t].write_csv(one);
        std::istringstream lines(one.str());
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) out << t << ',' << line << '\n';
    }
    return out.str();
}

int cmd_run(const ConfigFlags& f) {
    ExperimentConfig cfg = resolve_config(f);
    if (f.print_config) {
        std::cout << format_config(cfg);
        return 0;
    }
    if (!cfg.seed) throw ConfigurationError("seed: a master seed is required for run");
    const Experiment exp = prepare_experiment(cfg);
    if (!exp.warning.empty()) std::cerr << "warning: " << exp.warning << '\n';
    const MonteCarloResult res = run_monte_carlo(exp, cfg, derive_seed(*cfg.seed, 0));
    std::string text;
    if (f.format == "json") {
        text = to_json(res.stats).dump(2) + "\n";
    } else {
        text = csv_header() + "\n" + csv_row(res.stats) + "\n";
    }
    emit(cfg.out, text);
    if (!res.logs.empty()) {
        const std::string path = cfg.out.empty() ? std::string("events.csv") : cfg.out + ".events.csv";
        write_atomically(path, events_csv(res.logs));
    }
    return 0;
}

int cmd_sweep(const ConfigFlags& f) {
    ExperimentConfig cfg = resolve_config(f);
    if (f.print_config) {
        std::cout << format_config(cfg);
        return 0;
    }
    if (!cfg.seed) throw ConfigurationError("seed: a master seed is required for sweep");
    const auto rows = sweep(cfg);
    std::string text;
    if (f.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            if (r.stats) arr.push_back(to_json(*r.stats));
            else arr.push_back({{"value", r.value}, {"error", r.error}});
        }
        text = arr.dump(2) + "\n";
    } else {
        text = csv_header() + "\n";
        for (const auto& r : rows) {
            if (r.stats) text += csv_row(*r.stats) + "\n";
        }
    }
    for (const auto& r : rows) {
        if (!r.stats) std::cerr << "cell " << cfg.axis << "=" << format_double(r.value) << " failed: " << r.error << '\n';
    }
    emit(cfg.out, text);
    return 0;
}

struct BoundsFlags {
    std::string protocol = "dct";
    std::size_t M = 3;
    double c = 0.01;
    double I = 0.0;
    std::optional<double> max_I;
    std::optional<double> slack;
    std::string topology;
};

std::string fmt6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

int cmd_bounds(const BoundsFlags& b) {
    const Protocol p = parse_protocol(b.protocol);
    if (!(b.c > 0.0 && b.c < 1.0)) throw ConfigurationError("c: must lie in (0, 1)");
    if (!(b.I > 0.0)) throw ConfigurationError("I: must be positive");
    if (b.M < 2) throw ConfigurationError("M: need at least 2 hypotheses");
    std::optional<GraphArtifacts> art;
    if (p == Protocol::cct) {
        if (b.topology.rfind("file:", 0) != 0) throw ConfigurationError("topology: cct bounds need --topology file:<path>");
        std::ifstream in(b.topology.substr(5));
        if (!in) throw ConfigurationError("topology: cannot open '" + b.topology.substr(5) + "'");
        NetworkGraph g;
        try {
            g = read_edge_list(in);
        } catch (const std::exception& e) {
            throw ConfigurationError(std::string("topology: ") + e.what());
        }
        art = graph_artifacts(g, metropolis_weights(g));
    }
    const double max_I = b.max_I.value_or(b.I);
    const BoundReport r = theoretical_bounds(p, b.M, b.c, b.I, max_I, art);
    const double slack = b.slack.value_or(default_slack(b.c));
    std::cout << "protocol = " << to_string(p) << '\n'
              << "bound_err = " << fmt6(r.err) << '\n'
              << "bound_EN = " << fmt6(r.en) << '\n'
              << "bound_EN_slack = " << fmt6(slack * r.en) << "  (slack " << fmt6(slack) << ")\n";
    if (p == Protocol::cct) std::cout << "bound_Nc = " << fmt6(r.nc) << '\n';
    return 0;
}

struct GraphFlags {
    std::string path;
    std::vector<double> I;
    std::optional<std::uint64_t> seed;
    std::size_t M = 3;
};

int cmd_validate_graph(const GraphFlags& f) {
    std::ifstream in(f.path);
    if (!in) throw ConfigurationError("cannot open graph file '" + f.path + "'");
    NetworkGraph g;
    try {
        g = read_edge_list(in);
    } catch (const std::exception& e) {
        throw ConfigurationError(e.what());
    }
    std::cout << "L = " << g.size() << "\nedges = " << g.edge_count() << '\n';
    if (!g.connected()) {
        std::cout << "connected = false\n";
        return kConfigError;
    }
    const WeightMatrix w = metropolis_weights(g);
    const WeightReport rep = validate_weights(w.matrix(), g);
    const GraphArtifacts a = graph_artifacts(g, w);
    std::cout << "connected = true\n"
              << "diameter d = " << a.diameter << '\n'
              << "radius h = " << a.radius << '\n'
              << "eta(W) = " << fmt6(a.eta) << '\n'
              << "eta(W^h) = " << fmt6(a.eta_h) << '\n'
              << "weights row_ok = " << rep.row_ok << " col_ok = " << rep.col_ok
              << " support_ok = " << rep.support_ok << " R(W - J/L) = " << fmt6(rep.deviation_radius.value)
              << (rep.deviation_radius.converged ? "" : " (not converged)") << '\n';

    std::vector<double> totals = f.I;
    if (totals.empty() && f.seed) {
        const ObservationModel model = generate_bernoulli_model(f.M, g.size(), derive_seed(*f.seed, 1));
        totals = capability_table(PolicyCache(model)).totals();
    }
    if (totals.empty()) {
        std::cout << "conditions: pass --I or --seed to evaluate the sufficient conditions\n";
    } else {
        const CctConditionReport c = check_cct_conditions(totals, w, std::max<std::size_t>(a.radius, 1));
        for (std::size_t i = 0; i < totals.size(); ++i) {
            std::cout << "I(" << i << ") = " << fmt6(totals[i]) << "  lhs = " << fmt6(c.lhs[i]) << '\n';
        }
        std::cout << "cond (i)   rhs = " << fmt6(c.rhs_i) << "  holds = " << c.cond_i << '\n'
                  << "cond (ii)  rhs = " << fmt6(c.rhs_ii) << "  holds = " << c.cond_ii << '\n'
                  << "cond (iii) rhs = " << fmt6(c.rhs_iii) << "  holds = " << c.cond_iii << '\n'
                  << "0 < eta(W^h) < 1: " << c.eta_h_interior << (c.exact_consensus ? " (W^h = J/L)" : "") << '\n';
    }
    return rep.ok() ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential multi-hypothesis testing over sensor networks"};
    app.require_subcommand(1);

    ConfigFlags run_flags, sweep_flags;
    auto* run = app.add_subcommand("run", "run one Monte Carlo block");
    add_config_flags(run, run_flags, false);
    auto* sw = app.add_subcommand("sweep", "sweep c or L");
    add_config_flags(sw, sweep_flags, true);

    BoundsFlags bflags;
    auto* bounds = app.add_subcommand("bounds", "evaluate the theoretical bounds");
    bounds->add_option("--protocol", bflags.protocol, "dct (default) | cct | standard | fct");
    bounds->add_option("--M", bflags.M, "number of hypotheses");
    bounds->add_option("--c", bflags.c, "observation cost");
    bounds->add_option("--I", bflags.I, "information rate of the true hypothesis")->required();
    bounds->add_option("--max-I", bflags.max_I, "largest information rate (defaults to --I)");
    bounds->add_option("--slack", bflags.slack, "slack multiplier");
    bounds->add_option("--topology", bflags.topology, "file:<edge list>, cct only");

    GraphFlags gflags;
    auto* vg = app.add_subcommand("validate-graph", "check an edge-list file");
    vg->add_option("path", gflags.path, "edge-list file")->required();
    vg->add_option("--I", gflags.I, "capability totals I(i)")->delimiter(',');
    vg->add_option("--seed", gflags.seed, "draw a Bernoulli model for I(i)");
    vg->add_option("--M", gflags.M, "hypotheses for the drawn model");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_flags);
        if (*sw) return cmd_sweep(sweep_flags);
        if (*bounds) return cmd_bounds(bflags);
        if (*vg) return cmd_validate_graph(gflags);
    } catch (const ConfigurationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const TimeoutError& e) {
        std::cerr << "timeout: " << e.what() << " (replay seed " << e.seed() << ")\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
