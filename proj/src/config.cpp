#include <algorithm>
#include <charconv>
#include <istream>
#include <sstream>

#include "chernet/errors.hpp"
#include "chernet/harness.hpp"

namespace chernet {

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::standard: return "standard";
        case Protocol::fct: return "fct";
        case Protocol::dct: return "dct";
        case Protocol::cct: return "cct";
    }
    return "?";
}

Protocol parse_protocol(const std::string& name) {
    if (name == "standard") return Protocol::standard;
    if (name == "fct") return Protocol::fct;
    if (name == "dct") return Protocol::dct;
    if (name == "cct") return Protocol::cct;
    throw ConfigurationError("protocol: unknown value '" + name + "' (expected standard|fct|dct|cct)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigurationError(key + ": cannot parse '" + value + "' as " + expected);
}

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "a real number");
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_real(key, item));
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value, "a boolean");
}

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += format_double(xs[i]);
    }
    return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "protocol") cfg.protocol = parse_protocol(value);
    else if (key == "M") cfg.M = parse_integer<std::size_t>(key, value);
    else if (key == "L") cfg.L = parse_integer<std::size_t>(key, value);
    else if (key == "c") cfg.c = parse_real(key, value);
    else if (key == "omega") cfg.omega = parse_list(key, value);
    else if (key == "trials") cfg.trials = parse_integer<std::size_t>(key, value);
    else if (key == "seed") cfg.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "topology") cfg.topology = value;
    else if (key == "model") cfg.model = value;
    else if (key == "true_hypothesis") {
        if (value == "uniform") cfg.true_hypothesis.reset();
        else cfg.true_hypothesis = parse_integer<std::size_t>(key, value);
    }
    else if (key == "jobs") cfg.jobs = parse_integer<std::size_t>(key, value);
    else if (key == "slack") cfg.slack = parse_real(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "log_events") cfg.log_events = parse_bool(key, value);
    else if (key == "axis") cfg.axis = value;
    else if (key == "values") cfg.values = parse_list(key, value);
    else throw ConfigurationError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigurationError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        try {
            apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigurationError& e) {
            throw ConfigurationError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "protocol=" << to_string(cfg.protocol) << '\n'
        << "M=" << cfg.M << '\n'
        << "L=" << cfg.L << '\n'
        << "c=" << format_double(cfg.c) << '\n';
    if (!cfg.omega.empty()) out << "omega=" << join(cfg.omega) << '\n';
    out << "trials=" << cfg.trials << '\n';
    if (cfg.seed) out << "seed=" << *cfg.seed << '\n';
    out << "topology=" << cfg.topology << '\n'
        << "model=" << cfg.model << '\n'
        << "true_hypothesis=" << (cfg.true_hypothesis ? std::to_string(*cfg.true_hypothesis) : "uniform") << '\n'
        << "jobs=" << cfg.jobs << '\n';
    if (cfg.slack) out << "slack=" << format_double(*cfg.slack) << '\n';
    if (!cfg.out.empty()) out << "out=" << cfg.out << '\n';
    out << "log_events=" << (cfg.log_events ? "true" : "false") << '\n';
    if (!cfg.axis.empty()) out << "axis=" << cfg.axis << '\n';
    if (!cfg.values.empty()) out << "values=" << join(cfg.values) << '\n';
    return out.str();
}

void ExperimentConfig::validate() const {
    if (!(c > 0.0 && c < 1.0)) throw ConfigurationError("c: must lie in (0, 1), got " + format_double(c));
    if (M < 2) throw ConfigurationError("M: need at least 2 hypotheses");
    if (L < 1) throw ConfigurationError("L: need at least 1 sensor");
    if (trials < 1) throw ConfigurationError("trials: need at least 1 trial");
    if (!omega.empty() && omega.size() != M) {
        throw ConfigurationError("omega: expected " + std::to_string(M) + " entries, got " +
                                 std::to_string(omega.size()));
    }
    if (std::any_of(omega.begin(), omega.end(), [](double w) { return !(w >= 0.0); })) {
        throw ConfigurationError("omega: costs must be non-negative");
    }
    if (true_hypothesis && *true_hypothesis >= M) {
        throw ConfigurationError("true_hypothesis: index " + std::to_string(*true_hypothesis) + " >= M");
    }
    if (topology != "generated" && topology.rfind("file:", 0) != 0) {
        throw ConfigurationError("topology: expected 'generated' or 'file:<path>'");
    }
    if (model != "bernoulli" && model.rfind("file:", 0) != 0) {
        throw ConfigurationError("model: expected 'bernoulli' or 'file:<path>'");
    }
    if (slack && !(*slack > 0.0)) throw ConfigurationError("slack: must be positive");
    if (!axis.empty() && axis != "c" && axis != "L") throw ConfigurationError("axis: expected 'c' or 'L'");
}

}  // namespace chernet
