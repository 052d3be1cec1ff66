#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "chernet/harness.hpp"
#include "chernet/network.hpp"

namespace fs = std::filesystem;

namespace {

struct Output {
    int status = -1;
    std::string text;
};

Output run_cli(const std::string& args) {
    const std::string cmd = std::string(CHERNOFF_NET_BIN) + " " + args + " 2>&1";
    Output out;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.text.append(buf, n);
    const int raw = ::pclose(pipe);
    out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "chernoff_net_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("bounds subcommand") {
    const Output o = run_cli("bounds --M 3 --c 0.01 --I 2.0");
    CHECK(o.status == 0);
    CHECK(o.text.find("bound_err = 0.02\n") != std::string::npos);
    CHECK(o.text.find("bound_EN = 2.30259\n") != std::string::npos);
}

TEST_CASE("run is deterministic") {
    const fs::path a = scratch("a.csv"), b = scratch("b.csv");
    CHECK(run_cli("run --protocol dct --trials 1 --seed 7 --out " + a.string()).status == 0);
    CHECK(run_cli("run --protocol dct --trials 1 --seed 7 --out " + b.string()).status == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).rfind(chernet::csv_header(), 0) == 0);
}

TEST_CASE("configuration errors exit with 2") {
    const fs::path cfg = scratch("bad.cfg");
    std::ofstream(cfg) << "protocol=dct\nnot_a_key=1\n";
    Output o = run_cli("run --config " + cfg.string() + " --seed 1");
    CHECK(o.status == 2);
    CHECK(o.text.find("line 2") != std::string::npos);
    CHECK(run_cli("run --protocol dct").status == 2);              // no seed
    CHECK(run_cli("run --seed 1 --c 2").status == 2);              // c out of range
    CHECK(run_cli("run --seed 1 --protocol nope").status == 2);
    CHECK(run_cli("run --seed 1 --bogus-flag").status == 2);
}

TEST_CASE("printed config re-parses to the same invocation") {
    const fs::path cfg = scratch("echo.cfg");
    const Output o = run_cli("run --protocol cct --L 7 --c 0.005 --seed 3 --omega 1,2,3 --print-config");
    REQUIRE(o.status == 0);
    std::ofstream(cfg) << o.text;
    const Output again = run_cli("run --config " + cfg.string() + " --print-config");
    CHECK(again.status == 0);
    CHECK(again.text == o.text);
}

TEST_CASE("failed run leaves no output file") {
    const fs::path out = scratch("never.csv");
    fs::remove(out);
    CHECK(run_cli("run --seed 1 --model file:/nonexistent/model.txt --out " + out.string()).status == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("validate-graph on the generated ten-sensor topology") {
    const fs::path g = scratch("ring10.txt");
    {
        std::ofstream out(g);
        chernet::write_edge_list(out, chernet::generate_topology(10, 4));
    }
    const Output o = run_cli("validate-graph " + g.string() + " --seed 4");
    CHECK(o.status == 0);
    int d = -1, h = -1;
    std::istringstream lines(o.text);
    std::string line;
    while (std::getline(lines, line)) {
        std::sscanf(line.c_str(), "diameter d = %d", &d);
        std::sscanf(line.c_str(), "radius h = %d", &h);
    }
    CHECK(h >= 1);
    CHECK(h <= d);
    CHECK(d <= 9);
    CHECK(o.text.find("cond (iii)") != std::string::npos);

    const fs::path broken = scratch("broken.txt");
    std::ofstream(broken) << "L 3\n0 1\n1 1\n";
    CHECK(run_cli("validate-graph " + broken.string()).status == 2);
}

TEST_CASE("event logs and sweeps") {
    const fs::path out = scratch("cct.csv");
    CHECK(run_cli("run --protocol cct --L 6 --trials 3 --seed 2 --log-events --out " + out.string()).status == 0);
    const std::string events = slurp(out.string() + ".events.csv");
    CHECK(events.rfind("trial,round,sensor,event", 0) == 0);
    CHECK(events.find(",halt,") != std::string::npos);

    const Output s = run_cli("sweep --protocol dct --axis c --values 0.1,0.01 --trials 50 --seed 1");
    CHECK(s.status == 0);
    CHECK(std::count(s.text.begin(), s.text.end(), '\n') == 3);
    const Output j = run_cli("run --protocol dct --trials 5 --seed 1 --format json");
    CHECK(j.status == 0);
    CHECK(j.text.find("\"bound_EN\"") != std::string::npos);
}
