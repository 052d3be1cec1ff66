// Serial reference vs OpenMP paths: Monte Carlo blocks and matrix products.
//   bench_chernet [trials] [matrix size]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

#include "chernet/harness.hpp"

using namespace chernet;

template <class F>
double seconds(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

int main(int argc, char** argv) {
    const std::size_t trials = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 4000;
    const std::size_t n = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 400;
    std::printf("threads %d\n", omp_get_max_threads());
    std::printf("%-28s %12s %12s %8s %s\n", "kernel", "serial_s", "openmp_s", "speedup", "same");

    for (Protocol p : {Protocol::dct, Protocol::cct}) {
        ExperimentConfig cfg;
        cfg.protocol = p;
        cfg.L = 10;
        cfg.c = 0.01;
        cfg.trials = trials;
        cfg.seed = 3;
        const Experiment exp = prepare_experiment(cfg);
        MonteCarloResult a, b;
        const double ts = seconds([&] { a = run_monte_carlo_serial(exp, cfg, 11); });
        const double tp = seconds([&] { b = run_monte_carlo(exp, cfg, 11); });
        const bool same = csv_row(a.stats) == csv_row(b.stats);
        std::printf("%-28s %12.4f %12.4f %8.2f %s\n", ("monte carlo " + to_string(p)).c_str(), ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    Matrix m(n);
    RandomStream rng(5);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = uniform01(rng);
    Matrix x, y;
    const double ts = seconds([&] { x = multiply_serial(m, m); });
    const double tp = seconds([&] { y = multiply(m, m); });
    const double diff = x.max_abs_diff(y);
    std::printf("%-28s %12.4f %12.4f %8.2f %s\n", ("multiply " + std::to_string(n)).c_str(), ts, tp, ts / tp,
                diff == 0.0 ? "yes" : "NO");
}
