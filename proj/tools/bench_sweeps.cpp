// Benchmark of the OpenMP sweep kernels against their serial references.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "spintool/resonance.hpp"
#include "spintool/sequences.hpp"

using namespace spintool;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (std::isfinite(d)) m = std::max(m, d);
    }
    return m;
}

} // namespace

int main() {
    const auto si = *find_species("29Si");
    const SpinSystem sys{FieldConfig{81.0},
                         ElectronSubspace{0.5, 1.5},
                         {NuclearSpin{si, {-23.5, 12.0}}, NuclearSpin{si, {0.2, 8.5}}}};

    std::vector<double> tau_grid;
    for (int i = 0; i <= 200000; ++i) tau_grid.push_back(1.0 + 20.0 * i / 200000.0);

    SignalTrace serial, parallel;
    const double t_serial =
        time_best_of(3, [&] { serial = tau_sweep_serial(sys, 8, tau_grid); });
    const double t_parallel = time_best_of(3, [&] { parallel = tau_sweep(sys, 8, tau_grid); });
    std::printf("tau_sweep     %zu pts  serial %.3fs  parallel %.3fs  speedup %.2fx  "
                "max|diff| %.2e\n",
                tau_grid.size(), t_serial, t_parallel, t_serial / t_parallel,
                max_abs_diff(serial.values, parallel.values));

    std::vector<int> n_list;
    for (int n = 2; n <= 4096; n += 2) n_list.push_back(n);
    const double ps = time_best_of(3, [&] { serial = pulse_sweep_serial(sys, 5.38, n_list); });
    const double pp = time_best_of(3, [&] { parallel = pulse_sweep(sys, 5.38, n_list); });
    std::printf("pulse_sweep   %zu pts  serial %.3fs  parallel %.3fs  speedup %.2fx  "
                "max|diff| %.2e\n",
                n_list.size(), ps, pp, ps / pp, max_abs_diff(serial.values, parallel.values));

    const NuclearSpin spin{si, {-23.6, 12.2}};
    const double bc = b_crit(spin, sys.subspace);
    std::vector<double> b_grid;
    for (int i = 0; i <= 4000; ++i) b_grid.push_back(bc + 4.0 * bc * i / 4000.0);
    const double es =
        time_best_of(3, [&] { serial = error_sweep_serial(spin, sys.subspace, b_grid, 1); });
    const double ep =
        time_best_of(3, [&] { parallel = error_sweep(spin, sys.subspace, b_grid, 1); });
    std::printf("error_sweep   %zu pts  serial %.3fs  parallel %.3fs  speedup %.2fx  "
                "max|diff| %.2e\n",
                b_grid.size(), es, ep, es / ep, max_abs_diff(serial.values, parallel.values));
    return 0;
}
