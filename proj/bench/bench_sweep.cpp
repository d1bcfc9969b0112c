// Serial reference sweep against the OpenMP sweep on the same grid.
//
//   bench_sweep [cells_per_axis] [qs_order]

#include "wavestab/mapper.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>

using namespace wavestab;

namespace {

LtiPlant oscillator() {
    Matrix a(2, 2);
    a << 0, 1, -2, 0.1;
    Vector b(2);
    b << 0, 1;
    RowVector k(2);
    k << 1, 0;
    return LtiPlant(a, b, k);
}

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int cells = argc > 1 ? std::atoi(argv[1]) : 20;
    const int order = argc > 2 ? std::atoi(argv[2]) : 2;
    GridSpec g;
    g.x = {0.2, 2.0, cells};
    g.y = {0.1, 4.0, cells};
    g.methods.ctcr = true;
    g.methods.smallgain = true;
    for (int n = 0; n <= order; ++n) g.methods.qs_orders.push_back(n);

    BarrierSdpSolver solver;
    SweepOptions opts;
    opts.backend = &solver;
    const LtiPlant plant = oscillator();

    MapTable serial, parallel;
    const double ts = seconds([&] { serial = sweep_serial(plant, g, opts); });
    const double tp = seconds([&] { parallel = sweep(plant, g, opts); });
    std::ostringstream a, b;
    write_csv(a, serial);
    write_csv(b, parallel);

    std::printf("grid %dx%d, QS orders 0..%d, %d threads\n", cells, cells, order, omp_get_max_threads());
    std::printf("serial   %.3f s\n", ts);
    std::printf("parallel %.3f s  (speedup %.2fx)\n", tp, ts / tp);
    std::printf("outputs %s\n", a.str() == b.str() ? "identical" : "DIFFER");
    return a.str() == b.str() ? 0 : 1;
}
