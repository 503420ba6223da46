// Compares the serial reference path of the per-node oracle loop against the
// OpenMP path on a many-node stage, and checks they produce identical output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "drmco/instances.hpp"
#include "drmco/oracle.hpp"

using namespace drmco;

namespace {

double time_oracle(const Instance& inst, const Vec& x_in, const CutPool& under,
                   const EnvelopePool& over, int threads, int reps, OracleResult* out) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) *out = noninitial_oracle(inst, 2, x_in, under, over, threads);
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
               .count() /
           reps;
}

}  // namespace

int main(int argc, char** argv) {
    const int factors = argc > 1 ? std::atoi(argv[1]) : 4;  // 2^factors nodes per stage
    const int reps = argc > 2 ? std::atoi(argv[2]) : 20;

    InventoryParams params;
    params.products = 3;
    params.factors = factors;
    params.stages = 3;
    params.seed = 7;
    const Instance inst = gen_inventory(params, true);
    const std::size_t d = inst.state_dim(1);

    CutPool under(2, params.reg_factor);
    EnvelopePool over(2, params.reg_factor);
    Rng rng(11);
    for (int i = 0; i < 40; ++i) {
        Vec anchor(d), gradient(d);
        for (std::size_t k = 0; k < d; ++k) {
            anchor[k] = rng.uniform(-2.0, 2.0);
            gradient[k] = rng.uniform(-5.0, 5.0);
        }
        under.add_cut({anchor, rng.uniform(0.0, 20.0), gradient});
        over.add_point({anchor, rng.uniform(40.0, 90.0)});
    }
    const Vec x_in(d, 0.0);

    std::printf("nodes per stage: %zu, state dimension: %zu, pool sizes: %zu cuts / %zu points\n",
                inst.nodes(2).size(), d, under.size(), over.points().size());

    OracleResult serial;
    const double serial_ms = time_oracle(inst, x_in, under, over, 1, reps, &serial);
    std::printf("%-10s %8.2f ms/call\n", "serial", serial_ms);

    for (int threads : {2, 4}) {
        OracleResult parallel;
        const double ms = time_oracle(inst, x_in, under, over, threads, reps, &parallel);
        const bool same =
            serial.cut.gradient == parallel.cut.gradient &&
            serial.cut.value_at_anchor == parallel.cut.value_at_anchor &&
            serial.over_estimate == parallel.over_estimate &&
            serial.next_state == parallel.next_state && serial.gap == parallel.gap;
        std::printf("%d threads  %8.2f ms/call  speedup %.2fx  results %s\n", threads, ms,
                    serial_ms / ms, same ? "identical" : "DIFFER");
        if (!same) return 1;
    }
    return 0;
}
