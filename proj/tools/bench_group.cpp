#include <chrono>
#include <cstdio>
#include <cstring>

#include "echoflow/group.hpp"

using namespace echoflow;
using clk = std::chrono::steady_clock;

namespace {

double bench(Group& g, const Vec& h, int steps, bool parallel) {
    group_reset(g);
    const auto t0 = clk::now();
    for (int i = 0; i < steps; ++i) {
        if (parallel)
            group_step(g, h);
        else
            group_step_serial(g, h);
    }
    return std::chrono::duration<double>(clk::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int steps = 2000, embed = 8, channels = 3;
    if (argc > 1) steps = std::atoi(argv[1]);

    GroupConfig cfg = default_group(7);
    RngStream rng(7, 0xBE);
    Group g = init_group(cfg, embed * channels, rng);

    Vec h(embed * channels);
    RngStream hr(11, 0x11);
    for (double& v : h) v = hr.gaussian(0.0, 1.0);

    bench(g, h, 50, false);  // warm-up
    const double serial = bench(g, h, steps, false);
    std::vector<Vec> serial_states;
    for (const auto& u : g.units) serial_states.push_back(u.state);

    bench(g, h, 50, true);
    const double parallel = bench(g, h, steps, true);
    bool identical = true;
    for (std::size_t i = 0; i < g.units.size(); ++i)
        if (std::memcmp(g.units[i].state.data(), serial_states[i].data(),
                        serial_states[i].size() * sizeof(double)) != 0)
            identical = false;

    std::printf("group step x%d  serial %.4fs  parallel %.4fs  speedup %.2fx  states %s\n",
                steps, serial, parallel, serial / parallel,
                identical ? "bitwise-identical" : "DIVERGED");
    return identical ? 0 : 1;
}
