#include "echoflow/group.hpp"

#include <cstdlib>

#include "echoflow/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace echoflow {

namespace {

int thread_cap() {
    static const int cap = [] {
        if (const char* env = std::getenv("ECHOFLOW_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) return v;
        }
        return 0;  // 0 = library default
    }();
    return cap;
}

}  // namespace

void MlpReadout::forward(const double* x, double* y) const {
    layer.forward(x, y);
    for (int i = 0; i < layer.out_dim(); ++i)
        if (y[i] < 0.0) y[i] = 0.0;
}

void MlpReadout::backward(const double* x, const double* y, const double* gy) {
    const int m = layer.out_dim();
    Vec gpre(m);
    for (int i = 0; i < m; ++i) gpre[i] = y[i] > 0.0 ? gy[i] : 0.0;
    layer.backward(x, gpre.data(), nullptr);
}

void GroupConfig::validate() const {
    if (units.empty()) throw ConfigError("GroupConfig: need at least one unit");
    if (readout_dim < 1) throw ConfigError("GroupConfig: readout_dim must be >= 1");
    for (const auto& u : units) u.validate();
}

namespace {

GroupConfig table_group(std::uint64_t seed, int size_divisor) {
    // Appendix table: sizes 100..145, radii 0.90 down to 0.45,
    // densities 0.60 down to 0.15, activation cycling tanh/sigmoid/relu.
    static const Activation cycle[3] = {Activation::Tanh, Activation::Sigmoid,
                                        Activation::Relu};
    GroupConfig g;
    g.readout_dim = 32;
    for (int i = 0; i < 10; ++i) {
        XEsnConfig c;
        c.size = (100 + 5 * i) / size_divisor;
        c.spectral_radius = 0.90 - 0.05 * i;
        c.density = 0.60 - 0.05 * i;
        c.sigma1 = Activation::Tanh;
        c.sigma2 = cycle[i % 3];
        c.gate_mode = GateMode::DiagonalGates;
        c.clip_enabled = true;
        c.norm_enabled = true;
        c.seed = seed + static_cast<std::uint64_t>(i);
        g.units.push_back(c);
    }
    return g;
}

}  // namespace

GroupConfig default_group(std::uint64_t seed) { return table_group(seed, 1); }

GroupConfig default_group_halved(std::uint64_t seed) { return table_group(seed, 2); }

Group init_group(const GroupConfig& cfg, int input_dim, RngStream& rng) {
    cfg.validate();
    Group g;
    g.readout_dim = cfg.readout_dim;
    for (int i = 0; i < cfg.size(); ++i) {
        RngStream unit_rng =
            rng.substream(0x1000 + static_cast<std::uint64_t>(i)).substream(cfg.units[i].seed);
        g.units.push_back(init_unit(cfg.units[i], input_dim, unit_rng));
        MlpReadout r(cfg.readout_dim, cfg.units[i].size);
        RngStream ro_rng = rng.substream(0x2000 + static_cast<std::uint64_t>(i));
        r.layer.init(ro_rng);
        g.readouts.push_back(std::move(r));
    }
    return g;
}

void group_step(Group& g, const Vec& h) {
    const int L = g.size();
#ifdef _OPENMP
    const int cap = thread_cap();
#pragma omp parallel for schedule(static) num_threads(cap > 0 ? cap : omp_get_max_threads())
#endif
    for (int l = 0; l < L; ++l) step_mcra(g.units[l], h);
}

void group_step_serial(Group& g, const Vec& h) {
    for (auto& u : g.units) step_mcra(u, h);
}

namespace {

Vec readout_concat(Group& g) {
    const int L = g.size();
    const int m = g.readout_dim;
    Vec out(static_cast<std::size_t>(L) * m);
    for (int l = 0; l < L; ++l)
        g.readouts[l].forward(g.units[l].state.data(), out.data() + static_cast<std::size_t>(l) * m);
    return out;
}

}  // namespace

Vec group_forward(Group& g, const Vec& h) {
    group_step(g, h);
    return readout_concat(g);
}

Vec group_forward_serial(Group& g, const Vec& h) {
    group_step_serial(g, h);
    return readout_concat(g);
}

void group_reset(Group& g) {
    for (auto& u : g.units) reset(u);
}

}  // namespace echoflow
