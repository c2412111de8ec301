#include "echoflow/reservoir.hpp"

#include <cmath>

#include "echoflow/errors.hpp"

namespace echoflow {

void XEsnConfig::validate() const {
    if (size < 1) throw ConfigError("XEsnConfig: size must be >= 1");
    if (!(spectral_radius > 0.0) || spectral_radius >= 1.0)
        throw ConfigError("XEsnConfig: spectral_radius must be in (0, 1)");
    if (!(density > 0.0) || density > 1.0)
        throw ConfigError("XEsnConfig: density must be in (0, 1]");
    if (!(input_scale > 0.0)) throw ConfigError("XEsnConfig: input_scale must be positive");
    if (gate_mode == GateMode::ScalarLeak && (leak < 0.0 || leak > 1.0))
        throw ConfigError("XEsnConfig: leak must be in [0, 1]");
    if (!(norm_eps > 0.0)) throw ConfigError("XEsnConfig: norm_eps must be positive");
}

XEsnUnit init_unit(const XEsnConfig& cfg, int input_dim, RngStream& rng) {
    cfg.validate();
    if (input_dim < 1) throw ConfigError("init_unit: input_dim must be >= 1");

    XEsnUnit u;
    u.config = cfg;
    u.w_in = uniform_matrix(cfg.size, input_dim, -cfg.input_scale, cfg.input_scale,
                            1.0, rng);
    // Nilpotent draws are possible at high sparsity and tiny size; bounded retry.
    const int kMaxRetries = 5;
    bool scaled = false;
    for (int attempt = 0; attempt <= kMaxRetries && !scaled; ++attempt) {
        RngStream wr = attempt == 0 ? rng.substream(0x5E << 8) : rng.substream((0x5E << 8) + attempt);
        Mat raw = cfg.size == 1 ? uniform_matrix(1, 1, -1.0, 1.0, 1.0, wr)
                                : uniform_matrix(cfg.size, cfg.size, -1.0, 1.0,
                                                 cfg.density, wr);
        try {
            u.w = scale_to_radius(raw, cfg.spectral_radius);
            scaled = true;
        } catch (const NumericError&) {
            if (attempt == kMaxRetries)
                throw NumericError("init_unit: recurrent matrix degenerate after retries");
        }
    }
    u.measured_radius = spectral_radius(u.w).value;
    u.bias = uniform_vector(cfg.size, -cfg.input_scale, cfg.input_scale, rng);

    u.gate_state.resize(cfg.size);
    u.gate_input.resize(cfg.size);
    if (cfg.gate_mode == GateMode::ScalarLeak) {
        for (int i = 0; i < cfg.size; ++i) {
            u.gate_state[i] = 1.0 - cfg.leak;
            u.gate_input[i] = cfg.leak;
        }
    } else {
        // Convex-combination gates: diag(W1) + diag(W2) = 1 elementwise.
        for (int i = 0; i < cfg.size; ++i) {
            u.gate_state[i] = rng.uniform(0.0, 1.0);
            u.gate_input[i] = 1.0 - u.gate_state[i];
        }
    }
    u.state.assign(cfg.size, 0.0);
    return u;
}

namespace {

void preactivation(const XEsnUnit& u, const Vec& h, Vec& pre) {
    if (static_cast<int>(h.size()) != u.input_dim())
        throw ShapeError("reservoir step: input length " + std::to_string(h.size()) +
                         " != expected " + std::to_string(u.input_dim()));
    const int n = u.size();
    pre.resize(n);
    matvec(u.w_in, h.data(), pre.data());
    Vec rec(n);
    matvec(u.w, u.state.data(), rec.data());
    for (int i = 0; i < n; ++i) pre[i] += u.bias[i] + rec[i];
}

}  // namespace

const Vec& step_classic(XEsnUnit& unit, const Vec& h, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("step_classic: alpha must be in [0, 1]");
    Vec pre;
    preactivation(unit, h, pre);
    const int n = unit.size();
    for (int i = 0; i < n; ++i)
        unit.state[i] = (1.0 - alpha) * unit.state[i] + alpha * std::tanh(pre[i]);
    return unit.state;
}

const Vec& step_mcra(XEsnUnit& unit, const Vec& h) {
    const XEsnConfig& cfg = unit.config;
    const int n = unit.size();
    Vec pre;
    preactivation(unit, h, pre);

    Vec inner(n);
    if (cfg.norm_enabled && n >= 2) {
        layer_norm(pre.data(), inner.data(), n, cfg.norm_eps);
    } else {
        inner = pre;
    }
    apply_activation(cfg.sigma1, inner.data(), inner.data(), n);
    if (cfg.clip_enabled) clip(inner.data(), inner.data(), n, -1.0, 1.0);

    for (int i = 0; i < n; ++i) {
        const double mixed = unit.gate_state[i] * unit.state[i] +
                             unit.gate_input[i] * inner[i];
        unit.state[i] = apply_activation(cfg.sigma2, mixed);
    }
    if (!all_finite(unit.state))
        throw NumericError("step_mcra: non-finite reservoir state");
    return unit.state;
}

std::vector<Vec> run(XEsnUnit& unit, const std::vector<Vec>& sequence, int washout) {
    if (sequence.empty()) throw DataError("run: empty input sequence");
    if (washout >= static_cast<int>(sequence.size()))
        throw ConfigError("run: washout must be shorter than the sequence");
    reset(unit);
    std::vector<Vec> states;
    states.reserve(sequence.size() - washout);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        step_mcra(unit, sequence[t]);
        if (static_cast<int>(t) >= washout) states.push_back(unit.state);
    }
    return states;
}

void reset(XEsnUnit& unit) { unit.state.assign(unit.size(), 0.0); }

}  // namespace echoflow
