#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "echoflow/linalg.hpp"
#include "echoflow/ops.hpp"
#include "echoflow/rng.hpp"

namespace echoflow {

enum class GateMode { ScalarLeak, DiagonalGates };

struct XEsnConfig {
    int size = 100;               // N_r
    double spectral_radius = 0.9; // rho, in (0,1)
    double density = 0.5;         // fraction of nonzero recurrent entries
    double input_scale = 0.1;     // sigma_in
    Activation sigma1 = Activation::Tanh;
    Activation sigma2 = Activation::Tanh;
    GateMode gate_mode = GateMode::DiagonalGates;
    double leak = 0.5;            // alpha, used when gate_mode == ScalarLeak
    bool clip_enabled = true;
    bool norm_enabled = true;
    double norm_eps = 1e-5;
    std::uint64_t seed = 0;

    void validate() const;
};

// One frozen reservoir. All weights are fixed at init; only `state` mutates.
struct XEsnUnit {
    XEsnConfig config;
    Mat w_in;        // N_r x input_dim
    Mat w;           // N_r x N_r, ESP-scaled
    Vec bias;        // N_r
    Vec gate_state;  // diag(W1), weight on the previous state
    Vec gate_input;  // diag(W2) = 1 - diag(W1)
    Vec state;       // N_r
    double measured_radius = 0.0;

    int size() const { return config.size; }
    int input_dim() const { return w_in.cols; }
};

XEsnUnit init_unit(const XEsnConfig& cfg, int input_dim, RngStream& rng);

// Classical LI-ESN update: x' = (1-a) x + a tanh(W_in h + bias + W x).
const Vec& step_classic(XEsnUnit& unit, const Vec& h, double alpha);

// MCRA update:
//   x' = s2( W1 x + W2 * Clip(s1(Norm(W_in h + bias + W x)), -1, 1) )
const Vec& step_mcra(XEsnUnit& unit, const Vec& h);

// Reset to zero state, step through the sequence, return states from index
// `washout` on. The unit keeps its final state for streaming continuation.
std::vector<Vec> run(XEsnUnit& unit, const std::vector<Vec>& sequence,
                     int washout = 0);

void reset(XEsnUnit& unit);

}  // namespace echoflow
