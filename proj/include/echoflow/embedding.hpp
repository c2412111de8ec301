#pragma once

#include "echoflow/nn.hpp"

namespace echoflow {

// Per-channel trainable affine lift: channel c of u_t contributes the block
// w_c * u_t[c] + b_c of length E. Disabled mode is the identity (E treated as 1).
struct EmbeddingEncoder {
    int embed_dim = 1;   // E
    int channels = 1;    // N_u
    bool enabled = true;
    PTensor w;           // channels x E
    PTensor b;           // channels x E

    EmbeddingEncoder() = default;
    EmbeddingEncoder(int E, int n_u, bool on);

    int out_dim() const { return enabled ? embed_dim * channels : channels; }

    void init(RngStream& rng);

    void embed(const double* u, double* h) const;
    Vec embed(const Vec& u) const;

    // Accumulates encoder grads from the gradient of one embedded step.
    void backward(const double* u, const double* gh);
};

// Restores an E*N_u prediction block to N_u scalars: out = W lrelu(x) + bias.
// The leaky relu sits on the input pre-activation, so outputs can be negative
// and gradients survive an all-negative block.
struct RestorationDecoder {
    int channels = 1;
    int in_dim = 1;   // E * N_u
    bool enabled = true;
    Linear map;       // channels x in_dim

    RestorationDecoder() = default;
    RestorationDecoder(int E, int n_u, bool on);

    void init(RngStream& rng);

    void restore(const double* x, double* out) const;
    Vec restore(const Vec& x) const;

    // gx may be null to stop propagation.
    void backward(const double* x, const double* gout, double* gx);
};

}  // namespace echoflow
