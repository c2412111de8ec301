#pragma once

#include <cstdint>
#include <vector>

#include "echoflow/nn.hpp"
#include "echoflow/reservoir.hpp"

namespace echoflow {

// Trainable one-layer readout: y = relu(W1 x + theta1), x in R^{N_r}, y in R^m.
struct MlpReadout {
    Linear layer;

    MlpReadout() = default;
    MlpReadout(int m, int reservoir_size) : layer(m, reservoir_size) {}

    int out_dim() const { return layer.out_dim(); }

    void forward(const double* x, double* y) const;
    // gy -> accumulates layer grads; gx is dropped (reservoir states are frozen).
    void backward(const double* x, const double* y, const double* gy);
};

struct GroupConfig {
    std::vector<XEsnConfig> units;
    int readout_dim = 32;  // m, shared across all units

    int size() const { return static_cast<int>(units.size()); }
    void validate() const;
};

// The paper-default heterogeneous group of 10 units. Per-unit sigma2 cycles
// (tanh, sigmoid, relu); sigma1 is tanh for table-driven configs.
GroupConfig default_group(std::uint64_t seed = 0);

// Same layout with every reservoir size halved; desk-scale runs.
GroupConfig default_group_halved(std::uint64_t seed = 0);

struct Group {
    std::vector<XEsnUnit> units;
    std::vector<MlpReadout> readouts;
    int readout_dim = 0;

    int size() const { return static_cast<int>(units.size()); }
    int out_dim() const { return size() * readout_dim; }
};

Group init_group(const GroupConfig& cfg, int input_dim, RngStream& rng);

// Steps every unit with step_mcra and concatenates readout outputs in unit
// order. Units are independent, so the stepping loop runs under OpenMP;
// results are bitwise identical to the serial reference.
Vec group_forward(Group& g, const Vec& h);
Vec group_forward_serial(Group& g, const Vec& h);

// Step all units without computing readouts (streaming advance).
void group_step(Group& g, const Vec& h);
void group_step_serial(Group& g, const Vec& h);

void group_reset(Group& g);

}  // namespace echoflow
