#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "echoflow/linalg.hpp"

namespace echoflow {

// A trainable tensor: value storage plus a gradient accumulator.
struct PTensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> w;
    std::vector<double> g;

    PTensor() = default;
    PTensor(int r, int c)
        : rows(r), cols(c), w(static_cast<std::size_t>(r) * c, 0.0),
          g(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return w[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return w[static_cast<std::size_t>(i) * cols + j]; }
    double& gat(int i, int j) { return g[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

    void init_uniform(double low, double high, RngStream& rng) {
        for (double& e : w) e = rng.uniform(low, high);
    }
    // Scaled uniform init, fan-in based.
    void init_fan_in(int fan_in, RngStream& rng);
};

// y = W x + b with hand-written backward.
struct Linear {
    PTensor W;  // out x in
    PTensor b;  // out x 1

    Linear() = default;
    Linear(int out, int in) : W(out, in), b(out, 1) {}

    int in_dim() const { return W.cols; }
    int out_dim() const { return W.rows; }

    void init(RngStream& rng) { W.init_fan_in(W.cols, rng); }

    void forward(const double* x, double* y) const;
    // Accumulates into W.g / b.g; gx may be null to stop propagation.
    void backward(const double* x, const double* gy, double* gx);
};

// Named view over every trainable tensor of a model; drives the optimizer
// and the finite-difference gradient checker.
struct ParamRef {
    std::string name;
    PTensor* t;
};

using ParamRegistry = std::vector<ParamRef>;

std::size_t total_params(const ParamRegistry& reg);
void zero_grads(const ParamRegistry& reg);

// Adaptive-moment SGD with bias correction.
class AdamOptimizer {
public:
    AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void attach(const ParamRegistry& reg);
    void step(const ParamRegistry& reg);

private:
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace echoflow
