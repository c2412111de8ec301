#pragma once

#include <string>

#include "echoflow/linalg.hpp"

namespace echoflow {

enum class Activation { Tanh, Sigmoid, Relu, LeakyRelu, Identity };

// Accepts tanh | sigmoid | relu | leaky_relu | linear (alias identity).
Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

double apply_activation(Activation a, double x);
void apply_activation(Activation a, const double* x, double* y, int n);
Vec activate(Activation a, const Vec& v);
Vec activate(const std::string& name, const Vec& v);

// (v - mean) / sqrt(population variance + eps); no learnable affine.
void layer_norm(const double* x, double* y, int n, double eps,
                double* out_mean = nullptr, double* out_inv_std = nullptr);
Vec layer_norm(const Vec& v, double eps);

// Gradient of layer_norm given the normalized output y and saved inv_std.
void layer_norm_backward(const double* y, const double* gy, double* gx, int n,
                         double inv_std);

void clip(const double* x, double* y, int n, double lo, double hi);
Vec clip(const Vec& v, double lo, double hi);

// Max-stabilized; writes in place.
void softmax_inplace(double* x, int n);
Vec softmax(const Vec& v);

// gz from probabilities p and upstream gp.
void softmax_backward(const double* p, const double* gp, double* gz, int n);

}  // namespace echoflow
