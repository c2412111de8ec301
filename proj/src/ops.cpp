#include "echoflow/ops.hpp"

#include <algorithm>
#include <cmath>

#include "echoflow/errors.hpp"

namespace echoflow {

namespace {
constexpr double kLeakySlope = 0.01;
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::Relu;
    if (name == "leaky_relu") return Activation::LeakyRelu;
    if (name == "linear" || name == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: '" + name + "'");
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Identity: return "linear";
    }
    return "?";
}

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::LeakyRelu: return x > 0.0 ? x : kLeakySlope * x;
        case Activation::Identity: return x;
    }
    return x;
}

void apply_activation(Activation a, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = apply_activation(a, x[i]);
}

Vec activate(Activation a, const Vec& v) {
    Vec y(v.size());
    apply_activation(a, v.data(), y.data(), static_cast<int>(v.size()));
    return y;
}

Vec activate(const std::string& name, const Vec& v) {
    return activate(activation_from_name(name), v);
}

void layer_norm(const double* x, double* y, int n, double eps, double* out_mean,
                double* out_inv_std) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x[i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        var += d * d;
    }
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < n; ++i) y[i] = (x[i] - mean) * inv_std;
    if (out_mean) *out_mean = mean;
    if (out_inv_std) *out_inv_std = inv_std;
}

Vec layer_norm(const Vec& v, double eps) {
    if (v.size() < 2) throw ShapeError("layer_norm: need at least 2 elements");
    Vec y(v.size());
    layer_norm(v.data(), y.data(), static_cast<int>(v.size()), eps);
    return y;
}

void layer_norm_backward(const double* y, const double* gy, double* gx, int n,
                         double inv_std) {
    double mean_gy = 0.0, mean_gyy = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_gy += gy[i];
        mean_gyy += gy[i] * y[i];
    }
    mean_gy /= n;
    mean_gyy /= n;
    for (int i = 0; i < n; ++i)
        gx[i] = inv_std * (gy[i] - mean_gy - y[i] * mean_gyy);
}

void clip(const double* x, double* y, int n, double lo, double hi) {
    for (int i = 0; i < n; ++i) y[i] = std::clamp(x[i], lo, hi);
}

Vec clip(const Vec& v, double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("clip: requires lo < hi");
    Vec y(v.size());
    clip(v.data(), y.data(), static_cast<int>(v.size()), lo, hi);
    return y;
}

void softmax_inplace(double* x, int n) {
    double mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    for (int i = 0; i < n; ++i) x[i] /= sum;
}

Vec softmax(const Vec& v) {
    if (v.empty()) throw ShapeError("softmax: empty input");
    Vec y = v;
    softmax_inplace(y.data(), static_cast<int>(y.size()));
    return y;
}

void softmax_backward(const double* p, const double* gp, double* gz, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += gp[i] * p[i];
    for (int i = 0; i < n; ++i) gz[i] = p[i] * (gp[i] - acc);
}

}  // namespace echoflow
