#include "echoflow/nn.hpp"

#include <cmath>

#include "echoflow/errors.hpp"

namespace echoflow {

void PTensor::init_fan_in(int fan_in, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    init_uniform(-bound, bound, rng);
}

void Linear::forward(const double* x, double* y) const {
    for (int i = 0; i < W.rows; ++i) {
        const double* r = W.w.data() + static_cast<std::size_t>(i) * W.cols;
        double s = b.w[i];
        for (int j = 0; j < W.cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
}

void Linear::backward(const double* x, const double* gy, double* gx) {
    for (int i = 0; i < W.rows; ++i) {
        const double gyi = gy[i];
        b.g[i] += gyi;
        double* gr = W.g.data() + static_cast<std::size_t>(i) * W.cols;
        for (int j = 0; j < W.cols; ++j) gr[j] += gyi * x[j];
    }
    if (gx) {
        for (int j = 0; j < W.cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < W.rows; ++i)
                s += W.w[static_cast<std::size_t>(i) * W.cols + j] * gy[i];
            gx[j] += s;
        }
    }
}

std::size_t total_params(const ParamRegistry& reg) {
    std::size_t n = 0;
    for (const auto& p : reg) n += p.t->size();
    return n;
}

void zero_grads(const ParamRegistry& reg) {
    for (const auto& p : reg) p.t->zero_grad();
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::attach(const ParamRegistry& reg) {
    m_.clear();
    v_.clear();
    for (const auto& p : reg) {
        m_.emplace_back(p.t->size(), 0.0);
        v_.emplace_back(p.t->size(), 0.0);
    }
    t_ = 0;
}

void AdamOptimizer::step(const ParamRegistry& reg) {
    if (m_.size() != reg.size())
        throw ShapeError("AdamOptimizer: registry does not match attached state");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < reg.size(); ++k) {
        PTensor& t = *reg[k].t;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double g = t.g[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t.w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace echoflow
