#include "echoflow/embedding.hpp"

#include <cstring>

#include "echoflow/errors.hpp"

namespace echoflow {

EmbeddingEncoder::EmbeddingEncoder(int E, int n_u, bool on)
    : embed_dim(on ? E : 1), channels(n_u), enabled(on), w(n_u, on ? E : 1),
      b(n_u, on ? E : 1) {
    if (E < 1 || n_u < 1) throw ConfigError("EmbeddingEncoder: E and N_u must be >= 1");
}

void EmbeddingEncoder::init(RngStream& rng) {
    w.init_uniform(-1.0, 1.0, rng);
    b.init_uniform(-0.1, 0.1, rng);
}

void EmbeddingEncoder::embed(const double* u, double* h) const {
    if (!enabled) {
        std::memcpy(h, u, sizeof(double) * channels);
        return;
    }
    for (int c = 0; c < channels; ++c) {
        const double uc = u[c];
        const double* wc = w.w.data() + static_cast<std::size_t>(c) * embed_dim;
        const double* bc = b.w.data() + static_cast<std::size_t>(c) * embed_dim;
        double* out = h + static_cast<std::size_t>(c) * embed_dim;
        for (int e = 0; e < embed_dim; ++e) out[e] = wc[e] * uc + bc[e];
    }
}

Vec EmbeddingEncoder::embed(const Vec& u) const {
    if (static_cast<int>(u.size()) != channels)
        throw ShapeError("embed: input length " + std::to_string(u.size()) +
                         " != channel count " + std::to_string(channels));
    Vec h(out_dim());
    embed(u.data(), h.data());
    return h;
}

void EmbeddingEncoder::backward(const double* u, const double* gh) {
    if (!enabled) return;
    for (int c = 0; c < channels; ++c) {
        const double uc = u[c];
        double* gw = w.g.data() + static_cast<std::size_t>(c) * embed_dim;
        double* gb = b.g.data() + static_cast<std::size_t>(c) * embed_dim;
        const double* g = gh + static_cast<std::size_t>(c) * embed_dim;
        for (int e = 0; e < embed_dim; ++e) {
            gw[e] += g[e] * uc;
            gb[e] += g[e];
        }
    }
}

RestorationDecoder::RestorationDecoder(int E, int n_u, bool on)
    : channels(n_u), in_dim(on ? E * n_u : n_u), enabled(on), map(n_u, on ? E * n_u : n_u) {}

void RestorationDecoder::init(RngStream& rng) { map.init(rng); }

void RestorationDecoder::restore(const double* x, double* out) const {
    if (!enabled) {
        std::memcpy(out, x, sizeof(double) * channels);
        return;
    }
    Vec rx(in_dim);
    for (int i = 0; i < in_dim; ++i) rx[i] = x[i] > 0.0 ? x[i] : 0.01 * x[i];
    map.forward(rx.data(), out);
}

Vec RestorationDecoder::restore(const Vec& x) const {
    if (static_cast<int>(x.size()) != in_dim)
        throw ShapeError("restore: input length " + std::to_string(x.size()) +
                         " != expected " + std::to_string(in_dim));
    Vec out(channels);
    restore(x.data(), out.data());
    return out;
}

void RestorationDecoder::backward(const double* x, const double* gout, double* gx) {
    if (!enabled) {
        if (gx)
            for (int i = 0; i < channels; ++i) gx[i] += gout[i];
        return;
    }
    Vec rx(in_dim);
    for (int i = 0; i < in_dim; ++i) rx[i] = x[i] > 0.0 ? x[i] : 0.01 * x[i];
    Vec grx(in_dim, 0.0);
    map.backward(rx.data(), gout, grx.data());
    if (gx)
        for (int i = 0; i < in_dim; ++i) gx[i] += (x[i] > 0.0 ? 1.0 : 0.01) * grx[i];
}

}  // namespace echoflow
