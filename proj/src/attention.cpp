#include "echoflow/attention.hpp"

#include <cmath>

#include "echoflow/errors.hpp"
#include "echoflow/ops.hpp"

namespace echoflow {

void FusionConfig::validate() const {
    if (d_model < 1) throw ConfigError("FusionConfig: d_model must be >= 1");
    if (heads < 1) throw ConfigError("FusionConfig: heads must be >= 1");
    if (d_model % heads != 0) throw ConfigError("FusionConfig: d_model must be divisible by heads");
    if (layers < 1) throw ConfigError("FusionConfig: layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("FusionConfig: dropout must be in [0, 1)");
    if (!(ln_eps > 0.0)) throw ConfigError("FusionConfig: ln_eps must be positive");
}

AttentionLayer::AttentionLayer(int d, int h)
    : d_model(d), heads(h), Wq(d, d), Wk(d, d), Wv(d, d), Wo(d, d), bo(d, 1) {
    if (d % h != 0) throw ConfigError("AttentionLayer: d_model must be divisible by heads");
}

void AttentionLayer::init(RngStream& rng) {
    Wq.init_fan_in(d_model, rng);
    Wk.init_fan_in(d_model, rng);
    Wv.init_fan_in(d_model, rng);
    Wo.init_fan_in(d_model, rng);
}

namespace {

// Y = X * W for row-major token matrices (n x d) x (d x d).
void project(const TokenSeq& in, const PTensor& W, TokenSeq& out) {
    out = TokenSeq(in.n, W.cols);
    gemm(false, false, in.n, W.cols, in.d, 1.0, in.x.data(), in.d, W.w.data(),
         W.cols, 0.0, out.x.data(), out.d);
}

}  // namespace

TokenSeq attend(AttentionLayer& layer, const TokenSeq& queries,
                const TokenSeq& keys_values, bool train_mode, RngStream& rng,
                AttentionCache* cache, double dropout_rate, double ln_eps) {
    const int d = layer.d_model;
    if (queries.n == 0 || keys_values.n == 0)
        throw ShapeError("attend: empty token sequence");
    if (queries.d != d || keys_values.d != d)
        throw ShapeError("attend: token width does not match d_model");

    const int nq = queries.n;
    const int nk = keys_values.n;
    const int H = layer.heads;
    const int dh = layer.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    AttentionCache local;
    AttentionCache& c = cache ? *cache : local;
    c.q_in = queries;
    c.k_in = keys_values;
    project(queries, layer.Wq, c.qp);
    project(keys_values, layer.Wk, c.kp);
    project(keys_values, layer.Wv, c.vp);

    c.probs.assign(static_cast<std::size_t>(H) * nq * nk, 0.0);
    c.heads_out = TokenSeq(nq, d);
    for (int h = 0; h < H; ++h) {
        double* probs_h = c.probs.data() + static_cast<std::size_t>(h) * nq * nk;
        // scores = Qh Kh^T / sqrt(dh), head block = column slice [h*dh, (h+1)*dh)
        gemm(false, true, nq, nk, dh, scale, c.qp.x.data() + h * dh, d,
             c.kp.x.data() + h * dh, d, 0.0, probs_h, nk);
        for (int i = 0; i < nq; ++i) softmax_inplace(probs_h + static_cast<std::size_t>(i) * nk, nk);
        // head output into its column block of heads_out
        gemm(false, false, nq, dh, nk, 1.0, probs_h, nk, c.vp.x.data() + h * dh,
             d, 0.0, c.heads_out.x.data() + h * dh, d);
    }

    project(c.heads_out, layer.Wo, c.proj);
    for (int i = 0; i < nq; ++i) {
        double* r = c.proj.row(i);
        for (int j = 0; j < d; ++j) r[j] += layer.bo.w[j];
    }

    c.drop_mask.clear();
    TokenSeq dropped = c.proj;
    if (train_mode && dropout_rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - dropout_rate);
        c.drop_mask.assign(dropped.x.size(), 0.0);
        for (std::size_t i = 0; i < dropped.x.size(); ++i) {
            const double mult = rng.bernoulli(dropout_rate) ? 0.0 : keep_scale;
            c.drop_mask[i] = mult;
            dropped.x[i] *= mult;
        }
    }

    c.normed = TokenSeq(nq, d);
    c.inv_std.assign(nq, 0.0);
    for (int i = 0; i < nq; ++i) {
        double* row = dropped.row(i);
        const double* q = queries.row(i);
        for (int j = 0; j < d; ++j) row[j] += q[j];
        layer_norm(row, c.normed.row(i), d, ln_eps, nullptr, &c.inv_std[i]);
    }
    return c.normed;
}

void attend_backward(AttentionLayer& layer, const AttentionCache& cache,
                     const TokenSeq& g_out, TokenSeq& g_queries, TokenSeq& g_kv) {
    const int d = layer.d_model;
    const int nq = cache.q_in.n;
    const int nk = cache.k_in.n;
    const int H = layer.heads;
    const int dh = layer.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    if (g_queries.n != nq) g_queries = TokenSeq(nq, d);
    if (g_kv.n != nk) g_kv = TokenSeq(nk, d);

    // LN backward per row, then split into residual and projection paths.
    TokenSeq g_r(nq, d);
    for (int i = 0; i < nq; ++i)
        layer_norm_backward(cache.normed.row(i), g_out.row(i), g_r.row(i), d,
                            cache.inv_std[i]);
    // residual into queries
    for (int i = 0; i < nq; ++i) {
        double* gq = g_queries.row(i);
        const double* gr = g_r.row(i);
        for (int j = 0; j < d; ++j) gq[j] += gr[j];
    }
    TokenSeq g_z = g_r;
    if (!cache.drop_mask.empty()) {
        for (std::size_t i = 0; i < g_z.x.size(); ++i) g_z.x[i] *= cache.drop_mask[i];
    }

    // output projection: proj = heads_out * Wo + bo
    TokenSeq g_heads(nq, d);
    gemm(false, true, nq, d, d, 1.0, g_z.x.data(), d, layer.Wo.w.data(), d, 0.0,
         g_heads.x.data(), d);
    gemm(true, false, d, d, nq, 1.0, cache.heads_out.x.data(), d, g_z.x.data(), d,
         1.0, layer.Wo.g.data(), d);
    for (int i = 0; i < nq; ++i) {
        const double* gz = g_z.row(i);
        for (int j = 0; j < d; ++j) layer.bo.g[j] += gz[j];
    }

    TokenSeq g_qp(nq, d), g_kp(nk, d), g_vp(nk, d);
    std::vector<double> g_probs(static_cast<std::size_t>(nq) * nk);
    std::vector<double> g_scores(static_cast<std::size_t>(nq) * nk);
    for (int h = 0; h < H; ++h) {
        const double* probs_h = cache.probs.data() + static_cast<std::size_t>(h) * nq * nk;
        // gP = gOh Vh^T ; gVh += P^T gOh
        gemm(false, true, nq, nk, dh, 1.0, g_heads.x.data() + h * dh, d,
             cache.vp.x.data() + h * dh, d, 0.0, g_probs.data(), nk);
        gemm(true, false, nk, dh, nq, 1.0, probs_h, nk,
             g_heads.x.data() + h * dh, d, 1.0, g_vp.x.data() + h * dh, d);
        for (int i = 0; i < nq; ++i)
            softmax_backward(probs_h + static_cast<std::size_t>(i) * nk,
                             g_probs.data() + static_cast<std::size_t>(i) * nk,
                             g_scores.data() + static_cast<std::size_t>(i) * nk, nk);
        // gQh += gS Kh * scale ; gKh += gS^T Qh * scale
        gemm(false, false, nq, dh, nk, scale, g_scores.data(), nk,
             cache.kp.x.data() + h * dh, d, 1.0, g_qp.x.data() + h * dh, d);
        gemm(true, false, nk, dh, nq, scale, g_scores.data(), nk,
             cache.qp.x.data() + h * dh, d, 1.0, g_kp.x.data() + h * dh, d);
    }

    // projection weights and input grads
    gemm(false, true, nq, d, d, 1.0, g_qp.x.data(), d, layer.Wq.w.data(), d, 1.0,
         g_queries.x.data(), d);
    gemm(true, false, d, d, nq, 1.0, cache.q_in.x.data(), d, g_qp.x.data(), d,
         1.0, layer.Wq.g.data(), d);
    gemm(false, true, nk, d, d, 1.0, g_kp.x.data(), d, layer.Wk.w.data(), d, 1.0,
         g_kv.x.data(), d);
    gemm(true, false, d, d, nk, 1.0, cache.k_in.x.data(), d, g_kp.x.data(), d,
         1.0, layer.Wk.g.data(), d);
    gemm(false, true, nk, d, d, 1.0, g_vp.x.data(), d, layer.Wv.w.data(), d, 1.0,
         g_kv.x.data(), d);
    gemm(true, false, d, d, nk, 1.0, cache.k_in.x.data(), d, g_vp.x.data(), d,
         1.0, layer.Wv.g.data(), d);
}

CrossAttentionStack::CrossAttentionStack(const FusionConfig& fc, int mem_width,
                                         int win_width)
    : cfg(fc), mem_adapter(fc.d_model, mem_width), win_adapter(fc.d_model, win_width) {
    cfg.validate();
    for (int i = 0; i < cfg.layers; ++i) layers.emplace_back(cfg.d_model, cfg.heads);
}

void CrossAttentionStack::init(RngStream& rng) {
    mem_adapter.init(rng);
    win_adapter.init(rng);
    for (auto& l : layers) l.init(rng);
}

namespace {

void adapt(const Linear& adapter, const TokenSeq& in, TokenSeq& out) {
    if (in.d != adapter.in_dim())
        throw ShapeError("adapter: token width " + std::to_string(in.d) +
                         " != expected " + std::to_string(adapter.in_dim()));
    out = TokenSeq(in.n, adapter.out_dim());
    for (int i = 0; i < in.n; ++i) adapter.forward(in.row(i), out.row(i));
}

TokenSeq stack_attend(AttentionLayer& layer, const FusionConfig& cfg,
                      const TokenSeq& queries, const TokenSeq& kv,
                      bool train_mode, RngStream& rng, AttentionCache& c) {
    return attend(layer, queries, kv, train_mode, rng, &c, cfg.dropout, cfg.ln_eps);
}

}  // namespace

TokenSeq CrossAttentionStack::front_combine(const TokenSeq& memory,
                                            const TokenSeq& window,
                                            bool train_mode, RngStream& rng,
                                            Cache* cache) {
    if (memory.n < 1 || window.n < 1)
        throw ShapeError("front_combine: empty memory or window sequence");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.mem_raw = memory;
    c.win_raw = window;
    adapt(mem_adapter, memory, c.mem_adapted);
    adapt(win_adapter, window, c.win_adapted);
    c.layer_caches.resize(layers.size());
    TokenSeq fused = c.mem_adapted;
    for (std::size_t i = 0; i < layers.size(); ++i)
        fused = stack_attend(layers[i], cfg, fused, c.win_adapted, train_mode,
                             rng, c.layer_caches[i]);
    return fused;
}

TokenSeq CrossAttentionStack::back_combine(const TokenSeq& base_pred,
                                           const TokenSeq& memory,
                                           bool train_mode, RngStream& rng,
                                           Cache* cache) {
    if (base_pred.n < 1 || memory.n < 1)
        throw ShapeError("back_combine: empty input sequence");
    if (base_pred.d != cfg.d_model)
        throw ShapeError("back_combine: base prediction tokens must be d_model wide");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.mem_raw = memory;
    adapt(mem_adapter, memory, c.mem_adapted);
    c.layer_caches.resize(layers.size());
    TokenSeq out = base_pred;
    for (std::size_t i = 0; i < layers.size(); ++i)
        out = stack_attend(layers[i], cfg, out, c.mem_adapted, train_mode, rng,
                           c.layer_caches[i]);
    return out;
}

void CrossAttentionStack::front_combine_backward(const Cache& cache,
                                                 const TokenSeq& g_fused,
                                                 TokenSeq& g_memory,
                                                 TokenSeq& g_window,
                                                 const TokenSeq* g_win_adapted_extra) {
    TokenSeq g_q = g_fused;
    TokenSeq g_win_adapted(cache.win_adapted.n, cfg.d_model);
    if (g_win_adapted_extra) g_win_adapted = *g_win_adapted_extra;
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
        TokenSeq g_q_prev(cache.layer_caches[i].q_in.n, cfg.d_model);
        attend_backward(layers[i], cache.layer_caches[i], g_q, g_q_prev,
                        g_win_adapted);
        g_q = std::move(g_q_prev);
    }
    // g_q now holds grads wrt adapted memory tokens.
    g_memory = TokenSeq(cache.mem_raw.n, cache.mem_raw.d);
    for (int i = 0; i < cache.mem_raw.n; ++i)
        mem_adapter.backward(cache.mem_raw.row(i), g_q.row(i), g_memory.row(i));
    g_window = TokenSeq(cache.win_raw.n, cache.win_raw.d);
    for (int i = 0; i < cache.win_raw.n; ++i)
        win_adapter.backward(cache.win_raw.row(i), g_win_adapted.row(i),
                             g_window.row(i));
}

void CrossAttentionStack::back_combine_backward(const Cache& cache,
                                                const TokenSeq& g_out,
                                                TokenSeq& g_base_pred,
                                                TokenSeq& g_memory) {
    TokenSeq g_q = g_out;
    TokenSeq g_mem_adapted(cache.mem_adapted.n, cfg.d_model);
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
        TokenSeq g_q_prev(cache.layer_caches[i].q_in.n, cfg.d_model);
        attend_backward(layers[i], cache.layer_caches[i], g_q, g_q_prev,
                        g_mem_adapted);
        g_q = std::move(g_q_prev);
    }
    g_base_pred = std::move(g_q);
    g_memory = TokenSeq(cache.mem_raw.n, cache.mem_raw.d);
    for (int i = 0; i < cache.mem_raw.n; ++i)
        mem_adapter.backward(cache.mem_raw.row(i), g_mem_adapted.row(i),
                             g_memory.row(i));
}

}  // namespace echoflow
