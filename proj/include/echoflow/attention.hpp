#pragma once

#include <vector>

#include "echoflow/nn.hpp"
#include "echoflow/rng.hpp"

namespace echoflow {

// Row-major sequence of tokens, one token per row.
struct TokenSeq {
    int n = 0;  // token count
    int d = 0;  // token width
    std::vector<double> x;

    TokenSeq() = default;
    TokenSeq(int n_, int d_) : n(n_), d(d_), x(static_cast<std::size_t>(n_) * d_, 0.0) {}

    double* row(int i) { return x.data() + static_cast<std::size_t>(i) * d; }
    const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * d; }
};

struct FusionConfig {
    int d_model = 64;
    int heads = 4;
    int layers = 2;
    double dropout = 0.2;
    double ln_eps = 1e-5;

    void validate() const;
};

// One multi-head cross-attention layer. Head projections are packed as
// column blocks of d_model x d_model weight matrices.
struct AttentionLayer {
    int d_model = 0;
    int heads = 1;
    PTensor Wq, Wk, Wv;  // d_model x d_model
    PTensor Wo;          // d_model x d_model output projection
    PTensor bo;          // d_model x 1

    AttentionLayer() = default;
    AttentionLayer(int d, int h);
    void init(RngStream& rng);
    int head_dim() const { return d_model / heads; }
};

// Saved intermediates of one attend() call, consumed by attend_backward().
struct AttentionCache {
    TokenSeq q_in, k_in;
    TokenSeq qp, kp, vp;
    std::vector<double> probs;     // heads * n_q * n_k, row-softmaxed scores
    TokenSeq heads_out;            // n_q x d_model, concatenated head outputs
    TokenSeq proj;                 // n_q x d_model, pre-dropout
    std::vector<double> drop_mask; // inverted-dropout multipliers; empty in eval
    TokenSeq normed;               // final output (post-LN)
    std::vector<double> inv_std;   // per-row LN statistic
};

// LN(queries + DO(proj(concat_h Softmax(Q Wq (K Wk)^T / sqrt(d_h)) K Wv))).
// Residual comes from the query stream; inverted dropout only in train mode.
TokenSeq attend(AttentionLayer& layer, const TokenSeq& queries,
                const TokenSeq& keys_values, bool train_mode, RngStream& rng,
                AttentionCache* cache = nullptr, double dropout_rate = 0.0,
                double ln_eps = 1e-5);

// Accumulates layer grads; adds input grads into g_queries / g_keys_values.
void attend_backward(AttentionLayer& layer, const AttentionCache& cache,
                     const TokenSeq& g_out, TokenSeq& g_queries,
                     TokenSeq& g_kv);

// Front/back combiner: a stack of cross-attention layers over adapted memory
// and window tokens. Adapters lift readout-width and embedding-width tokens
// to d_model.
struct CrossAttentionStack {
    FusionConfig cfg;
    Linear mem_adapter;  // d_model x m
    Linear win_adapter;  // d_model x (E * N_u)
    std::vector<AttentionLayer> layers;

    CrossAttentionStack() = default;
    CrossAttentionStack(const FusionConfig& fc, int mem_width, int win_width);
    void init(RngStream& rng);

    struct Cache {
        TokenSeq mem_raw, win_raw;
        TokenSeq mem_adapted, win_adapted;
        std::vector<AttentionCache> layer_caches;
    };

    // Memory tokens query the adapted window keys/values; each subsequent
    // layer re-queries with the previous fused output. Returns L fused tokens.
    TokenSeq front_combine(const TokenSeq& memory, const TokenSeq& window,
                           bool train_mode, RngStream& rng, Cache* cache = nullptr);
    // Base-model output tokens (already d_model wide) query adapted memory.
    TokenSeq back_combine(const TokenSeq& base_pred, const TokenSeq& memory,
                          bool train_mode, RngStream& rng, Cache* cache = nullptr);

    // Returns grads wrt raw memory tokens and raw window tokens. An optional
    // extra gradient on the adapted window tokens (e.g. from a base model that
    // also consumes them directly) is folded in before the adapter backward.
    void front_combine_backward(const Cache& cache, const TokenSeq& g_fused,
                                TokenSeq& g_memory, TokenSeq& g_window,
                                const TokenSeq* g_win_adapted_extra = nullptr);
    void back_combine_backward(const Cache& cache, const TokenSeq& g_out,
                               TokenSeq& g_base_pred, TokenSeq& g_memory);
};

}  // namespace echoflow
