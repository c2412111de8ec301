#pragma once

#include <optional>

#include "echoflow/attention.hpp"
#include "echoflow/data.hpp"
#include "echoflow/embedding.hpp"
#include "echoflow/group.hpp"
#include "echoflow/nn.hpp"

namespace echoflow {

enum class Variant { EchoSolo, EchoMlp };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    Variant variant = Variant::EchoSolo;
    int embed_dim = 8;          // E
    bool embedding_enabled = true;
    int k = 64;                 // look-back window
    int horizon = 16;           // tau
    GroupConfig group;
    FusionConfig fusion;
    int base_hidden = 256;      // FFN width of the echo_mlp base model
    std::uint64_t seed = 0;

    void validate() const;
};

// End-to-end forecast model: encoder -> group X-ESNs -> front combiner ->
// (optional base model) -> head -> restoration decoder.
//
// The reservoir input stream is embedded with a frozen snapshot of the
// encoder taken at init, so reservoir trajectories stay a pure function of
// the data while the trainable encoder feeds the window-token path.
struct ForecastModel {
    ModelConfig cfg;
    int channels = 0;  // N_u

    EmbeddingEncoder encoder;           // trainable
    EmbeddingEncoder reservoir_encoder; // frozen snapshot of the initial encoder
    Group group;
    CrossAttentionStack combiner;
    Linear base_l1, base_l2;  // echo_mlp base model (relu hidden)
    Linear head;
    RestorationDecoder decoder;
    std::optional<Normalizer> normalizer;  // set by training, kept in checkpoints

    int embed_width() const { return encoder.out_dim(); }  // E * N_u

    // Trainable tensors only; reservoirs and the encoder snapshot never appear.
    ParamRegistry registry();

    struct ForwardCache {
        Mat window_raw;             // k x N_u
        TokenSeq win_tokens;        // k x (E*N_u)
        std::vector<Vec> states;    // per-unit reservoir state at the origin
        TokenSeq mem_tokens;        // L x m
        CrossAttentionStack::Cache att;
        TokenSeq fused;             // L x d_model
        Vec flat;                   // echo_solo head input
        Vec base_in, base_hidden_pre, base_hidden, base_out;  // echo_mlp
        Vec dec_in;                 // tau * (E*N_u) pre-restoration
        Mat pred;                   // tau x N_u
    };

    // `states` holds each unit's reservoir state after consuming the window's
    // last observation. Window rows are on the normalized scale.
    Mat forward_window(const Mat& window, const std::vector<Vec>& states,
                       bool train_mode, RngStream& rng,
                       ForwardCache* cache = nullptr);

    // Accumulates parameter gradients from d(loss)/d(pred).
    void backward_window(const ForwardCache& cache, const Mat& g_pred);

    // Streaming advance: embeds one observation with the frozen snapshot and
    // steps every reservoir once. No trainable state changes.
    void stream_advance(const Vec& u);

    void reset_reservoirs();

    // Forecast from the model's current reservoir states and the last k rows
    // of `history` (normalized scale). Eval mode.
    Mat forecast(const Mat& history);
};

ForecastModel make_model(const ModelConfig& cfg, int channels);

// Repeats the last observation tau times.
Mat persistence_baseline(const Mat& window, int tau);

}  // namespace echoflow
