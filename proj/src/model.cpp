#include "echoflow/model.hpp"

#include <cstring>

#include "echoflow/errors.hpp"

namespace echoflow {

std::string variant_name(Variant v) {
    return v == Variant::EchoSolo ? "echo_solo" : "echo_mlp";
}

Variant variant_from_name(const std::string& name) {
    if (name == "echo_solo") return Variant::EchoSolo;
    if (name == "echo_mlp") return Variant::EchoMlp;
    throw ConfigError("unknown model variant: '" + name + "'");
}

void ModelConfig::validate() const {
    if (embed_dim < 1) throw ConfigError("ModelConfig: embed_dim must be >= 1");
    if (k < 1) throw ConfigError("ModelConfig: k must be >= 1");
    if (horizon < 1) throw ConfigError("ModelConfig: horizon must be >= 1");
    if (base_hidden < 1) throw ConfigError("ModelConfig: base_hidden must be >= 1");
    group.validate();
    fusion.validate();
}

ParamRegistry ForecastModel::registry() {
    ParamRegistry reg;
    if (encoder.enabled) {
        reg.push_back({"encoder.w", &encoder.w});
        reg.push_back({"encoder.b", &encoder.b});
    }
    for (std::size_t l = 0; l < group.readouts.size(); ++l) {
        reg.push_back({"readout" + std::to_string(l) + ".W", &group.readouts[l].layer.W});
        reg.push_back({"readout" + std::to_string(l) + ".b", &group.readouts[l].layer.b});
    }
    reg.push_back({"combiner.mem_adapter.W", &combiner.mem_adapter.W});
    reg.push_back({"combiner.mem_adapter.b", &combiner.mem_adapter.b});
    reg.push_back({"combiner.win_adapter.W", &combiner.win_adapter.W});
    reg.push_back({"combiner.win_adapter.b", &combiner.win_adapter.b});
    for (std::size_t l = 0; l < combiner.layers.size(); ++l) {
        const std::string p = "combiner.layer" + std::to_string(l) + ".";
        reg.push_back({p + "Wq", &combiner.layers[l].Wq});
        reg.push_back({p + "Wk", &combiner.layers[l].Wk});
        reg.push_back({p + "Wv", &combiner.layers[l].Wv});
        reg.push_back({p + "Wo", &combiner.layers[l].Wo});
        reg.push_back({p + "bo", &combiner.layers[l].bo});
    }
    if (cfg.variant == Variant::EchoMlp) {
        reg.push_back({"base.l1.W", &base_l1.W});
        reg.push_back({"base.l1.b", &base_l1.b});
        reg.push_back({"base.l2.W", &base_l2.W});
        reg.push_back({"base.l2.b", &base_l2.b});
    }
    reg.push_back({"head.W", &head.W});
    reg.push_back({"head.b", &head.b});
    if (decoder.enabled) {
        reg.push_back({"decoder.W", &decoder.map.W});
        reg.push_back({"decoder.b", &decoder.map.b});
    }
    return reg;
}

ForecastModel make_model(const ModelConfig& cfg, int channels) {
    cfg.validate();
    if (channels < 1) throw ConfigError("make_model: channels must be >= 1");
    ForecastModel m;
    m.cfg = cfg;
    m.channels = channels;

    RngStream root(cfg.seed, 0xF0);
    m.encoder = EmbeddingEncoder(cfg.embed_dim, channels, cfg.embedding_enabled);
    RngStream enc_rng = root.substream(1);
    m.encoder.init(enc_rng);
    m.reservoir_encoder = m.encoder;  // frozen from here on

    const int ew = m.encoder.out_dim();
    RngStream grp_rng = root.substream(2);
    m.group = init_group(cfg.group, ew, grp_rng);

    m.combiner = CrossAttentionStack(cfg.fusion, cfg.group.readout_dim, ew);
    RngStream att_rng = root.substream(3);
    m.combiner.init(att_rng);

    const int L = m.group.size();
    const int d = cfg.fusion.d_model;
    RngStream head_rng = root.substream(4);
    if (cfg.variant == Variant::EchoSolo) {
        m.head = Linear(cfg.horizon * ew, L * d);
    } else {
        m.base_l1 = Linear(cfg.base_hidden, (cfg.k + L) * d);
        m.base_l2 = Linear(cfg.horizon * d, cfg.base_hidden);
        RngStream base_rng = root.substream(6);
        m.base_l1.init(base_rng);
        m.base_l2.init(base_rng);
        m.head = Linear(ew, d);  // shared per-step map
    }
    m.head.init(head_rng);

    m.decoder = RestorationDecoder(cfg.embed_dim, channels, cfg.embedding_enabled);
    RngStream dec_rng = root.substream(5);
    m.decoder.init(dec_rng);
    return m;
}

Mat ForecastModel::forward_window(const Mat& window, const std::vector<Vec>& states,
                                  bool train_mode, RngStream& rng,
                                  ForwardCache* cache) {
    if (window.rows < cfg.k)
        throw DataError("forward_window: window holds " + std::to_string(window.rows) +
                        " rows, need at least k = " + std::to_string(cfg.k));
    if (window.cols != channels)
        throw ShapeError("forward_window: channel mismatch");
    if (static_cast<int>(states.size()) != group.size())
        throw ShapeError("forward_window: need one reservoir state per unit");

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    const int k = cfg.k;
    const int tau = cfg.horizon;
    const int ew = embed_width();
    const int L = group.size();
    const int m_dim = group.readout_dim;
    const int d = cfg.fusion.d_model;
    const int first = window.rows - k;

    c.window_raw = Mat(k, channels);
    c.win_tokens = TokenSeq(k, ew);
    for (int i = 0; i < k; ++i) {
        std::memcpy(c.window_raw.row(i), window.row(first + i),
                    sizeof(double) * channels);
        encoder.embed(c.window_raw.row(i), c.win_tokens.row(i));
    }

    c.states = states;
    c.mem_tokens = TokenSeq(L, m_dim);
    for (int l = 0; l < L; ++l) {
        if (static_cast<int>(states[l].size()) != group.units[l].size())
            throw ShapeError("forward_window: reservoir state size mismatch");
        group.readouts[l].forward(states[l].data(), c.mem_tokens.row(l));
    }

    c.fused = combiner.front_combine(c.mem_tokens, c.win_tokens, train_mode, rng,
                                     &c.att);

    c.dec_in.assign(static_cast<std::size_t>(tau) * ew, 0.0);
    if (cfg.variant == Variant::EchoSolo) {
        c.flat = c.fused.x;
        head.forward(c.flat.data(), c.dec_in.data());
    } else {
        c.base_in.assign(static_cast<std::size_t>(L + k) * d, 0.0);
        std::memcpy(c.base_in.data(), c.fused.x.data(), sizeof(double) * L * d);
        std::memcpy(c.base_in.data() + static_cast<std::size_t>(L) * d,
                    c.att.win_adapted.x.data(), sizeof(double) * k * d);
        c.base_hidden_pre.assign(cfg.base_hidden, 0.0);
        base_l1.forward(c.base_in.data(), c.base_hidden_pre.data());
        c.base_hidden = c.base_hidden_pre;
        for (double& v : c.base_hidden)
            if (v < 0.0) v = 0.0;
        c.base_out.assign(static_cast<std::size_t>(tau) * d, 0.0);
        base_l2.forward(c.base_hidden.data(), c.base_out.data());
        for (int j = 0; j < tau; ++j)
            head.forward(c.base_out.data() + static_cast<std::size_t>(j) * d,
                         c.dec_in.data() + static_cast<std::size_t>(j) * ew);
    }

    c.pred = Mat(tau, channels);
    for (int j = 0; j < tau; ++j)
        decoder.restore(c.dec_in.data() + static_cast<std::size_t>(j) * ew,
                        c.pred.row(j));
    if (!all_finite(c.pred))
        throw NumericError("forward_window: non-finite forecast");
    return c.pred;
}

void ForecastModel::backward_window(const ForwardCache& c, const Mat& g_pred) {
    const int k = cfg.k;
    const int tau = cfg.horizon;
    const int ew = embed_width();
    const int L = group.size();
    const int d = cfg.fusion.d_model;

    Vec g_dec_in(static_cast<std::size_t>(tau) * ew, 0.0);
    for (int j = 0; j < tau; ++j)
        decoder.backward(c.dec_in.data() + static_cast<std::size_t>(j) * ew,
                         g_pred.row(j),
                         g_dec_in.data() + static_cast<std::size_t>(j) * ew);

    TokenSeq g_fused(L, d);
    TokenSeq g_win_adapted_extra;
    const TokenSeq* extra = nullptr;
    if (cfg.variant == Variant::EchoSolo) {
        Vec g_flat(static_cast<std::size_t>(L) * d, 0.0);
        head.backward(c.flat.data(), g_dec_in.data(), g_flat.data());
        g_fused.x = std::move(g_flat);
    } else {
        Vec g_base_out(static_cast<std::size_t>(tau) * d, 0.0);
        for (int j = 0; j < tau; ++j)
            head.backward(c.base_out.data() + static_cast<std::size_t>(j) * d,
                          g_dec_in.data() + static_cast<std::size_t>(j) * ew,
                          g_base_out.data() + static_cast<std::size_t>(j) * d);
        Vec g_hidden(cfg.base_hidden, 0.0);
        base_l2.backward(c.base_hidden.data(), g_base_out.data(), g_hidden.data());
        for (int i = 0; i < cfg.base_hidden; ++i)
            if (c.base_hidden_pre[i] <= 0.0) g_hidden[i] = 0.0;
        Vec g_base_in(static_cast<std::size_t>(L + k) * d, 0.0);
        base_l1.backward(c.base_in.data(), g_hidden.data(), g_base_in.data());
        std::memcpy(g_fused.x.data(), g_base_in.data(), sizeof(double) * L * d);
        g_win_adapted_extra = TokenSeq(k, d);
        std::memcpy(g_win_adapted_extra.x.data(),
                    g_base_in.data() + static_cast<std::size_t>(L) * d,
                    sizeof(double) * k * d);
        extra = &g_win_adapted_extra;
    }

    TokenSeq g_mem, g_win;
    combiner.front_combine_backward(c.att, g_fused, g_mem, g_win, extra);

    for (int l = 0; l < L; ++l)
        group.readouts[l].backward(c.states[l].data(), c.mem_tokens.row(l),
                                   g_mem.row(l));
    for (int i = 0; i < k; ++i) encoder.backward(c.window_raw.row(i), g_win.row(i));
}

void ForecastModel::stream_advance(const Vec& u) {
    if (static_cast<int>(u.size()) != channels)
        throw ShapeError("stream_advance: channel mismatch");
    const Vec h = reservoir_encoder.embed(u);
    group_step(group, h);
}

void ForecastModel::reset_reservoirs() { group_reset(group); }

Mat ForecastModel::forecast(const Mat& history) {
    if (history.rows < cfg.k)
        throw DataError("forecast: history shorter than the look-back window");
    std::vector<Vec> states;
    states.reserve(group.size());
    for (const auto& u : group.units) states.push_back(u.state);
    RngStream rng(cfg.seed, 0xEE);  // unused in eval mode
    return forward_window(history, states, /*train_mode=*/false, rng);
}

Mat persistence_baseline(const Mat& window, int tau) {
    if (window.rows < 1) throw DataError("persistence_baseline: empty window");
    Mat out(tau, window.cols);
    for (int j = 0; j < tau; ++j)
        std::memcpy(out.row(j), window.row(window.rows - 1),
                    sizeof(double) * window.cols);
    return out;
}

}  // namespace echoflow
