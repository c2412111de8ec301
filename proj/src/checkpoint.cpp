#include "echoflow/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "echoflow/errors.hpp"

namespace echoflow {

using nlohmann::json;

json report_to_json(const TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs)
        epochs.push_back(json{{"train_loss", e.train_loss},
                              {"val_mse", e.val_mse},
                              {"val_mae", e.val_mae}});
    return json{{"epochs", epochs},
                {"best_epoch", r.best_epoch},
                {"test_mse", r.test_mse},
                {"test_mae", r.test_mae},
                {"baseline_mse", r.baseline_mse},
                {"baseline_mae", r.baseline_mae},
                {"trainable_params", r.trainable_params}};
}

using nlohmann::json;

namespace {

json mat_to_json(const Mat& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

Mat mat_from_json(const json& j) {
    Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
    m.a = j.at("data").get<std::vector<double>>();
    if (m.a.size() != static_cast<std::size_t>(m.rows) * m.cols)
        throw DataError("checkpoint: tensor data length does not match its shape");
    return m;
}

json xesn_config_to_json(const XEsnConfig& c) {
    return json{{"size", c.size},
                {"spectral_radius", c.spectral_radius},
                {"density", c.density},
                {"input_scale", c.input_scale},
                {"sigma1", activation_name(c.sigma1)},
                {"sigma2", activation_name(c.sigma2)},
                {"gate_mode", c.gate_mode == GateMode::ScalarLeak ? "scalar_leak" : "diagonal_gates"},
                {"leak", c.leak},
                {"clip_enabled", c.clip_enabled},
                {"norm_enabled", c.norm_enabled},
                {"norm_eps", c.norm_eps},
                {"seed", c.seed}};
}

XEsnConfig xesn_config_from_json(const json& j) {
    XEsnConfig c;
    c.size = j.at("size").get<int>();
    c.spectral_radius = j.at("spectral_radius").get<double>();
    c.density = j.at("density").get<double>();
    c.input_scale = j.at("input_scale").get<double>();
    c.sigma1 = activation_from_name(j.at("sigma1").get<std::string>());
    c.sigma2 = activation_from_name(j.at("sigma2").get<std::string>());
    c.gate_mode = j.at("gate_mode").get<std::string>() == "scalar_leak"
                      ? GateMode::ScalarLeak
                      : GateMode::DiagonalGates;
    c.leak = j.at("leak").get<double>();
    c.clip_enabled = j.at("clip_enabled").get<bool>();
    c.norm_enabled = j.at("norm_enabled").get<bool>();
    c.norm_eps = j.at("norm_eps").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json model_config_to_json(const ModelConfig& c) {
    json units = json::array();
    for (const auto& u : c.group.units) units.push_back(xesn_config_to_json(u));
    return json{{"variant", variant_name(c.variant)},
                {"embed_dim", c.embed_dim},
                {"embedding_enabled", c.embedding_enabled},
                {"k", c.k},
                {"horizon", c.horizon},
                {"base_hidden", c.base_hidden},
                {"seed", c.seed},
                {"group", json{{"readout_dim", c.group.readout_dim}, {"units", units}}},
                {"fusion", json{{"d_model", c.fusion.d_model},
                                {"heads", c.fusion.heads},
                                {"layers", c.fusion.layers},
                                {"dropout", c.fusion.dropout},
                                {"ln_eps", c.fusion.ln_eps}}}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.embed_dim = j.at("embed_dim").get<int>();
    c.embedding_enabled = j.at("embedding_enabled").get<bool>();
    c.k = j.at("k").get<int>();
    c.horizon = j.at("horizon").get<int>();
    c.base_hidden = j.at("base_hidden").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.group.readout_dim = j.at("group").at("readout_dim").get<int>();
    for (const auto& u : j.at("group").at("units"))
        c.group.units.push_back(xesn_config_from_json(u));
    const json& f = j.at("fusion");
    c.fusion.d_model = f.at("d_model").get<int>();
    c.fusion.heads = f.at("heads").get<int>();
    c.fusion.layers = f.at("layers").get<int>();
    c.fusion.dropout = f.at("dropout").get<double>();
    c.fusion.ln_eps = f.at("ln_eps").get<double>();
    return c;
}

json ptensor_to_json(const PTensor& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.w}};
}

void ptensor_from_json(const json& j, PTensor& t) {
    if (j.at("rows").get<int>() != t.rows || j.at("cols").get<int>() != t.cols)
        throw DataError("checkpoint: tensor shape mismatch");
    t.w = j.at("data").get<std::vector<double>>();
    if (t.w.size() != static_cast<std::size_t>(t.rows) * t.cols)
        throw DataError("checkpoint: tensor data length does not match its shape");
}

}  // namespace

json model_to_json(ForecastModel& model, const std::vector<std::string>& channel_names) {
    json tensors;
    for (const auto& p : model.registry()) tensors[p.name] = ptensor_to_json(*p.t);

    json units = json::array();
    for (const auto& u : model.group.units) {
        units.push_back(json{{"config", xesn_config_to_json(u.config)},
                             {"w_in", mat_to_json(u.w_in)},
                             {"w", mat_to_json(u.w)},
                             {"bias", u.bias},
                             {"gate_state", u.gate_state},
                             {"gate_input", u.gate_input},
                             {"measured_radius", u.measured_radius}});
    }

    json j{{"format", "echoflow-checkpoint"},
           {"version", kCheckpointVersion},
           {"config", model_config_to_json(model.cfg)},
           {"channels", model.channels},
           {"channel_names", channel_names},
           {"tensors", tensors},
           {"reservoir_encoder",
            json{{"w", ptensor_to_json(model.reservoir_encoder.w)},
                 {"b", ptensor_to_json(model.reservoir_encoder.b)}}},
           {"units", units}};
    if (model.normalizer) {
        j["normalizer"] = json{{"mean", model.normalizer->mean},
                               {"std", model.normalizer->stddev}};
    } else {
        j["normalizer"] = nullptr;
    }
    return j;
}

ForecastModel model_from_json(const json& j, std::vector<std::string>* channel_names) {
    if (!j.is_object() || j.value("format", "") != "echoflow-checkpoint")
        throw DataError("checkpoint: not an echoflow checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " +
                        j.at("version").dump());

    const ModelConfig cfg = model_config_from_json(j.at("config"));
    ForecastModel model = make_model(cfg, j.at("channels").get<int>());

    for (const auto& p : model.registry()) {
        if (!j.at("tensors").contains(p.name))
            throw DataError("checkpoint: missing tensor '" + p.name + "'");
        ptensor_from_json(j.at("tensors").at(p.name), *p.t);
    }
    ptensor_from_json(j.at("reservoir_encoder").at("w"), model.reservoir_encoder.w);
    ptensor_from_json(j.at("reservoir_encoder").at("b"), model.reservoir_encoder.b);

    const json& units = j.at("units");
    if (units.size() != model.group.units.size())
        throw DataError("checkpoint: unit count mismatch");
    for (std::size_t l = 0; l < units.size(); ++l) {
        XEsnUnit& u = model.group.units[l];
        u.w_in = mat_from_json(units[l].at("w_in"));
        u.w = mat_from_json(units[l].at("w"));
        u.bias = units[l].at("bias").get<Vec>();
        u.gate_state = units[l].at("gate_state").get<Vec>();
        u.gate_input = units[l].at("gate_input").get<Vec>();
        u.measured_radius = units[l].at("measured_radius").get<double>();
        u.state.assign(u.config.size, 0.0);
    }

    if (!j.at("normalizer").is_null()) {
        Normalizer n;
        n.mean = j.at("normalizer").at("mean").get<Vec>();
        n.stddev = j.at("normalizer").at("std").get<Vec>();
        model.normalizer = n;
    }
    if (channel_names)
        *channel_names = j.at("channel_names").get<std::vector<std::string>>();
    return model;
}

void save_checkpoint(ForecastModel& model,
                     const std::vector<std::string>& channel_names,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_checkpoint: cannot write '" + path + "'");
    out << model_to_json(model, channel_names).dump();
    if (!out) throw DataError("save_checkpoint: write failed for '" + path + "'");
}

ForecastModel load_checkpoint(const std::string& path,
                              std::vector<std::string>* channel_names) {
    std::ifstream in(path);
    if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(std::string("load_checkpoint: corrupt checkpoint: ") + e.what());
    }
    try {
        return model_from_json(j, channel_names);
    } catch (const json::exception& e) {
        throw DataError(std::string("load_checkpoint: malformed checkpoint: ") + e.what());
    }
}

}  // namespace echoflow
