#include "echoflow/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "echoflow/errors.hpp"

namespace echoflow {

using nlohmann::json;

namespace {

struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& msg) { errors.push_back(msg); }

    void check_keys(const json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!allowed.count(it.key()))
                fail(where + ": unknown key '" + it.key() + "'");
    }

    template <typename T>
    bool get(const json& j, const std::string& where, const std::string& key,
             T& out) {
        if (!j.contains(key)) return false;
        try {
            out = j.at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            fail(where + "." + key + ": wrong type");
            return false;
        }
    }

    void finish() const {
        if (errors.empty()) return;
        std::string msg = "config validation failed:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
};

const std::set<std::string> kActivationSet = {"tanh", "sigmoid", "relu", "leaky_relu"};

void parse_group(Validator& v, const json& jg, ExperimentConfig& cfg) {
    v.check_keys(jg, "model.group",
                 {"preset", "L", "readout_dim", "sparsity_means_zero_fraction",
                  "random_pairs", "trainable_gates"});
    std::string preset = "default";
    v.get(jg, "model.group", "preset", preset);
    GroupConfig g;
    if (preset == "default") {
        g = default_group(cfg.seed);
    } else if (preset == "default_half") {
        g = default_group_halved(cfg.seed);
    } else {
        v.fail("model.group.preset: must be 'default' or 'default_half'");
        return;
    }
    int L = g.size();
    if (v.get(jg, "model.group", "L", L)) {
        if (L < 1 || L > g.size()) {
            v.fail("model.group.L: must be in [1, " + std::to_string(g.size()) + "]");
            return;
        }
        g.units.resize(L);
    }
    v.get(jg, "model.group", "readout_dim", g.readout_dim);

    bool zero_fraction = false;
    if (v.get(jg, "model.group", "sparsity_means_zero_fraction", zero_fraction) &&
        zero_fraction) {
        // Opposite reading of the sparsity column: values are zero fractions.
        for (auto& u : g.units) u.density = 1.0 - u.density;
    }
    bool random_pairs = false;
    if (v.get(jg, "model.group", "random_pairs", random_pairs) && random_pairs) {
        static const Activation pool[4] = {Activation::Tanh, Activation::Sigmoid,
                                           Activation::Relu, Activation::LeakyRelu};
        RngStream root(cfg.seed, 0xAC);
        for (std::size_t i = 0; i < g.units.size(); ++i) {
            RngStream r = root.substream(i);
            g.units[i].sigma1 = pool[r.below(4)];
            g.units[i].sigma2 = pool[r.below(4)];
        }
    }
    bool trainable_gates = false;
    if (v.get(jg, "model.group", "trainable_gates", trainable_gates) && trainable_gates)
        v.fail("model.group.trainable_gates: true is not supported in this build "
               "(gates are frozen to keep per-step training cost constant)");
    cfg.model.group = std::move(g);
}

void parse_model(Validator& v, const json& jm, ExperimentConfig& cfg) {
    v.check_keys(jm, "model",
                 {"variant", "embed_dim", "embedding_enabled", "k", "horizon",
                  "d_model", "heads", "layers", "dropout", "base_hidden", "group"});
    std::string variant = "echo_solo";
    if (v.get(jm, "model", "variant", variant)) {
        if (variant != "echo_solo" && variant != "echo_mlp")
            v.fail("model.variant: must be 'echo_solo' or 'echo_mlp'");
        else
            cfg.model.variant = variant_from_name(variant);
    }
    v.get(jm, "model", "embed_dim", cfg.model.embed_dim);
    v.get(jm, "model", "embedding_enabled", cfg.model.embedding_enabled);
    v.get(jm, "model", "k", cfg.model.k);
    v.get(jm, "model", "horizon", cfg.model.horizon);
    v.get(jm, "model", "d_model", cfg.model.fusion.d_model);
    v.get(jm, "model", "heads", cfg.model.fusion.heads);
    v.get(jm, "model", "layers", cfg.model.fusion.layers);
    v.get(jm, "model", "dropout", cfg.model.fusion.dropout);
    v.get(jm, "model", "base_hidden", cfg.model.base_hidden);
    if (cfg.model.embed_dim < 1) v.fail("model.embed_dim: must be >= 1");
    if (cfg.model.k < 1) v.fail("model.k: must be >= 1");
    if (cfg.model.horizon < 1) v.fail("model.horizon: must be >= 1");
    if (cfg.model.base_hidden < 1) v.fail("model.base_hidden: must be >= 1");
    if (jm.contains("group")) {
        if (!jm.at("group").is_object())
            v.fail("model.group: must be an object");
        else
            parse_group(v, jm.at("group"), cfg);
    } else {
        cfg.model.group = default_group(cfg.seed);
    }
}

void parse_generator(Validator& v, const json& jg, ExperimentConfig& cfg) {
    v.check_keys(jg, "dataset.generator",
                 {"type", "steps", "dt", "init", "sigma", "rho", "beta",
                  "channels", "freqs", "noise_std"});
    if (!v.get(jg, "dataset.generator", "type", cfg.generator_type) ||
        (cfg.generator_type != "lorenz" && cfg.generator_type != "sine")) {
        v.fail("dataset.generator.type: must be 'lorenz' or 'sine'");
        return;
    }
    v.get(jg, "dataset.generator", "steps", cfg.gen_steps);
    if (cfg.gen_steps < 1) v.fail("dataset.generator.steps: must be >= 1");
    if (cfg.generator_type == "lorenz") {
        v.get(jg, "dataset.generator", "dt", cfg.gen_dt);
        std::vector<double> init;
        if (v.get(jg, "dataset.generator", "init", init)) {
            if (init.size() != 3)
                v.fail("dataset.generator.init: needs exactly 3 values");
            else
                cfg.gen_init = {init[0], init[1], init[2]};
        }
        v.get(jg, "dataset.generator", "sigma", cfg.lorenz_params.sigma);
        v.get(jg, "dataset.generator", "rho", cfg.lorenz_params.rho);
        v.get(jg, "dataset.generator", "beta", cfg.lorenz_params.beta);
    } else {
        v.get(jg, "dataset.generator", "channels", cfg.gen_channels);
        v.get(jg, "dataset.generator", "freqs", cfg.gen_freqs);
        v.get(jg, "dataset.generator", "noise_std", cfg.gen_noise_std);
        if (cfg.gen_freqs.empty())
            cfg.gen_freqs.assign(static_cast<std::size_t>(cfg.gen_channels), 1.0);
        if (static_cast<int>(cfg.gen_freqs.size()) != cfg.gen_channels)
            v.fail("dataset.generator.freqs: need one frequency per channel");
    }
}

void parse_train(Validator& v, const json& jt, ExperimentConfig& cfg) {
    v.check_keys(jt, "train",
                 {"epochs", "learning_rate", "huber_delta", "batch_size", "split",
                  "cache_trajectories"});
    v.get(jt, "train", "epochs", cfg.train.epochs);
    v.get(jt, "train", "learning_rate", cfg.train.learning_rate);
    v.get(jt, "train", "huber_delta", cfg.train.huber_delta);
    v.get(jt, "train", "batch_size", cfg.train.batch_size);
    v.get(jt, "train", "cache_trajectories", cfg.train.cache_trajectories);
    std::vector<double> split;
    if (v.get(jt, "train", "split", split)) {
        if (split.size() != 3) {
            v.fail("train.split: needs exactly 3 fractions");
        } else {
            cfg.train.train_frac = split[0];
            cfg.train.val_frac = split[1];
            cfg.train.test_frac = split[2];
        }
    }
    if (cfg.train.epochs < 1) v.fail("train.epochs: must be >= 1");
    if (!(cfg.train.learning_rate >= 0.0))
        v.fail("train.learning_rate: must be >= 0");
    if (cfg.train.batch_size < 1) v.fail("train.batch_size: must be >= 1");
    if (!(cfg.train.huber_delta > 0.0)) v.fail("train.huber_delta: must be positive");
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
    Validator v;
    if (!j.is_object()) {
        v.fail("top level: must be a JSON object");
        v.finish();
    }
    v.check_keys(j, "top level", {"dataset", "model", "train", "out_dir", "seed"});

    ExperimentConfig cfg;
    v.get(j, "top level", "seed", cfg.seed);
    cfg.model.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    v.get(j, "top level", "out_dir", cfg.out_dir);

    if (!j.contains("dataset")) {
        v.fail("dataset: required");
    } else if (!j.at("dataset").is_object()) {
        v.fail("dataset: must be an object");
    } else {
        const json& jd = j.at("dataset");
        v.check_keys(jd, "dataset", {"path", "generator", "channels", "forward_fill"});
        v.get(jd, "dataset", "path", cfg.dataset_path);
        v.get(jd, "dataset", "forward_fill", cfg.forward_fill);
        v.get(jd, "dataset", "channels", cfg.channels);
        if (jd.contains("generator")) {
            if (!jd.at("generator").is_object())
                v.fail("dataset.generator: must be an object");
            else
                parse_generator(v, jd.at("generator"), cfg);
        }
        if (cfg.dataset_path.empty() && cfg.generator_type.empty())
            v.fail("dataset: needs either 'path' or 'generator'");
        if (!cfg.dataset_path.empty() && !cfg.generator_type.empty())
            v.fail("dataset: 'path' and 'generator' are mutually exclusive");
    }

    if (j.contains("model")) {
        if (!j.at("model").is_object())
            v.fail("model: must be an object");
        else
            parse_model(v, j.at("model"), cfg);
    } else {
        cfg.model.group = default_group(cfg.seed);
    }
    if (j.contains("train")) {
        if (!j.at("train").is_object())
            v.fail("train: must be an object");
        else
            parse_train(v, j.at("train"), cfg);
    }

    // Structural validation of the assembled configs, folded into the report.
    if (v.errors.empty()) {
        try {
            cfg.model.validate();
            cfg.train.validate();
        } catch (const ConfigError& e) {
            v.fail(e.what());
        }
    }
    v.finish();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_experiment_config(j);
}

Series ExperimentConfig::load_dataset() const {
    Series s;
    if (!dataset_path.empty()) {
        CsvOptions opt;
        opt.forward_fill = forward_fill;
        s = load_csv(dataset_path, opt);
    } else if (generator_type == "lorenz") {
        s = lorenz_generate(gen_steps, gen_dt, gen_init, lorenz_params);
    } else if (generator_type == "sine") {
        RngStream rng(seed, 0xDA);
        s = sine_generate(gen_steps, gen_channels, gen_freqs, gen_noise_std, rng);
    } else {
        throw ConfigError("load_dataset: no dataset source configured");
    }
    if (!channels.empty()) s = s.select_channels(channels);
    return s;
}

}  // namespace echoflow
