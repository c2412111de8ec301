#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "echoflow/checkpoint.hpp"
#include "echoflow/config.hpp"
#include "echoflow/errors.hpp"
#include "echoflow/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace echoflow;

namespace {

json timing_to_json(const TrainReport& r) {
    json per_epoch = json::array();
    for (const auto& e : r.epochs) per_epoch.push_back(e.wall_s);
    return json{{"total_wall_s", r.total_wall_s}, {"per_epoch_wall_s", per_epoch}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

void svg_plot(const fs::path& path, const Mat* truth, const Mat& pred,
              const std::vector<std::string>& names) {
    const int per_h = 160, width = 800, pad = 30;
    const int n_ch = pred.cols;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << per_h * n_ch << "\">\n";
    for (int c = 0; c < n_ch; ++c) {
        double lo = pred(0, c), hi = pred(0, c);
        const int n = truth ? std::max(truth->rows, pred.rows) : pred.rows;
        for (int t = 0; t < pred.rows; ++t) {
            lo = std::min(lo, pred(t, c));
            hi = std::max(hi, pred(t, c));
        }
        if (truth)
            for (int t = 0; t < truth->rows; ++t) {
                lo = std::min(lo, (*truth)(t, c));
                hi = std::max(hi, (*truth)(t, c));
            }
        if (hi - lo < 1e-12) hi = lo + 1.0;
        const double y0 = c * per_h;
        auto px = [&](int t) { return pad + (width - 2.0 * pad) * t / std::max(1, n - 1); };
        auto py = [&](double v) {
            return y0 + per_h - pad - (per_h - 2.0 * pad) * (v - lo) / (hi - lo);
        };
        auto polyline = [&](const Mat& m, const char* color) {
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" points=\"";
            for (int t = 0; t < m.rows; ++t) svg << px(t) << ',' << py(m(t, c)) << ' ';
            svg << "\"/>\n";
        };
        if (truth) polyline(*truth, "black");
        polyline(pred, "red");
        svg << "<text x=\"4\" y=\"" << y0 + 14 << "\" font-size=\"12\">"
            << (c < static_cast<int>(names.size()) ? names[c] : "ch" + std::to_string(c))
            << "</text>\n";
    }
    svg << "</svg>\n";
    write_text(path, svg.str());
}

int cmd_generate(const std::string& type, int steps, double dt,
                 std::vector<double> init, double sigma, double rho, double beta,
                 int channels, std::vector<double> freqs, double noise_std,
                 std::uint64_t seed, const std::string& out) {
    Series s;
    if (type == "lorenz") {
        std::array<double, 3> x0 = {1.0, 1.0, 1.0};
        if (!init.empty()) {
            if (init.size() != 3) throw ConfigError("--init needs exactly 3 values");
            x0 = {init[0], init[1], init[2]};
        }
        s = lorenz_generate(steps, dt, x0, LorenzParams{sigma, rho, beta});
    } else if (type == "sine") {
        if (freqs.empty()) freqs.assign(static_cast<std::size_t>(channels), 1.0);
        RngStream rng(seed, 0xDA);
        s = sine_generate(steps, channels, freqs, noise_std, rng);
    } else {
        throw ConfigError("--type must be 'lorenz' or 'sine'");
    }
    save_csv(s, out);
    std::cout << out << " " << s.length() << "x" << s.channels() << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_override, bool quiet) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed_override);
        cfg.model.seed = cfg.seed;
        cfg.train.seed = cfg.seed;
        // group unit seeds derive from the model seed via substreams
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    fs::create_directories(cfg.out_dir);

    const Series series = cfg.load_dataset();
    const SeriesSplits splits =
        split(series, cfg.train.train_frac, cfg.train.val_frac, cfg.train.test_frac);
    ForecastModel model = make_model(cfg.model, series.channels());
    const TrainReport report = train(model, splits, cfg.train);

    const fs::path dir(cfg.out_dir);
    save_checkpoint(model, series.channel_names, (dir / "checkpoint.json").string());
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(dir / "timing.json", timing_to_json(report).dump(2) + "\n");
    std::ostringstream curve;
    curve << "epoch,train_loss,val_mse,val_mae\n";
    for (std::size_t i = 0; i < report.epochs.size(); ++i)
        curve << i << ',' << report.epochs[i].train_loss << ','
              << report.epochs[i].val_mse << ',' << report.epochs[i].val_mae << '\n';
    write_text(dir / "loss_curve.csv", curve.str());

    if (!quiet) {
        std::cout << "wrote " << (dir / "checkpoint.json").string() << ", report.json, loss_curve.csv\n"
                  << "test_mse=" << report.test_mse << " test_mae=" << report.test_mae
                  << " baseline_mse=" << report.baseline_mse << "\n";
    }
    return 0;
}

// Metrics over every forecast window of the dataset, checkpoint scale.
int cmd_evaluate(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& out_path) {
    std::vector<std::string> names;
    ForecastModel model = load_checkpoint(ckpt_path, &names);
    if (!model.normalizer)
        throw ConfigError("evaluate: checkpoint carries no normalization statistics");
    const Series s = load_csv(data_path);
    if (s.channels() != model.channels)
        throw DataError("evaluate: channel count mismatch: checkpoint expects " +
                        std::to_string(model.channels) + ", dataset has " +
                        std::to_string(s.channels()));
    const Mat norm = model.normalizer->apply(s.values);
    Trajectory traj;
    traj.compute(model, norm);
    const auto origins = window_origins(norm.rows, model.cfg.k, model.cfg.horizon);
    const auto [mse, mae] = evaluate_windows(model, norm, traj, origins);

    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    for (int t : origins)
        for (int j = 0; j < model.cfg.horizon; ++j)
            for (int c = 0; c < norm.cols; ++c) {
                const double e = norm(t, c) - norm(t + 1 + j, c);
                se += e * e;
                ae += std::abs(e);
                ++n;
            }
    const json out{{"mse", mse},
                   {"mae", mae},
                   {"baseline_mse", se / static_cast<double>(n)},
                   {"baseline_mae", ae / static_cast<double>(n)}};
    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) write_text(out_path, text);
    return 0;
}

int cmd_forecast(const std::string& ckpt_path, const std::string& data_path,
                 int horizon, const std::string& out_path,
                 const std::string& svg_path, bool holdout) {
    std::vector<std::string> names;
    ForecastModel model = load_checkpoint(ckpt_path, &names);
    if (!model.normalizer)
        throw ConfigError("forecast: checkpoint carries no normalization statistics");
    const Series s = load_csv(data_path);
    if (s.channels() != model.channels)
        throw DataError("forecast: channel count mismatch: checkpoint expects " +
                        std::to_string(model.channels) + ", dataset has " +
                        std::to_string(s.channels()));
    const int tau = model.cfg.horizon;
    if (horizon <= 0) horizon = tau;
    if (horizon > tau)
        throw ConfigError("forecast: horizon " + std::to_string(horizon) +
                          " exceeds the model's trained horizon " + std::to_string(tau));
    const int cut = holdout ? s.length() - tau : s.length();
    if (cut < model.cfg.k)
        throw DataError("forecast: history shorter than the look-back window");

    const Mat norm = model.normalizer->apply(s.values);
    model.reset_reservoirs();
    Vec u(norm.cols);
    for (int t = 0; t < cut; ++t) {
        for (int c = 0; c < norm.cols; ++c) u[c] = norm(t, c);
        model.stream_advance(u);
    }
    Mat hist(cut, norm.cols);
    for (int t = 0; t < cut; ++t)
        for (int c = 0; c < norm.cols; ++c) hist(t, c) = norm(t, c);
    Mat pred_norm = model.forecast(hist);
    pred_norm.rows = horizon;
    pred_norm.a.resize(static_cast<std::size_t>(horizon) * pred_norm.cols);
    const Mat pred = model.normalizer->invert(pred_norm);

    Series out;
    out.channel_names = s.channel_names;
    out.values = pred;
    save_csv(out, out_path);
    std::cout << out_path << " " << pred.rows << "x" << pred.cols << "\n";

    if (!svg_path.empty()) {
        if (holdout) {
            Mat truth(horizon, s.channels());
            for (int j = 0; j < horizon; ++j)
                for (int c = 0; c < s.channels(); ++c)
                    truth(j, c) = s.values(cut + j, c);
            svg_plot(svg_path, &truth, pred, s.channel_names);
        } else {
            svg_plot(svg_path, nullptr, pred, s.channel_names);
        }
    }
    return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
    std::vector<std::string> names;
    ForecastModel model = load_checkpoint(ckpt_path, &names);
    std::cout << "variant: " << variant_name(model.cfg.variant)
              << "  channels: " << model.channels << "  E: " << model.cfg.embed_dim
              << "  k: " << model.cfg.k << "  horizon: " << model.cfg.horizon
              << "\n";
    std::cout << "unit  size  rho_cfg  rho_measured  density  sigma1      sigma2\n";
    for (std::size_t l = 0; l < model.group.units.size(); ++l) {
        const XEsnUnit& u = model.group.units[l];
        const double measured = spectral_radius(u.w).value;
        std::printf("%4zu  %4d  %7.3f  %12.6f  %7.3f  %-10s  %-10s\n", l + 1,
                    u.config.size, u.config.spectral_radius, measured,
                    u.config.density, activation_name(u.config.sigma1).c_str(),
                    activation_name(u.config.sigma2).c_str());
    }
    std::cout << "trainable parameters: " << total_params(model.registry()) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    if (const char* env = std::getenv("ECHOFLOW_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) omp_set_num_threads(v);
    }
#endif
    CLI::App app{"Echo-state forecasting engine"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset CSV");
    std::string gen_type = "lorenz", gen_out = "series.csv";
    int gen_steps = 2000, gen_channels = 1;
    double gen_dt = 0.01, gen_sigma = 10.0, gen_rho = 28.0, gen_beta = 8.0 / 3.0,
           gen_noise = 0.0;
    std::vector<double> gen_init, gen_freqs;
    std::uint64_t gen_seed = 0;
    gen->add_option("--type", gen_type, "lorenz|sine");
    gen->add_option("--steps", gen_steps);
    gen->add_option("--dt", gen_dt);
    gen->add_option("--init", gen_init, "initial state x,y,z")->expected(3);
    gen->add_option("--sigma", gen_sigma);
    gen->add_option("--rho", gen_rho);
    gen->add_option("--beta", gen_beta);
    gen->add_option("--channels", gen_channels);
    gen->add_option("--freqs", gen_freqs);
    gen->add_option("--noise-std", gen_noise);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "Train a model from a config file");
    std::string tr_config, tr_out;
    std::int64_t tr_seed = -1;
    bool tr_quiet = false;
    tr->add_option("--config", tr_config)->required();
    tr->add_option("--seed", tr_seed, "override the config seed");
    tr->add_option("--out", tr_out, "override the output directory");
    tr->add_flag("--quiet", tr_quiet);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_data, ev_out;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--out", ev_out, "also write metrics JSON here");

    // forecast
    auto* fc = app.add_subcommand("forecast", "Forecast beyond the end of a dataset");
    std::string fc_ckpt, fc_data, fc_out = "forecast.csv", fc_svg;
    int fc_horizon = 0;
    bool fc_holdout = false;
    fc->add_option("--checkpoint", fc_ckpt)->required();
    fc->add_option("--data", fc_data)->required();
    fc->add_option("--horizon", fc_horizon, "defaults to the trained horizon");
    fc->add_option("--out", fc_out);
    fc->add_option("--svg", fc_svg, "write an SVG line plot");
    fc->add_flag("--holdout", fc_holdout,
                 "hold out the last horizon rows as ground truth for the plot");

    // inspect
    auto* in = app.add_subcommand("inspect", "Summarize a checkpoint");
    std::string in_ckpt;
    in->add_option("--checkpoint", in_ckpt)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_type, gen_steps, gen_dt, gen_init, gen_sigma,
                                gen_rho, gen_beta, gen_channels, gen_freqs,
                                gen_noise, gen_seed, gen_out);
        if (tr->parsed()) return cmd_train(tr_config, tr_seed, tr_out, tr_quiet);
        if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_data, ev_out);
        if (fc->parsed())
            return cmd_forecast(fc_ckpt, fc_data, fc_horizon, fc_out, fc_svg,
                                fc_holdout);
        if (in->parsed()) return cmd_inspect(in_ckpt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
