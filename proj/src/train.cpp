#include "echoflow/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "echoflow/errors.hpp"

namespace echoflow {

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    if (!(learning_rate >= 0.0)) throw ConfigError("TrainConfig: learning_rate must be >= 0");
    if (!(huber_delta > 0.0)) throw ConfigError("TrainConfig: huber_delta must be positive");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("TrainConfig: split fractions must sum to 1");
}

double huber(const Vec& target, const Vec& pred, double delta) {
    if (target.size() != pred.size())
        throw ShapeError("huber: length mismatch");
    if (!(delta > 0.0)) throw ConfigError("huber: delta must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double e = std::abs(target[i] - pred[i]);
        acc += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
    }
    return acc / static_cast<double>(target.size());
}

double huber(const Mat& target, const Mat& pred, double delta) {
    if (target.rows != pred.rows || target.cols != pred.cols)
        throw ShapeError("huber: shape mismatch");
    Vec t = target.a, p = pred.a;
    return huber(t, p, delta);
}

void huber_grad(const Mat& target, const Mat& pred, double delta, Mat& g) {
    g = Mat(pred.rows, pred.cols);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.a.size(); ++i) {
        const double e = pred.a[i] - target.a[i];
        g.a[i] = inv_n * std::clamp(e, -delta, delta);
    }
}

std::vector<int> window_origins(int T, int k, int tau) {
    if (T < k + tau) throw DataError("window_origins: series shorter than k + tau");
    std::vector<int> out;
    for (int t = k - 1; t <= T - 1 - tau; ++t) out.push_back(t);
    return out;
}

std::vector<WindowPair> build_windows(const Mat& series, int k, int tau) {
    const auto origins = window_origins(series.rows, k, tau);
    std::vector<WindowPair> out;
    out.reserve(origins.size());
    for (int t : origins) {
        WindowPair p;
        p.window = Mat(k, series.cols);
        for (int i = 0; i < k; ++i)
            std::memcpy(p.window.row(i), series.row(t - k + 1 + i),
                        sizeof(double) * series.cols);
        p.target = Mat(tau, series.cols);
        for (int j = 0; j < tau; ++j)
            std::memcpy(p.target.row(j), series.row(t + 1 + j),
                        sizeof(double) * series.cols);
        out.push_back(std::move(p));
    }
    return out;
}

void Trajectory::compute(ForecastModel& model, const Mat& norm_values) {
    const int T = norm_values.rows;
    const int L = model.group.size();
    states.assign(L, Mat());
    for (int l = 0; l < L; ++l) states[l] = Mat(T, model.group.units[l].size());
    model.reset_reservoirs();
    Vec u(norm_values.cols);
    for (int t = 0; t < T; ++t) {
        std::memcpy(u.data(), norm_values.row(t), sizeof(double) * norm_values.cols);
        model.stream_advance(u);
        for (int l = 0; l < L; ++l)
            std::memcpy(states[l].row(t), model.group.units[l].state.data(),
                        sizeof(double) * model.group.units[l].size());
    }
}

std::vector<Vec> Trajectory::states_at(int t) const {
    std::vector<Vec> out;
    out.reserve(states.size());
    for (const auto& m : states) {
        Vec v(m.cols);
        std::memcpy(v.data(), m.row(t), sizeof(double) * m.cols);
        out.push_back(std::move(v));
    }
    return out;
}

namespace {

Mat concat_normalized(const SeriesSplits& data, const Normalizer& norm) {
    const int n_cols = data.train.channels();
    const int T = data.train.length() + data.val.length() + data.test.length();
    Mat full(T, n_cols);
    int r = 0;
    for (const Series* s : {&data.train, &data.val, &data.test}) {
        const Mat m = norm.apply(s->values);
        for (int i = 0; i < m.rows; ++i, ++r)
            std::memcpy(full.row(r), m.row(i), sizeof(double) * n_cols);
    }
    return full;
}

Mat target_at(const Mat& series, int t, int tau) {
    Mat out(tau, series.cols);
    for (int j = 0; j < tau; ++j)
        std::memcpy(out.row(j), series.row(t + 1 + j), sizeof(double) * series.cols);
    return out;
}

Mat window_at(const Mat& series, int t, int k) {
    Mat out(k, series.cols);
    for (int i = 0; i < k; ++i)
        std::memcpy(out.row(i), series.row(t - k + 1 + i), sizeof(double) * series.cols);
    return out;
}

std::vector<Vec> recompute_states(ForecastModel& model, const Mat& norm_values, int t) {
    model.reset_reservoirs();
    Vec u(norm_values.cols);
    for (int s = 0; s <= t; ++s) {
        std::memcpy(u.data(), norm_values.row(s), sizeof(double) * norm_values.cols);
        model.stream_advance(u);
    }
    std::vector<Vec> out;
    out.reserve(model.group.size());
    for (const auto& unit : model.group.units) out.push_back(unit.state);
    return out;
}

// Origins whose targets lie fully inside [region_begin, region_end).
std::vector<int> region_origins(int T, int k, int tau, int region_begin,
                                int region_end) {
    std::vector<int> out;
    const int lo = std::max(k - 1, region_begin - 1);
    const int hi = std::min(T - 1 - tau, region_end - 1 - tau);
    for (int t = lo; t <= hi; ++t) out.push_back(t);
    return out;
}

std::vector<std::vector<double>> snapshot_params(const ParamRegistry& reg) {
    std::vector<std::vector<double>> out;
    out.reserve(reg.size());
    for (const auto& p : reg) out.push_back(p.t->w);
    return out;
}

void restore_params(const ParamRegistry& reg, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < reg.size(); ++i) reg[i].t->w = snap[i];
}

}  // namespace

std::pair<double, double> evaluate_windows(ForecastModel& model,
                                           const Mat& norm_values,
                                           const Trajectory& traj,
                                           const std::vector<int>& origins) {
    if (origins.empty()) throw DataError("evaluate_windows: no windows in split");
    RngStream rng(0, 0);  // unused in eval mode
    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    for (int t : origins) {
        const Mat win = window_at(norm_values, t, model.cfg.k);
        const Mat tgt = target_at(norm_values, t, model.cfg.horizon);
        const Mat pred = model.forward_window(win, traj.states_at(t), false, rng);
        for (std::size_t i = 0; i < pred.a.size(); ++i) {
            const double e = pred.a[i] - tgt.a[i];
            se += e * e;
            ae += std::abs(e);
            ++n;
        }
    }
    return {se / static_cast<double>(n), ae / static_cast<double>(n)};
}

TrainReport train(ForecastModel& model, const SeriesSplits& data,
                  const TrainConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const Normalizer norm = zscore_fit(data.train);
    model.normalizer = norm;
    const Mat full = concat_normalized(data, norm);
    const int T = full.rows;
    const int n_train = data.train.length();
    const int n_val = data.val.length();
    const int k = model.cfg.k;
    const int tau = model.cfg.horizon;

    if (n_train < k + tau)
        throw ConfigError("train: train split shorter than k + tau");

    const std::vector<int> train_origins = region_origins(T, k, tau, 0, n_train);
    const std::vector<int> val_origins = region_origins(T, k, tau, n_train, n_train + n_val);
    const std::vector<int> test_origins = region_origins(T, k, tau, n_train + n_val, T);
    if (train_origins.empty() || val_origins.empty() || test_origins.empty())
        throw ConfigError("train: a split has no usable forecast windows");

    Trajectory traj;
    if (cfg.cache_trajectories) traj.compute(model, full);

    ParamRegistry reg = model.registry();
    AdamOptimizer opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    opt.attach(reg);

    TrainReport report;
    report.trainable_params = total_params(reg);

    RngStream shuffle_root(cfg.seed, 0xA1);
    RngStream dropout_root(cfg.seed, 0xA2);

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_snapshot = snapshot_params(reg);
    int best_epoch = -1;

    std::vector<int> order = train_origins;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        RngStream shuf = shuffle_root.substream(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuf.below(i)]);

        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), off + cfg.batch_size);
            // temporal order inside the shuffled mini-batch
            std::vector<int> batch(order.begin() + off, order.begin() + end);
            std::sort(batch.begin(), batch.end());
            const double inv_bn = 1.0 / static_cast<double>(batch.size());

            zero_grads(reg);
            for (int t : batch) {
                const Mat win = window_at(full, t, k);
                const Mat tgt = target_at(full, t, tau);
                const std::vector<Vec> states =
                    cfg.cache_trajectories ? traj.states_at(t)
                                           : recompute_states(model, full, t);
                RngStream drop = dropout_root.substream(
                    (static_cast<std::uint64_t>(epoch) << 32) ^
                    static_cast<std::uint64_t>(t));
                ForecastModel::ForwardCache cache;
                const Mat pred = model.forward_window(win, states, true, drop, &cache);
                const double loss = huber(tgt, pred, cfg.huber_delta);
                if (!std::isfinite(loss))
                    throw NumericError("train: non-finite loss in batch " +
                                       std::to_string(batch_index));
                report.step_losses.push_back(loss);
                epoch_loss += loss;
                Mat g;
                huber_grad(tgt, pred, cfg.huber_delta, g);
                for (double& v : g.a) v *= inv_bn;
                model.backward_window(cache, g);
            }
            opt.step(reg);
        }

        EpochStats es;
        es.train_loss = epoch_loss / static_cast<double>(order.size());
        if (cfg.cache_trajectories) {
            std::tie(es.val_mse, es.val_mae) = evaluate_windows(model, full, traj, val_origins);
        } else {
            Trajectory tmp;
            tmp.compute(model, full);
            std::tie(es.val_mse, es.val_mae) = evaluate_windows(model, full, tmp, val_origins);
        }
        es.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  t_epoch).count();
        report.epochs.push_back(es);

        if (es.val_mse < best_val) {
            best_val = es.val_mse;
            best_snapshot = snapshot_params(reg);
            best_epoch = epoch;
        }
    }

    if (best_epoch >= 0) restore_params(reg, best_snapshot);
    report.best_epoch = best_epoch;

    Trajectory final_traj;
    if (cfg.cache_trajectories)
        final_traj = std::move(traj);
    else
        final_traj.compute(model, full);
    std::tie(report.test_mse, report.test_mae) =
        evaluate_windows(model, full, final_traj, test_origins);

    // Persistence yardstick on the same windows.
    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    for (int t : test_origins) {
        const Mat win = window_at(full, t, k);
        const Mat tgt = target_at(full, t, tau);
        const Mat base = persistence_baseline(win, tau);
        for (std::size_t i = 0; i < base.a.size(); ++i) {
            const double e = base.a[i] - tgt.a[i];
            se += e * e;
            ae += std::abs(e);
            ++n;
        }
    }
    report.baseline_mse = se / static_cast<double>(n);
    report.baseline_mae = ae / static_cast<double>(n);

    report.total_wall_s = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t_start).count();
    return report;
}

std::pair<double, double> evaluate(ForecastModel& model, const SeriesSplits& data) {
    if (!model.normalizer)
        throw ConfigError("evaluate: model has no normalization statistics (untrained?)");
    if (data.test.length() < 1) throw DataError("evaluate: empty test split");
    const Mat full = concat_normalized(data, *model.normalizer);
    const int T = full.rows;
    const int n_head = data.train.length() + data.val.length();
    Trajectory traj;
    traj.compute(model, full);
    const auto origins =
        region_origins(T, model.cfg.k, model.cfg.horizon, n_head, T);
    return evaluate_windows(model, full, traj, origins);
}

GradCheckReport grad_check(ForecastModel& model, const Mat& window,
                           const Mat& target, const std::vector<Vec>& states,
                           double fd_step, int max_entries_per_tensor) {
    ParamRegistry reg = model.registry();
    RngStream rng(0, 0);
    const double delta = 1.0;

    auto loss_fn = [&]() {
        const Mat pred = model.forward_window(window, states, false, rng);
        return huber(target, pred, delta);
    };

    zero_grads(reg);
    ForecastModel::ForwardCache cache;
    const Mat pred = model.forward_window(window, states, false, rng, &cache);
    Mat g;
    huber_grad(target, pred, delta, g);
    model.backward_window(cache, g);

    GradCheckReport report;
    for (const auto& p : reg) {
        GradCheckEntry entry;
        entry.param = p.name;
        const std::size_t n = p.t->size();
        const std::size_t limit =
            max_entries_per_tensor > 0
                ? std::min<std::size_t>(n, max_entries_per_tensor)
                : n;
        for (std::size_t i = 0; i < limit; ++i) {
            const double saved = p.t->w[i];
            p.t->w[i] = saved + fd_step;
            const double lp = loss_fn();
            p.t->w[i] = saved - fd_step;
            const double lm = loss_fn();
            p.t->w[i] = saved;
            const double fd = (lp - lm) / (2.0 * fd_step);
            const double an = p.t->g[i];
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-4});
            entry.max_rel_err = std::max(entry.max_rel_err, std::abs(an - fd) / denom);
        }
        report.entries.push_back(entry);
        if (entry.max_rel_err > report.max_rel_err) {
            report.max_rel_err = entry.max_rel_err;
            report.worst_param = entry.param;
        }
    }
    return report;
}

}  // namespace echoflow
