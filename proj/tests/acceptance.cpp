// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any required criterion fails.

#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echoflow/checkpoint.hpp"
#include "echoflow/config.hpp"
#include "echoflow/train.hpp"

#ifdef HAVE_EIGEN
#include <Eigen/Eigenvalues>
#endif

using namespace echoflow;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

XEsnConfig classic_cfg(std::uint64_t seed) {
    XEsnConfig c;
    c.size = 50;
    c.spectral_radius = 0.9;
    c.density = 0.4;
    c.sigma1 = Activation::Tanh;
    c.sigma2 = Activation::Identity;
    c.gate_mode = GateMode::ScalarLeak;
    c.leak = 0.3;
    c.clip_enabled = false;
    c.norm_enabled = false;
    c.seed = seed;
    return c;
}

// --- criterion 1 -----------------------------------------------------------

bool classical_reduction() {
    const double alpha = 0.3;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RngStream r(seed, 0xC1);
        XEsnUnit a = init_unit(classic_cfg(seed), 2, r);
        XEsnUnit b = a;
        b.config.gate_mode = GateMode::DiagonalGates;
        for (int i = 0; i < b.size(); ++i) {
            b.gate_state[i] = 1.0 - alpha;
            b.gate_input[i] = alpha;
        }
        RngStream pr(seed, 0xC2);
        for (int p = 0; p < 100; ++p) {
            Vec x(a.size()), h(2);
            for (double& e : x) e = pr.uniform(-1.0, 1.0);
            for (double& e : h) e = pr.gaussian();
            a.state = x;
            b.state = x;
            step_classic(a, h, alpha);
            step_mcra(b, h);
            for (int i = 0; i < a.size(); ++i)
                if (std::abs(a.state[i] - b.state[i]) > 1e-12) return false;
        }
    }
    return true;
}

// --- criterion 2 -----------------------------------------------------------

bool esp_scaling() {
    RngStream r(0, 0xC3);
    const GroupConfig cfg = default_group(0);
    Group g = init_group(cfg, 4, r);
    for (int i = 0; i < g.size(); ++i) {
        const double target = cfg.units[i].spectral_radius;
        const double measured = spectral_radius(g.units[i].w).value;
        if (std::abs(measured - target) > 1e-3) {
            std::printf("    unit %d: measured %.6f vs target %.3f\n", i,
                        measured, target);
            return false;
        }
#ifdef HAVE_EIGEN
        const int n = g.units[i].w.rows;
        Eigen::MatrixXd em(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) em(a, b) = g.units[i].w(a, b);
        const double oracle = em.eigenvalues().cwiseAbs().maxCoeff();
        if (std::abs(oracle - target) > 1e-3) return false;
#endif
    }
    return true;
}

// --- criterion 3 -----------------------------------------------------------

bool fading_memory() {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RngStream r(seed, 0xC4);
        XEsnConfig cfg = classic_cfg(seed);
        cfg.spectral_radius = 0.9;
        XEsnUnit a = init_unit(cfg, 1, r);
        XEsnUnit b = a;
        RngStream sr(seed, 0xC5);
        for (double& x : a.state) x = sr.uniform(-1.0, 1.0);
        for (double& x : b.state) x = sr.uniform(-1.0, 1.0);
        double d0 = 0.0;
        for (int i = 0; i < a.size(); ++i)
            d0 += (a.state[i] - b.state[i]) * (a.state[i] - b.state[i]);
        d0 = std::sqrt(d0);
        RngStream ir(seed, 0xC6);
        for (int t = 0; t < 500; ++t) {
            const Vec h = {ir.gaussian()};
            step_classic(a, h, 0.3);
            step_classic(b, h, 0.3);
        }
        double d1 = 0.0;
        for (int i = 0; i < a.size(); ++i)
            d1 += (a.state[i] - b.state[i]) * (a.state[i] - b.state[i]);
        d1 = std::sqrt(d1);
        if (d1 < 1e-4 * d0) ++ok;
    }
    std::printf("    contraction on %d/100 seeds\n", ok);
    return ok >= 95;
}

// --- criterion 4 -----------------------------------------------------------

ModelConfig toy_model_cfg(Variant v) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.embed_dim = 2;
    cfg.k = 8;
    cfg.horizon = 2;
    cfg.group = default_group_halved(0);
    cfg.group.units.resize(2);
    cfg.group.units[0].size = 8;
    cfg.group.units[1].size = 8;
    cfg.group.readout_dim = 4;
    cfg.fusion.d_model = 16;
    cfg.fusion.heads = 4;
    cfg.fusion.layers = 2;
    cfg.fusion.dropout = 0.0;
    cfg.base_hidden = 16;
    cfg.seed = 31;
    return cfg;
}

bool gradient_fidelity() {
    for (Variant v : {Variant::EchoSolo, Variant::EchoMlp}) {
        ForecastModel model = make_model(toy_model_cfg(v), 2);
        RngStream sr(5, 0xC7);
        Mat series(20, 2);
        for (double& e : series.a) e = sr.gaussian();
        model.reset_reservoirs();
        Vec u(2);
        for (int t = 0; t < 16; ++t) {
            for (int c = 0; c < 2; ++c) u[c] = series(t, c);
            model.stream_advance(u);
        }
        std::vector<Vec> states;
        for (const auto& un : model.group.units) states.push_back(un.state);
        Mat window(8, 2), target(2, 2);
        for (int i = 0; i < 8; ++i)
            for (int c = 0; c < 2; ++c) window(i, c) = series(8 + i, c);
        for (int j = 0; j < 2; ++j)
            for (int c = 0; c < 2; ++c) target(j, c) = series(16 + j, c);
        const auto rep = grad_check(model, window, target, states, 1e-6, 8);
        std::printf("    %s: max rel err %.3g (%s)\n", variant_name(v).c_str(),
                    rep.max_rel_err, rep.worst_param.c_str());
        if (rep.max_rel_err >= 1e-4) return false;
    }
    return true;
}

// --- criterion 5 -----------------------------------------------------------

bool huber_exactness() {
    if (huber(Vec{0.0}, Vec{0.0}, 1.0) != 0.0) return false;
    if (std::abs(huber(Vec{0.0}, Vec{0.5}, 1.0) - 0.125) > 1e-15) return false;
    if (std::abs(huber(Vec{0.0}, Vec{2.0}, 1.0) - 1.5) > 1e-15) return false;
    RngStream r(1, 0xC8);
    for (int i = 0; i < 10000; ++i) {
        const double e = r.uniform(-20.0, 20.0);
        const double delta = r.uniform(0.01, 10.0);
        if (huber(Vec{0.0}, Vec{e}, delta) > 0.5 * e * e + 1e-12) return false;
    }
    return true;
}

// --- criterion 6 -----------------------------------------------------------

long rss_kb() {
    std::ifstream in("/proc/self/status");
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("VmRSS:", 0) == 0) return std::atol(line.c_str() + 6);
    return 0;
}

bool constant_step_cost() {
    RngStream r(0, 0xC9);
    XEsnConfig cfg;
    cfg.size = 100;
    cfg.seed = 1;
    XEsnUnit unit = init_unit(cfg, 4, r);
    RngStream ir(2, 0xCA);
    std::vector<Vec> inputs;
    for (int t = 0; t < 10101; ++t) {
        Vec h(4);
        for (double& e : h) e = ir.gaussian();
        inputs.push_back(std::move(h));
    }
    auto median_window = [&](int center) {
        std::vector<double> times;
        for (int t = center - 50; t <= center + 50; ++t) {
            const auto t0 = clk::now();
            step_mcra(unit, inputs[t]);
            times.push_back(seconds_since(t0));
        }
        std::nth_element(times.begin(), times.begin() + times.size() / 2,
                         times.end());
        return times[times.size() / 2];
    };
    const long rss_before = rss_kb();
    for (int t = 0; t < 50; ++t) step_mcra(unit, inputs[t]);  // warm-up
    const double early = median_window(100);
    for (int t = 151; t < 9950; ++t) step_mcra(unit, inputs[t]);
    const double late = median_window(10000);
    const long rss_after = rss_kb();
    std::printf("    median step: %.3g s at idx 1e2, %.3g s at idx 1e4; rss %+ld kB\n",
                early, late, rss_after - rss_before);
    return late < 2.0 * early && (rss_after - rss_before) < 10240;
}

// --- criterion 7 -----------------------------------------------------------

Series lorenz_x(int steps, double dt) {
    Series full = lorenz_generate(steps, dt);
    return full.select_channels({"x"});
}

bool cache_equivalence() {
    Series s = lorenz_x(200, 0.02);
    const SeriesSplits sp = split(s, 0.7, 0.1, 0.2);
    ModelConfig mc = toy_model_cfg(Variant::EchoMlp);
    mc.fusion.dropout = 0.2;
    ModelConfig mc1 = mc;
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.seed = 7;

    ForecastModel a = make_model(mc, 1);
    tc.cache_trajectories = true;
    const TrainReport ra = train(a, sp, tc);
    ForecastModel b = make_model(mc1, 1);
    tc.cache_trajectories = false;
    const TrainReport rb = train(b, sp, tc);
    return ra.step_losses == rb.step_losses && ra.test_mse == rb.test_mse;
}

// --- criteria 8, 10, 11 ----------------------------------------------------

struct SkillRun {
    TrainReport report;
    ForecastModel model;
    double wall_s = 0.0;
    double cpu_s = 0.0;
};

ModelConfig skill_model_cfg() {
    ModelConfig cfg;
    cfg.variant = Variant::EchoSolo;
    cfg.embedding_enabled = false;
    cfg.k = 64;
    cfg.horizon = 16;
    cfg.group = default_group_halved(17);
    cfg.fusion.d_model = 32;
    cfg.fusion.layers = 1;
    cfg.seed = 17;
    return cfg;
}

SkillRun run_skill() {
    const Series s = lorenz_x(3000, 0.01);
    const SeriesSplits sp = split(s, 0.7, 0.1, 0.2);
    TrainConfig tc;
    tc.epochs = 50;
    tc.seed = 17;
    SkillRun out{TrainReport{}, make_model(skill_model_cfg(), 1), 0.0, 0.0};
    const auto t0 = clk::now();
    const std::clock_t c0 = std::clock();
    out.report = train(out.model, sp, tc);
    out.cpu_s = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    out.wall_s = seconds_since(t0);
    return out;
}

bool forecast_skill(const SkillRun& run) {
    std::printf("    test MSE %.4f vs persistence %.4f, %.0f s cpu (%.0f s wall)\n",
                run.report.test_mse, run.report.baseline_mse, run.cpu_s,
                run.wall_s);
    // budget is single-core compute; cpu time is immune to co-tenant load
    return run.report.test_mse < run.report.baseline_mse && run.cpu_s < 300.0;
}

bool frozen_reservoir_audit(const SkillRun& run) {
    // everything the trainer must not touch, rebuilt from the same seed
    ForecastModel fresh = make_model(skill_model_cfg(), 1);
    const ForecastModel& t = run.model;
    for (std::size_t i = 0; i < fresh.group.units.size(); ++i) {
        const XEsnUnit& a = fresh.group.units[i];
        const XEsnUnit& b = t.group.units[i];
        if (a.w.a != b.w.a || a.w_in.a != b.w_in.a || a.bias != b.bias ||
            a.gate_state != b.gate_state || a.gate_input != b.gate_input)
            return false;
    }
    return fresh.reservoir_encoder.w.w == t.reservoir_encoder.w.w &&
           fresh.reservoir_encoder.b.w == t.reservoir_encoder.b.w;
}

bool determinism(const SkillRun& first) {
    const SkillRun second = run_skill();
    const std::string a = report_to_json(first.report).dump(2);
    const std::string b = report_to_json(second.report).dump(2);
    return a == b;
}

// --- criterion 9 -----------------------------------------------------------

bool group_stability() {
    const Series s = lorenz_x(1000, 0.01);
    const SeriesSplits sp = split(s, 0.7, 0.1, 0.2);
    auto run_one = [&](int L, std::uint64_t seed) {
        ModelConfig cfg;
        cfg.variant = Variant::EchoSolo;
        cfg.embedding_enabled = false;
        cfg.k = 32;
        cfg.horizon = 8;
        cfg.group = default_group_halved(seed);
        cfg.group.units.resize(L);
        cfg.fusion.d_model = 32;
        cfg.fusion.layers = 1;
        cfg.seed = seed;
        TrainConfig tc;
        tc.epochs = 8;
        tc.seed = seed;
        ForecastModel model = make_model(cfg, 1);
        return train(model, sp, tc).test_mse;
    };
    auto stats = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / v.size()));
    };
    std::vector<double> l10, l1;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        l10.push_back(run_one(10, seed));
        l1.push_back(run_one(1, seed));
    }
    const auto [m10, s10] = stats(l10);
    const auto [m1, s1] = stats(l1);
    std::printf("    L=10: mean %.4f std %.4f | L=1: mean %.4f std %.4f\n", m10,
                s10, m1, s1);
    return s10 < s1 && m10 <= m1;
}

// --- criterion 12 ----------------------------------------------------------

int etth1_smoke() {  // 1 pass, 0 fail, -1 skip
    std::string path = "data/ETTh1.csv";
    if (const char* env = std::getenv("ETTH1_CSV")) path = env;
    if (!std::filesystem::exists(path)) return -1;
    Series s = load_csv(path);
    if (s.length() > 3000) s = s.slice(0, 3000);
    const SeriesSplits sp = split(s, 0.7, 0.1, 0.2);
    ModelConfig cfg;
    cfg.variant = Variant::EchoSolo;
    cfg.k = 96;
    cfg.horizon = 24;
    cfg.embed_dim = 2;
    cfg.group = default_group_halved(3);
    cfg.seed = 3;
    TrainConfig tc;
    tc.epochs = 5;
    tc.seed = 3;
    ForecastModel model = make_model(cfg, s.channels());
    const TrainReport r = train(model, sp, tc);
    std::printf("    test MSE %.4f vs persistence %.4f\n", r.test_mse,
                r.baseline_mse);
    return std::isfinite(r.test_mse) && std::isfinite(r.test_mae) &&
                   r.test_mse < r.baseline_mse
               ? 1
               : 0;
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int idx, const char* name, bool ok) {
        std::printf("%s  criterion %2d: %s\n", ok ? "PASS" : "FAIL", idx, name);
        if (!ok) ++failures;
        std::fflush(stdout);
    };

    report(1, "classical ESN recovered from the gated update (1e-12)",
           classical_reduction());
    report(2, "spectral radii of the default group match the table (1e-3)",
           esp_scaling());
    report(3, "fading memory on >= 95/100 seeds", fading_memory());
    report(4, "analytic gradients within 1e-4 of finite differences",
           gradient_fidelity());
    report(5, "Huber closed forms exact; bounded by half squared error",
           huber_exactness());
    report(6, "per-step cost flat from stream index 1e2 to 1e4",
           constant_step_cost());
    report(7, "trajectory cache on/off: identical per-step losses",
           cache_equivalence());
    const SkillRun skill = run_skill();
    report(8, "EchoSolo beats persistence on Lorenz-x within 5 min",
           forecast_skill(skill));
    report(9, "L=10 cuts across-seed std vs L=1 at no cost in mean MSE",
           group_stability());
    report(10, "reservoirs bitwise unchanged by training",
           frozen_reservoir_audit(skill));
    report(11, "same seed reproduces a byte-identical training report",
           determinism(skill));
    const int smoke = etth1_smoke();
    if (smoke < 0)
        std::printf("SKIP  criterion 12: ETTh1 smoke (no local data/ETTh1.csv)\n");
    else
        report(12, "ETTh1 smoke: finite metrics, beats persistence", smoke == 1);

    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
