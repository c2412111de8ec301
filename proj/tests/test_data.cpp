#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "echoflow/data.hpp"
#include "echoflow/errors.hpp"

using namespace echoflow;

namespace {

std::string temp_path(const char* name) {
    return std::string("/tmp/echoflow_test_") + name;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// Reference RK4 step for the Lorenz system, written independently of the
// library kernel.
std::array<double, 3> lorenz_rk4_step(std::array<double, 3> s, double dt,
                                      const LorenzParams& p) {
    auto f = [&](std::array<double, 3> x) {
        return std::array<double, 3>{p.sigma * (x[1] - x[0]),
                                     x[0] * (p.rho - x[2]) - x[1],
                                     x[0] * x[1] - p.beta * x[2]};
    };
    auto add = [](std::array<double, 3> a, std::array<double, 3> b, double c) {
        return std::array<double, 3>{a[0] + c * b[0], a[1] + c * b[1],
                                     a[2] + c * b[2]};
    };
    const auto k1 = f(s);
    const auto k2 = f(add(s, k1, dt / 2));
    const auto k3 = f(add(s, k2, dt / 2));
    const auto k4 = f(add(s, k3, dt));
    for (int i = 0; i < 3; ++i)
        s[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return s;
}

}  // namespace

TEST_CASE("csv: save/load round trip preserves doubles exactly") {
    Series s;
    s.channel_names = {"a", "b"};
    s.values = Mat(3, 2);
    s.values(0, 0) = 1.0 / 3.0;
    s.values(0, 1) = -2.5e-17;
    s.values(1, 0) = 1e300;
    s.values(1, 1) = 0.1;
    s.values(2, 0) = -7.0;
    s.values(2, 1) = 3.141592653589793;
    const std::string path = temp_path("rt.csv");
    save_csv(s, path);
    const Series t = load_csv(path);
    CHECK(t.channel_names == s.channel_names);
    REQUIRE(t.values.a.size() == s.values.a.size());
    for (std::size_t i = 0; i < s.values.a.size(); ++i)
        CHECK(t.values.a[i] == s.values.a[i]);
    std::remove(path.c_str());
}

TEST_CASE("csv: leading date column becomes opaque timestamps") {
    const std::string path = temp_path("ts.csv");
    write_file(path, "date,x,y\n2020-01-01,1.5,2\n2020-01-02,3,4\n");
    const Series s = load_csv(path);
    CHECK(s.channels() == 2);
    CHECK(s.channel_names == std::vector<std::string>{"x", "y"});
    CHECK(s.timestamps == std::vector<std::string>{"2020-01-01", "2020-01-02"});
    CHECK(s.values(1, 0) == 3.0);
    std::remove(path.c_str());
}

TEST_CASE("csv: ragged rows and non-numeric cells raise DataError with location") {
    const std::string ragged = temp_path("ragged.csv");
    write_file(ragged, "x,y\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(ragged), DataError);
    std::remove(ragged.c_str());

    const std::string bad = temp_path("bad.csv");
    write_file(bad, "x,y\n1,oops\n");
    try {
        load_csv(bad);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("oops") != std::string::npos);
    }
    std::remove(bad.c_str());
}

TEST_CASE("csv: forward fill imputes empty cells") {
    const std::string path = temp_path("ff.csv");
    write_file(path, "x,y\n1,2\n,5\n7,\n");
    CHECK_THROWS_AS(load_csv(path), DataError);
    CsvOptions opt;
    opt.forward_fill = true;
    const Series s = load_csv(path, opt);
    CHECK(s.values(1, 0) == 1.0);
    CHECK(s.values(2, 1) == 5.0);
    std::remove(path.c_str());
}

TEST_CASE("zscore_fit: train statistics, zero-variance rejection") {
    Series s;
    s.channel_names = {"u", "v"};
    s.values = Mat(4, 2);
    const double us[4] = {1, 2, 3, 4}, vs[4] = {-1, 1, -1, 1};
    for (int t = 0; t < 4; ++t) {
        s.values(t, 0) = us[t];
        s.values(t, 1) = vs[t];
    }
    const Normalizer n = zscore_fit(s);
    CHECK(n.mean[0] == doctest::Approx(2.5));
    CHECK(n.mean[1] == doctest::Approx(0.0));
    CHECK(n.stddev[1] == doctest::Approx(1.0));
    const Mat z = n.apply(s.values);
    const Mat back = n.invert(z);
    for (std::size_t i = 0; i < back.a.size(); ++i)
        CHECK(back.a[i] == doctest::Approx(s.values.a[i]).epsilon(1e-12));

    Series flat = s;
    for (int t = 0; t < 4; ++t) flat.values(t, 1) = 3.0;
    try {
        zscore_fit(flat);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("v") != std::string::npos);
    }
}

TEST_CASE("split: floored val/test, remainder to train, contiguous, no overlap") {
    Series s;
    s.channel_names = {"x"};
    s.values = Mat(103, 1);
    for (int t = 0; t < 103; ++t) s.values(t, 0) = t;
    const SeriesSplits sp = split(s, 0.70, 0.10, 0.20);
    CHECK(sp.val.length() == 10);
    CHECK(sp.test.length() == 20);
    CHECK(sp.train.length() == 73);
    CHECK(sp.train.values(72, 0) == 72.0);
    CHECK(sp.val.values(0, 0) == 73.0);
    CHECK(sp.test.values(0, 0) == 83.0);
    CHECK(sp.test.values(19, 0) == 102.0);
    CHECK_THROWS(split(s, 0.5, 0.2, 0.2));
}

TEST_CASE("lorenz: first generated rows match an independent RK4") {
    const LorenzParams p;
    const double dt = 0.01;
    const Series s = lorenz_generate(5, dt, {1.0, 1.0, 1.0}, p);
    REQUIRE(s.length() == 5);
    REQUIRE(s.channels() == 3);
    std::array<double, 3> x = {1.0, 1.0, 1.0};
    for (int t = 0; t < 5; ++t) {
        x = lorenz_rk4_step(x, dt, p);
        for (int c = 0; c < 3; ++c)
            CHECK(s.values(t, c) == doctest::Approx(x[c]).epsilon(1e-14));
    }
}

TEST_CASE("lorenz: integrator converges at fourth order") {
    const LorenzParams p;
    const double T = 0.32;
    auto endpoint = [&](double dt) {
        const int n = static_cast<int>(std::lround(T / dt));
        const Series s = lorenz_generate(n, dt, {1.0, 1.0, 1.0}, p);
        return std::array<double, 3>{s.values(n - 1, 0), s.values(n - 1, 1),
                                     s.values(n - 1, 2)};
    };
    const auto a = endpoint(0.02), b = endpoint(0.01), c = endpoint(0.005);
    double d_ab = 0.0, d_bc = 0.0;
    for (int i = 0; i < 3; ++i) {
        d_ab += std::abs(a[i] - b[i]);
        d_bc += std::abs(b[i] - c[i]);
    }
    const double order = std::log2(d_ab / d_bc);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
}

TEST_CASE("sine: pure tones without noise") {
    RngStream r(1, 1);
    const Series s = sine_generate(100, 2, {1.0, 3.0}, 0.0, r);
    CHECK(s.channels() == 2);
    for (int t = 0; t < 100; ++t) {
        CHECK(s.values(t, 0) ==
              doctest::Approx(std::sin(2.0 * M_PI * 1.0 * t / 100)).epsilon(1e-12));
        CHECK(s.values(t, 1) ==
              doctest::Approx(std::sin(2.0 * M_PI * 3.0 * t / 100)).epsilon(1e-12));
    }
}

TEST_CASE("series: slice and channel selection") {
    Series s;
    s.channel_names = {"a", "b", "c"};
    s.values = Mat(5, 3);
    for (int t = 0; t < 5; ++t)
        for (int c = 0; c < 3; ++c) s.values(t, c) = 10 * t + c;
    const Series mid = s.slice(1, 4);
    CHECK(mid.length() == 3);
    CHECK(mid.values(0, 0) == 10.0);
    const Series sel = s.select_channels({"c", "a"});
    CHECK(sel.channel_names == std::vector<std::string>{"c", "a"});
    CHECK(sel.values(2, 0) == 22.0);
    CHECK(sel.values(2, 1) == 20.0);
    CHECK_THROWS(s.select_channels({"zz"}));
}
