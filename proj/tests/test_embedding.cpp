#include <doctest.h>

#include <cmath>

#include "echoflow/embedding.hpp"

using namespace echoflow;

TEST_CASE("encoder: per-channel affine blocks") {
    EmbeddingEncoder enc(3, 2, true);
    // channel 0 -> w (1,2,3), b (0.1,0.2,0.3); channel 1 -> w (4,5,6), b 0
    double w[] = {1, 2, 3, 4, 5, 6};
    double b[] = {0.1, 0.2, 0.3, 0, 0, 0};
    std::copy(w, w + 6, enc.w.w.begin());
    std::copy(b, b + 6, enc.b.w.begin());

    const Vec h = enc.embed(Vec{2.0, -1.0});
    REQUIRE(h.size() == 6);
    CHECK(h[0] == doctest::Approx(2.1));
    CHECK(h[1] == doctest::Approx(4.2));
    CHECK(h[2] == doctest::Approx(6.3));
    CHECK(h[3] == doctest::Approx(-4.0));
    CHECK(h[4] == doctest::Approx(-5.0));
    CHECK(h[5] == doctest::Approx(-6.0));
}

TEST_CASE("encoder disabled is the identity") {
    EmbeddingEncoder enc(5, 3, false);
    CHECK(enc.out_dim() == 3);
    const Vec u = {1.5, -2.0, 0.25};
    CHECK(enc.embed(u) == u);
}

TEST_CASE("encoder backward matches finite differences") {
    EmbeddingEncoder enc(4, 3, true);
    RngStream r(1, 1);
    enc.init(r);
    const Vec u = {0.7, -1.2, 2.1};
    Vec gh(enc.out_dim());
    RngStream gr(2, 2);
    for (double& e : gh) e = gr.gaussian();

    enc.w.zero_grad();
    enc.b.zero_grad();
    enc.backward(u.data(), gh.data());

    const double h = 1e-6;
    for (std::size_t i = 0; i < enc.w.size(); ++i) {
        const double keep = enc.w.w[i];
        enc.w.w[i] = keep + h;
        const Vec yp = enc.embed(u);
        enc.w.w[i] = keep - h;
        const Vec ym = enc.embed(u);
        enc.w.w[i] = keep;
        double fd = 0.0;
        for (std::size_t j = 0; j < gh.size(); ++j)
            fd += gh[j] * (yp[j] - ym[j]) / (2 * h);
        CHECK(enc.w.g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < enc.b.size(); ++i) {
        const double keep = enc.b.w[i];
        enc.b.w[i] = keep + h;
        const Vec yp = enc.embed(u);
        enc.b.w[i] = keep - h;
        const Vec ym = enc.embed(u);
        enc.b.w[i] = keep;
        double fd = 0.0;
        for (std::size_t j = 0; j < gh.size(); ++j)
            fd += gh[j] * (yp[j] - ym[j]) / (2 * h);
        CHECK(enc.b.g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("decoder restores through an input leaky relu and can emit negatives") {
    RestorationDecoder dec(2, 2, true);
    RngStream r(3, 3);
    dec.init(r);
    for (double& e : dec.map.b.w) e = -0.5;

    const Vec x = {1.0, -2.0, 0.5, -0.25};
    const Vec out = dec.restore(x);
    REQUIRE(out.size() == 2);
    // negative inputs are scaled by 0.01 before the linear map
    Vec relu_x = {1.0, -0.02, 0.5, -0.0025};
    for (int i = 0; i < 2; ++i) {
        double s = dec.map.b.w[i];
        for (int j = 0; j < 4; ++j) s += dec.map.W.at(i, j) * relu_x[j];
        CHECK(out[i] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("decoder backward matches finite differences, including gx") {
    RestorationDecoder dec(3, 2, true);
    RngStream r(4, 4);
    dec.init(r);
    Vec x(6);
    RngStream xr(5, 5);
    for (double& e : x) e = xr.gaussian();
    Vec gout(2);
    for (double& e : gout) e = xr.gaussian();

    dec.map.W.zero_grad();
    dec.map.b.zero_grad();
    Vec gx(6, 0.0);
    dec.backward(x.data(), gout.data(), gx.data());

    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const Vec yp = dec.restore(xp), ym = dec.restore(xm);
        double fd = 0.0;
        for (std::size_t j = 0; j < gout.size(); ++j)
            fd += gout[j] * (yp[j] - ym[j]) / (2 * h);
        CHECK(gx[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (std::size_t i = 0; i < dec.map.W.size(); ++i) {
        const double keep = dec.map.W.w[i];
        dec.map.W.w[i] = keep + h;
        const Vec yp = dec.restore(x);
        dec.map.W.w[i] = keep - h;
        const Vec ym = dec.restore(x);
        dec.map.W.w[i] = keep;
        double fd = 0.0;
        for (std::size_t j = 0; j < gout.size(); ++j)
            fd += gout[j] * (yp[j] - ym[j]) / (2 * h);
        CHECK(dec.map.W.g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}
