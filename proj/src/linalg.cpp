#include "echoflow/linalg.hpp"

#include <cmath>
#include <cstring>

#include "echoflow/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace echoflow {

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Mat& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

void matvec(const Mat& A, const double* x, double* y) {
    for (int i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        double s = 0.0;
        for (int j = 0; j < A.cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
}

Vec matvec(const Mat& A, const Vec& x) {
    if (static_cast<int>(x.size()) != A.cols)
        throw ShapeError("matvec: vector length does not match matrix cols");
    Vec y(A.rows);
    matvec(A, x.data(), y.data());
    return y;
}

void matvec_t(const Mat& A, const double* x, double* y) {
    for (int j = 0; j < A.cols; ++j) y[j] = 0.0;
    for (int i = 0; i < A.rows; ++i) {
        const double* r = A.row(i);
        const double xi = x[i];
        for (int j = 0; j < A.cols; ++j) y[j] += r[j] * xi;
    }
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* A, int lda, const double* B, int ldb, double beta,
          double* C, int ldc) {
#ifdef _OPENMP
    const bool par = static_cast<long long>(m) * n * k > 64 * 1024;
#pragma omp parallel for schedule(static) if (par)
#endif
    for (int i = 0; i < m; ++i) {
        double* crow = C + static_cast<std::size_t>(i) * ldc;
        if (beta == 0.0)
            std::memset(crow, 0, sizeof(double) * n);
        else if (beta != 1.0)
            for (int j = 0; j < n; ++j) crow[j] *= beta;
        for (int p = 0; p < k; ++p) {
            const double av = trans_a ? A[static_cast<std::size_t>(p) * lda + i]
                                      : A[static_cast<std::size_t>(i) * lda + p];
            if (av == 0.0) continue;
            const double s = alpha * av;
            if (!trans_b) {
                const double* brow = B + static_cast<std::size_t>(p) * ldb;
                for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
            } else {
                for (int j = 0; j < n; ++j)
                    crow[j] += s * B[static_cast<std::size_t>(j) * ldb + p];
            }
        }
    }
}

double dot(const double* x, const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double norm2(const double* x, int n) { return std::sqrt(dot(x, x, n)); }

Mat uniform_matrix(int rows, int cols, double low, double high, double density,
                   RngStream& rng) {
    if (rows <= 0 || cols <= 0) throw ConfigError("uniform_matrix: non-positive shape");
    if (!(low < high)) throw ConfigError("uniform_matrix: requires low < high");
    if (!(density > 0.0) || density > 1.0)
        throw ConfigError("uniform_matrix: density must be in (0, 1]");
    Mat m(rows, cols);
    for (double& e : m.a) {
        if (density >= 1.0 || rng.bernoulli(density)) e = rng.uniform(low, high);
    }
    return m;
}

Vec uniform_vector(int len, double low, double high, RngStream& rng) {
    if (len <= 0) throw ConfigError("uniform_vector: non-positive length");
    if (!(low < high)) throw ConfigError("uniform_vector: requires low < high");
    Vec v(len);
    for (double& e : v) e = rng.uniform(low, high);
    return v;
}

namespace {

// Power iteration on m m^T; returns the largest singular value.
double largest_singular_value(const Mat& m, int max_iters) {
    const int n = m.rows;
    Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vec tmp(n), w(n);
    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        matvec_t(m, v.data(), tmp.data());
        matvec(m, tmp.data(), w.data());
        const double nw = norm2(w.data(), n);
        if (nw < 1e-300) return 0.0;
        const double next = std::sqrt(nw);
        if (std::abs(next - est) <= 1e-10 * std::max(1.0, next)) return next;
        est = next;
        for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    return est;
}

}  // namespace

SpectralEstimate spectral_radius(const Mat& m) {
    if (m.rows != m.cols) throw ShapeError("spectral_radius: matrix must be square");
    const int n = m.rows;
    SpectralEstimate out;
    if (n == 0) return out;
    if (n == 1) {
        out.value = std::abs(m(0, 0));
        return out;
    }

    constexpr int kMaxIters = 1000;
    constexpr double kTol = 1e-10;

    Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vec w(n), u(n);
    double prev = -1.0;
    for (int it = 1; it <= kMaxIters; ++it) {
        matvec(m, v.data(), w.data());
        const double nw = norm2(w.data(), n);
        if (nw < 1e-300) {
            // Iterate hit the kernel; restart from a skewed direction once,
            // otherwise the reachable spectrum is nilpotent from this start.
            bool restarted = false;
            for (int i = 0; i < n && !restarted; ++i)
                if (v[i] != std::sin(i + 1.0)) restarted = true;
            for (int i = 0; i < n; ++i) v[i] = std::sin(i + 1.0);
            const double nv = norm2(v.data(), n);
            for (int i = 0; i < n; ++i) v[i] /= nv;
            if (!restarted) {
                out.value = 0.0;
                out.iterations = it;
                return out;
            }
            continue;
        }
        matvec(m, w.data(), u.data());

        // Ritz extraction on span{v, w}: fit u ~ a*w + b*v, dominant modulus
        // from x^2 = a x + b. Resolves complex conjugate dominant pairs that
        // plain Rayleigh iteration cycles on.
        const double ww = dot(w.data(), w.data(), n);
        const double wv = dot(w.data(), v.data(), n);
        const double vv = 1.0;  // v kept unit-norm
        const double wu = dot(w.data(), u.data(), n);
        const double vu = dot(v.data(), u.data(), n);
        const double det = ww * vv - wv * wv;
        double est;
        if (det <= 1e-12 * ww) {
            // v is (numerically) an eigenvector already.
            est = std::abs(wv);
        } else {
            const double a = (vv * wu - wv * vu) / det;
            const double b = (ww * vu - wv * wu) / det;
            const double disc = a * a + 4.0 * b;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                est = std::max(std::abs((a + sq) / 2.0), std::abs((a - sq) / 2.0));
            } else {
                est = std::sqrt(std::max(-b, 0.0));
            }
        }
        if (prev >= 0.0 && std::abs(est - prev) <= kTol * std::max(1.0, est)) {
            out.value = est;
            out.iterations = it;
            return out;
        }
        prev = est;
        for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    }

    // The Ritz cycle cannot settle when more than two eigenvalues share the
    // dominant modulus. The modulus itself is still the asymptotic growth
    // rate of the iterate, so average log-growth over a long stretch and
    // accept when two consecutive halves agree.
    {
        const int burn = 200, span = 4000;
        double sum1 = 0.0, sum2 = 0.0;
        int c1 = 0, c2 = 0;
        bool kernel = false;
        for (int it = 0; it < burn + span && !kernel; ++it) {
            matvec(m, v.data(), w.data());
            const double nw = norm2(w.data(), n);
            if (nw < 1e-300) {
                kernel = true;
                break;
            }
            if (it >= burn) {
                if (it < burn + span / 2) {
                    sum1 += std::log(nw);
                    ++c1;
                } else {
                    sum2 += std::log(nw);
                    ++c2;
                }
            }
            for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
        }
        if (!kernel && c1 > 0 && c2 > 0) {
            const double r1 = std::exp(sum1 / c1);
            const double r2 = std::exp(sum2 / c2);
            if (std::abs(r1 - r2) <= 5e-4 * std::max(1.0, r2)) {
                out.value = r2;
                out.iterations = kMaxIters + burn + span;
                return out;
            }
        }
    }

    // No convergence: report the singular-value upper bound, flagged.
    out.value = largest_singular_value(m, kMaxIters);
    out.upper_bound_surrogate = true;
    out.iterations = kMaxIters;
    return out;
}

Mat scale_to_radius(const Mat& m, double target) {
    if (m.rows != m.cols) throw ShapeError("scale_to_radius: matrix must be square");
    if (!(target > 0.0)) throw ConfigError("scale_to_radius: target must be positive");
    const SpectralEstimate est = spectral_radius(m);
    if (est.value < 1e-12)
        throw NumericError("scale_to_radius: matrix has (numerically) zero spectral radius");
    Mat out = m;
    double factor = target / est.value;
    for (double& e : out.a) e *= factor;
    // One correction pass tightens the estimate-induced error.
    const SpectralEstimate check = spectral_radius(out);
    if (check.value > 1e-12 && std::abs(check.value - target) > 1e-6) {
        factor = target / check.value;
        for (double& e : out.a) e *= factor;
    }
    return out;
}

}  // namespace echoflow
