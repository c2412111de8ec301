#pragma once

#include <cstddef>
#include <vector>

#include "echoflow/rng.hpp"

namespace echoflow {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
    std::size_t size() const { return a.size(); }

    static Mat identity(int n);
};

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// y = A x
void matvec(const Mat& A, const double* x, double* y);
Vec matvec(const Mat& A, const Vec& x);

// y = A^T x
void matvec_t(const Mat& A, const double* x, double* y);

// C = alpha * op(A) * op(B) + beta * C, row-major, naive kernel.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* A, int lda, const double* B, int ldb, double beta,
          double* C, int ldc);

double dot(const double* x, const double* y, int n);
double norm2(const double* x, int n);

// Sparse-or-dense random matrix: each entry nonzero with probability
// `density`, nonzero values uniform on [low, high). density must be in (0,1].
Mat uniform_matrix(int rows, int cols, double low, double high, double density,
                   RngStream& rng);

Vec uniform_vector(int len, double low, double high, RngStream& rng);

struct SpectralEstimate {
    double value = 0.0;
    // Set when the estimator fell back to the symmetric-product surrogate,
    // which reports the largest singular value (an upper bound on the radius).
    bool upper_bound_surrogate = false;
    int iterations = 0;
};

// Dominant-eigenvalue magnitude by power iteration with a two-dimensional
// Krylov extraction that also resolves complex conjugate dominant pairs.
// Max 1000 iterations, tolerance 1e-10 on successive estimates.
SpectralEstimate spectral_radius(const Mat& m);

// m * (target / spectral_radius(m)), with one correction pass so the
// measured radius of the result lands within 1e-3 of target.
Mat scale_to_radius(const Mat& m, double target);

}  // namespace echoflow
