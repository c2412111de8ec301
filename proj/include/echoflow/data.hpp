#pragma once

#include <array>
#include <string>
#include <vector>

#include "echoflow/linalg.hpp"
#include "echoflow/rng.hpp"

namespace echoflow {

struct Series {
    Mat values;                           // T x N_u
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // opaque, may be empty

    int length() const { return values.rows; }
    int channels() const { return values.cols; }

    Vec row_vec(int t) const;
    Series slice(int begin, int end) const;  // [begin, end)
    Series select_channels(const std::vector<std::string>& names) const;
};

struct CsvOptions {
    bool forward_fill = false;  // impute missing cells from the previous row
};

Series load_csv(const std::string& path, const CsvOptions& options = {});
void save_csv(const Series& s, const std::string& path);

// Per-channel z-score with train-split statistics only.
struct Normalizer {
    Vec mean;
    Vec stddev;

    Series apply(const Series& s) const;
    Series invert(const Series& s) const;
    Mat apply(const Mat& m) const;
    Mat invert(const Mat& m) const;
};

Normalizer zscore_fit(const Series& train);

struct SeriesSplits {
    Series train, val, test;
};

// Contiguous chronological split; floor lengths, remainder goes to train.
SeriesSplits split(const Series& s, double train_frac, double val_frac,
                   double test_frac);

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
};

// Classic Lorenz system integrated with fixed-step RK4; channels x, y, z.
Series lorenz_generate(int steps, double dt = 0.01,
                       std::array<double, 3> init = {1.0, 1.0, 1.0},
                       const LorenzParams& params = {});

// Per-channel sin(2 pi f t / steps * steps) + Gaussian noise.
Series sine_generate(int steps, int channels, const std::vector<double>& freqs,
                     double noise_std, RngStream& rng);

}  // namespace echoflow
