#include "echoflow/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "echoflow/errors.hpp"

namespace echoflow {

Vec Series::row_vec(int t) const {
    Vec v(values.cols);
    for (int j = 0; j < values.cols; ++j) v[j] = values(t, j);
    return v;
}

Series Series::slice(int begin, int end) const {
    if (begin < 0 || end > values.rows || begin > end)
        throw DataError("Series::slice: range out of bounds");
    Series out;
    out.channel_names = channel_names;
    out.values = Mat(end - begin, values.cols);
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < values.cols; ++j) out.values(i - begin, j) = values(i, j);
    if (!timestamps.empty())
        out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    return out;
}

Series Series::select_channels(const std::vector<std::string>& names) const {
    std::vector<int> idx;
    for (const auto& n : names) {
        auto it = std::find(channel_names.begin(), channel_names.end(), n);
        if (it == channel_names.end())
            throw DataError("select_channels: no channel named '" + n + "'");
        idx.push_back(static_cast<int>(it - channel_names.begin()));
    }
    Series out;
    out.channel_names = names;
    out.timestamps = timestamps;
    out.values = Mat(values.rows, static_cast<int>(idx.size()));
    for (int i = 0; i < values.rows; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out.values(i, static_cast<int>(j)) = values(i, idx[j]);
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

bool is_timestamp_column(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "date" || lower == "timestamp";
}

}  // namespace

Series load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("load_csv: empty file '" + path + "'");
    std::vector<std::string> header = split_line(line);
    if (header.empty()) throw DataError("load_csv: missing header row");

    const bool has_timestamp = is_timestamp_column(header.front());
    const int first_data_col = has_timestamp ? 1 : 0;
    const int n_channels = static_cast<int>(header.size()) - first_data_col;
    if (n_channels < 1) throw DataError("load_csv: no data columns");

    Series s;
    s.channel_names.assign(header.begin() + first_data_col, header.end());
    std::vector<double> data;
    std::vector<double> prev_row(n_channels, 0.0);
    int row_idx = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_idx;
        std::vector<std::string> cells = split_line(line);
        if (static_cast<int>(cells.size()) != static_cast<int>(header.size()))
            throw DataError("load_csv: ragged row " + std::to_string(row_idx) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        if (has_timestamp) s.timestamps.push_back(cells[0]);
        for (int c = 0; c < n_channels; ++c) {
            const std::string& cell = cells[first_data_col + c];
            if (cell.empty()) {
                if (options.forward_fill && row_idx > 1) {
                    data.push_back(prev_row[c]);
                    continue;
                }
                throw DataError("load_csv: missing value at row " + std::to_string(row_idx) +
                                ", column " + std::to_string(c + 1));
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw DataError("load_csv: non-numeric cell '" + cell + "' at row " +
                                std::to_string(row_idx) + ", column " + std::to_string(c + 1));
            data.push_back(v);
            prev_row[c] = v;
        }
    }
    if (row_idx == 0) throw DataError("load_csv: empty data in '" + path + "'");
    s.values = Mat(row_idx, n_channels);
    s.values.a = std::move(data);
    return s;
}

void save_csv(const Series& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_csv: cannot write '" + path + "'");
    const bool with_ts = !s.timestamps.empty();
    if (with_ts) out << "date,";
    for (int c = 0; c < s.channels(); ++c)
        out << s.channel_names[c] << (c + 1 < s.channels() ? "," : "\n");
    char buf[64];
    for (int t = 0; t < s.length(); ++t) {
        if (with_ts) out << s.timestamps[t] << ',';
        for (int c = 0; c < s.channels(); ++c) {
            // shortest round-trip formatting
            const auto res = std::to_chars(buf, buf + sizeof(buf), s.values(t, c));
            out.write(buf, res.ptr - buf);
            out.put(c + 1 < s.channels() ? ',' : '\n');
        }
    }
    if (!out) throw DataError("save_csv: write failed for '" + path + "'");
}

Normalizer zscore_fit(const Series& train) {
    if (train.length() < 1) throw DataError("zscore_fit: empty train series");
    const int n = train.channels();
    Normalizer z;
    z.mean.assign(n, 0.0);
    z.stddev.assign(n, 0.0);
    const int T = train.length();
    for (int c = 0; c < n; ++c) {
        double m = 0.0;
        for (int t = 0; t < T; ++t) m += train.values(t, c);
        m /= T;
        double var = 0.0;
        for (int t = 0; t < T; ++t) {
            const double d = train.values(t, c) - m;
            var += d * d;
        }
        var /= T;
        if (var <= 0.0)
            throw ConfigError("zscore_fit: channel '" + train.channel_names[c] +
                              "' has zero variance");
        z.mean[c] = m;
        z.stddev[c] = std::sqrt(var);
    }
    return z;
}

Mat Normalizer::apply(const Mat& m) const {
    if (m.cols != static_cast<int>(mean.size()))
        throw ShapeError("Normalizer::apply: channel count mismatch");
    Mat out = m;
    for (int t = 0; t < m.rows; ++t)
        for (int c = 0; c < m.cols; ++c)
            out(t, c) = (m(t, c) - mean[c]) / stddev[c];
    return out;
}

Mat Normalizer::invert(const Mat& m) const {
    if (m.cols != static_cast<int>(mean.size()))
        throw ShapeError("Normalizer::invert: channel count mismatch");
    Mat out = m;
    for (int t = 0; t < m.rows; ++t)
        for (int c = 0; c < m.cols; ++c)
            out(t, c) = m(t, c) * stddev[c] + mean[c];
    return out;
}

Series Normalizer::apply(const Series& s) const {
    Series out = s;
    out.values = apply(s.values);
    return out;
}

Series Normalizer::invert(const Series& s) const {
    Series out = s;
    out.values = invert(s.values);
    return out;
}

SeriesSplits split(const Series& s, double train_frac, double val_frac,
                   double test_frac) {
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0))
        throw ConfigError("split: fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("split: fractions must sum to 1");
    const int T = s.length();
    const int n_val = static_cast<int>(std::floor(val_frac * T));
    const int n_test = static_cast<int>(std::floor(test_frac * T));
    const int n_train = T - n_val - n_test;
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw ConfigError("split: series too short for the requested fractions");
    SeriesSplits out;
    out.train = s.slice(0, n_train);
    out.val = s.slice(n_train, n_train + n_val);
    out.test = s.slice(n_train + n_val, T);
    return out;
}

namespace {

std::array<double, 3> lorenz_deriv(const std::array<double, 3>& s,
                                   const LorenzParams& p) {
    return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1],
            s[0] * s[1] - p.beta * s[2]};
}

}  // namespace

Series lorenz_generate(int steps, double dt, std::array<double, 3> init,
                       const LorenzParams& params) {
    if (steps < 1) throw ConfigError("lorenz_generate: steps must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("lorenz_generate: dt must be positive");
    Series s;
    s.channel_names = {"x", "y", "z"};
    s.values = Mat(steps, 3);
    std::array<double, 3> state = init;
    for (int t = 0; t < steps; ++t) {
        const auto k1 = lorenz_deriv(state, params);
        std::array<double, 3> tmp;
        for (int i = 0; i < 3; ++i) tmp[i] = state[i] + 0.5 * dt * k1[i];
        const auto k2 = lorenz_deriv(tmp, params);
        for (int i = 0; i < 3; ++i) tmp[i] = state[i] + 0.5 * dt * k2[i];
        const auto k3 = lorenz_deriv(tmp, params);
        for (int i = 0; i < 3; ++i) tmp[i] = state[i] + dt * k3[i];
        const auto k4 = lorenz_deriv(tmp, params);
        for (int i = 0; i < 3; ++i)
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (int i = 0; i < 3; ++i) s.values(t, i) = state[i];
    }
    return s;
}

Series sine_generate(int steps, int channels, const std::vector<double>& freqs,
                     double noise_std, RngStream& rng) {
    if (steps < 1) throw ConfigError("sine_generate: steps must be >= 1");
    if (channels < 1) throw ConfigError("sine_generate: channels must be >= 1");
    if (static_cast<int>(freqs.size()) != channels)
        throw ConfigError("sine_generate: need one frequency per channel");
    Series s;
    for (int c = 0; c < channels; ++c) s.channel_names.push_back("ch" + std::to_string(c));
    s.values = Mat(steps, channels);
    for (int t = 0; t < steps; ++t)
        for (int c = 0; c < channels; ++c) {
            double v = std::sin(2.0 * M_PI * freqs[c] * t / steps);
            if (noise_std > 0.0) v += rng.gaussian(0.0, noise_std);
            s.values(t, c) = v;
        }
    return s;
}

}  // namespace echoflow
