#include "echoflow/rng.hpp"

#include <cmath>

#include "echoflow/errors.hpp"

namespace echoflow {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
    // Fold the stream id through the seeding walk so substreams share no state.
    std::uint64_t x = seed;
    x ^= splitmix64(stream_);
    stream_ = stream_id;
    for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("uniform: empty interval [lo, hi)");
    return lo + (hi - lo) * unit();
}

bool RngStream::bernoulli(double p) { return unit() < p; }

double RngStream::gaussian(double mean, double stddev) {
    if (has_cached_gauss_) {
        has_cached_gauss_ = false;
        return mean + stddev * cached_gauss_;
    }
    double u1 = unit();
    while (u1 <= 0.0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_gauss_ = r * std::sin(theta);
    has_cached_gauss_ = true;
    return mean + stddev * r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Rejection sampling to kill modulo bias.
    const std::uint64_t limit = n * ((~0ULL) / n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

RngStream RngStream::substream(std::uint64_t id) const {
    std::uint64_t x = seed_ ^ (0xD1B54A32D192ED03ULL * (stream_ + 1));
    const std::uint64_t mixed = splitmix64(x) ^ id;
    return RngStream(seed_ ^ mixed, id);
}

}  // namespace echoflow
