#pragma once

#include <cstdint>

namespace echoflow {

// Deterministic counter-free PRNG (xoshiro256**) keyed by (seed, stream_id).
// The same pair reproduces the same draw sequence on any platform; distinct
// stream ids derived from one seed give independent-looking substreams.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double unit();

    // Uniform on [lo, hi).
    double uniform(double lo, double hi);

    bool bernoulli(double p);

    // Box-Muller.
    double gaussian(double mean = 0.0, double stddev = 1.0);

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Derive an independent substream without touching this stream's state.
    RngStream substream(std::uint64_t id) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
    std::uint64_t stream_;
    bool has_cached_gauss_ = false;
    double cached_gauss_ = 0.0;
};

}  // namespace echoflow
