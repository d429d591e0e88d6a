#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace groklab {

// splitmix64: seeding / stream-derivation mixer.
struct SplitMix64 {
    uint64_t state = 0;

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

// Named stream tags so independent consumers of one user seed never share
// a stream (e.g. split sampling vs. weight init).
enum class StreamTag : uint64_t {
    split = 1,
    init = 2,
    batch = 3,
    power_iteration = 4,
    monte_carlo = 5,
    glyphs = 6,
    composite_split = 7,
};

// xoshiro256**: portable 64-bit generator with splittable streams.
// All distributions below are implemented by hand so that byte-identical
// sequences are produced on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        SplitMix64 sm{seed};
        for (auto& word : state_) word = sm.next();
    }

    // Derives an independent stream from (seed, tag). Sub-streams (e.g. one
    // per Monte-Carlo trial) pass tag = base_tag * 2^32 + index.
    static Rng stream(uint64_t seed, uint64_t tag) {
        SplitMix64 sm{seed ^ (0x9e3779b97f4a7c15ull * (tag + 1))};
        Rng r(sm.next());
        return r;
    }
    static Rng stream(uint64_t seed, StreamTag tag, uint64_t index = 0) {
        return stream(seed, static_cast<uint64_t>(tag) + (index << 32));
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (cached spare), platform-independent.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased integer in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
        const uint64_t threshold = -n % n;  // 2^64 mod n
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::array<uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<uint64_t, 4>& s) {
        state_ = s;
        has_spare_ = false;
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace groklab
