#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "flowscale/grid.hpp"

namespace flowscale {

// splitmix64; used to derive independent stream seeds from (master, index).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Deterministic gaussian stream: mt19937_64 + explicit Box-Muller, so the
// byte-for-byte reproducibility contract holds across standard libraries
// (std::normal_distribution is implementation-defined).
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed) : eng_(seed) {}

    double uniform() {
        // 53-bit uniform in [0,1)
        return (eng_() >> 11) * 0x1.0p-53;
    }

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t next_u64() { return eng_(); }

    void fill(Grid& g) {
        for (double& v : g.data) v = next();
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline Grid gaussian_grid(int c, int h, int w, uint64_t seed) {
    Grid g(c, h, w);
    GaussianStream s(seed);
    s.fill(g);
    return g;
}

}  // namespace flowscale
