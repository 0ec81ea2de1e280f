#pragma once

#include <cmath>
#include <cstdint>

#include "adp/errors.hpp"

namespace adp {

/// Deterministic 64-bit generator (splitmix64). Used everywhere instead of
/// <random> engines/distributions so that byte-identical output does not
/// depend on the standard-library implementation.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw InvalidInputError("next_below: n must be positive");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller; the spare value is cached per stream.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586 * u2);
        has_spare_ = true;
        return mag * std::cos(6.283185307179586 * u2);
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang, with the usual boost for shape < 1.
    double gamma(double shape) {
        if (shape <= 0.0) throw InvalidInputError("gamma shape must be positive");
        if (shape < 1.0) {
            double u = next_double();
            while (u <= 0.0) u = next_double();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a seed once through splitmix64. Used for documented seed derivations
/// (per-run streams, per-cell seeds).
inline std::uint64_t mix_seed(std::uint64_t x) { return RngStream(x).next_u64(); }

/// The three independent noise streams of a run, derived from the run seed in
/// a fixed, documented order: lookahead noise first, then rollout noise, then
/// sample-set draws. Each stream is the splitmix64 output i of the run seed.
struct RunStreams {
    RngStream lookahead;
    RngStream rollout;
    RngStream samples;

    explicit RunStreams(std::uint64_t run_seed)
        : lookahead(derive(run_seed, 0)), rollout(derive(run_seed, 1)), samples(derive(run_seed, 2)) {}

    static std::uint64_t derive(std::uint64_t run_seed, int stream_index) {
        RngStream s(run_seed);
        std::uint64_t v = 0;
        for (int i = 0; i <= stream_index; ++i) v = s.next_u64();
        return v;
    }
};

/// Per-cell seed for experiment sweeps: cell_seed = splitmix64(splitmix64(spec_seed) ^ (cell_index + 1)).
inline std::uint64_t cell_seed(std::uint64_t spec_seed, std::size_t cell_index) {
    return mix_seed(mix_seed(spec_seed) ^ (static_cast<std::uint64_t>(cell_index) + 1));
}

}  // namespace adp
