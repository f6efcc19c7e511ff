#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace batsim {

/// Seedable generator used for every stochastic draw in the library.
///
/// Only the raw engine output is used (std::mt19937_64 is bit-specified by
/// the standard); the variate transforms below are written out by hand so
/// that streams do not depend on the standard library's distribution code.
class Rng {
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential with the given rate; +inf when rate is zero.
    double exponential(double rate) {
        if (rate <= 0.0) {
            return INFINITY;
        }
        return -std::log(uniform_open()) / rate;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace batsim
