#pragma once

// Residual energy carried in the send instant of a HELLO message. The delay
// after the shared period start is a quantized, proportional function of
// the sender's residual energy; receivers invert it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace batsim {

enum class DelayMap {
    Direct,   // high residual energy -> late send
    Inverse,  // high residual energy -> early send
};

class HelloCodec {
public:
    HelloCodec(double d_min, double d_max, unsigned slots, double full_scale = 1.0,
               DelayMap map = DelayMap::Direct)
        : d_min_(d_min), d_max_(d_max), slots_(slots), full_scale_(full_scale), map_(map) {
        if (!std::isfinite(d_min) || !std::isfinite(d_max) || !(d_min >= 0.0) ||
            !(d_min < d_max)) {
            throw std::invalid_argument("HelloCodec: need 0 <= d_min < d_max");
        }
        if (slots < 2) {
            throw std::invalid_argument("HelloCodec: need at least 2 slots");
        }
        if (!(full_scale > 0.0)) {
            throw std::invalid_argument("HelloCodec: full-scale energy must be > 0");
        }
    }

    double d_min() const { return d_min_; }
    double d_max() const { return d_max_; }
    unsigned slots() const { return slots_; }
    double full_scale() const { return full_scale_; }
    DelayMap map() const { return map_; }

    double slot_width() const { return (d_max_ - d_min_) / static_cast<double>(slots_ - 1); }
    double energy_step() const { return full_scale_ / static_cast<double>(slots_ - 1); }

    /// Slot index in [0, L-1] carrying `residual`.
    unsigned slot_for_energy(double residual) const {
        if (!(residual >= 0.0) || residual > full_scale_) {
            throw std::invalid_argument("HelloCodec: residual energy outside [0, full scale]");
        }
        const auto level = static_cast<unsigned>(std::lround(residual / energy_step()));
        return map_ == DelayMap::Direct ? level : slots_ - 1 - level;
    }

    /// Nearest slot for an observed delay.
    unsigned slot_for_delay(double delay) const {
        if (!(delay >= d_min_) || delay > d_max_) {
            throw std::invalid_argument("HelloCodec: delay outside [d_min, d_max]");
        }
        return static_cast<unsigned>(std::lround((delay - d_min_) / slot_width()));
    }

    double delay_for_slot(unsigned slot) const {
        if (slot == slots_ - 1) {
            return d_max_;
        }
        return d_min_ + (d_max_ - d_min_) * static_cast<double>(slot) /
                            static_cast<double>(slots_ - 1);
    }

    double energy_for_slot(unsigned slot) const {
        const unsigned level = map_ == DelayMap::Direct ? slot : slots_ - 1 - slot;
        if (level == slots_ - 1) {
            return full_scale_;
        }
        return full_scale_ * static_cast<double>(level) / static_cast<double>(slots_ - 1);
    }

    double encode_delay(double residual) const { return delay_for_slot(slot_for_energy(residual)); }

    double decode_energy(double delay) const { return energy_for_slot(slot_for_delay(delay)); }

private:
    double d_min_;
    double d_max_;
    unsigned slots_;
    double full_scale_;
    DelayMap map_;
};

/// Probability that at least two of `n_nodes` senders with independent,
/// uniformly distributed slots share a slot (birthday bound over L slots).
inline double collision_probability(const HelloCodec& codec, unsigned n_nodes) {
    if (n_nodes < 2) {
        throw std::invalid_argument("collision_probability: need at least 2 nodes");
    }
    const std::uint64_t slots = codec.slots();
    if (n_nodes > slots) {
        return 1.0;
    }
    // Exact integer counts while L^n fits; the ratio is then a single rounding.
    std::uint64_t total = 1;
    std::uint64_t distinct = 1;
    bool exact = true;
    for (unsigned i = 0; i < n_nodes; ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() / slots) {
            exact = false;
            break;
        }
        total *= slots;
        distinct *= slots - i;
    }
    if (exact) {
        return static_cast<double>(total - distinct) / static_cast<double>(total);
    }
    double no_collision = 1.0;
    for (unsigned i = 0; i < n_nodes; ++i) {
        no_collision *= static_cast<double>(slots - i) / static_cast<double>(slots);
    }
    return 1.0 - no_collision;
}

}  // namespace batsim
