#pragma once

#include "flowscale/grid.hpp"

namespace flowscale {

enum class FilterKind { ideal, raised_cosine };

// Same-size low-pass projection operator. cutoff_fraction is the per-axis
// fraction of the grid's own Nyquist band that is kept.
struct ProjectionConfig {
    double cutoff_fraction = 1.0;
    FilterKind filter_kind = FilterKind::ideal;
    double transition_width = 0.0;  // fraction of the band, raised-cosine only

    static ProjectionConfig native_band(int native_res, int extra_res) {
        ProjectionConfig cfg;
        cfg.cutoff_fraction =
            static_cast<double>(native_res) / static_cast<double>(extra_res);
        return cfg;
    }
};

// Removes (ideal) or attenuates (raised-cosine) per-axis frequency content
// above cutoff. Channels are filtered independently.
Grid lowpass(const Grid& x, const ProjectionConfig& cfg);

inline Grid highpass(const Grid& x, const ProjectionConfig& cfg) {
    return x - lowpass(x, cfg);
}

// Frequency-domain zero-padding upsample by an integer factor, with the
// spectrum pre-compensated for the average-pooling response so that
// downsample(upsample(x, f), f) == x exactly and constants map to themselves.
Grid upsample_bandlimited(const Grid& x, int factor);

// Non-overlapping factor x factor average pooling per channel.
Grid downsample(const Grid& x, int factor);

}  // namespace flowscale
