#pragma once

#include <cstdint>
#include <vector>

#include "flowscale/toolkit.hpp"

namespace flowscale {

struct Token {
    TokenRole role = TokenRole::image;
    int row = 0;
    int col = 0;
    std::vector<double> features;
};

using TokenSequence = std::vector<Token>;

// Joint text+image sequence with seeded features. Image tokens cover the full
// rows x cols grid; text layout follows the toolkit duplication setting. Text
// features are drawn once and shared by every duplicated copy.
TokenSequence make_sequence(int text_len, int rows, int cols, const ToolkitConfig& toolkit,
                            int model_dim, std::uint64_t seed);

struct AttnStats {
    std::vector<double> per_head_entropy;            // mean row entropy per head, nats
    std::vector<double> text_mass_per_image_token;   // head-averaged, one per image token
    double max_logit = 0.0;
};

// Forward-only joint-attention stack with seeded random weights; an
// instrumentation target, not a generator.
struct MmditModel {
    int model_dim = 256;
    int head_dim = 64;
    int n_heads = 4;
    int n_layers = 2;
    struct Layer {
        std::vector<double> wq, wk, wv, wo;  // model_dim x model_dim, row-major
    };
    std::vector<Layer> layers;
};

MmditModel build_model(std::uint64_t seed, int model_dim = 256, int head_dim = 64,
                       int n_heads = 4, int n_layers = 2);

// Runs the stack with the configured RoPE base and attention scale; one AttnStats
// per layer. Throws std::runtime_error naming the layer on non-finite values.
std::vector<AttnStats> forward_audit(const MmditModel& model, const TokenSequence& seq,
                                     const ToolkitConfig& toolkit);

struct RopeAngleRow {
    int dim = 0;  // 1-based frequency index
    double max_native_angle = 0.0;
    double max_extra_angle_scaled = 0.0;
    double max_extra_angle_unscaled = 0.0;
};

// Per-frequency maximum rotation angles over the grid extents; the scale pair is
// derived from the two square grids.
std::vector<RopeAngleRow> rope_angle_audit(const RopeConfig& cfg, int native_grid,
                                           int extra_grid);

}  // namespace flowscale
