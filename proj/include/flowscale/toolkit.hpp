#pragma once

#include <string>
#include <vector>

#include "flowscale/flow.hpp"

namespace flowscale {

struct RopeConfig {
    int head_dim = 64;            // divisible by 4
    double base = 10000.0;        // rotary base b
    double base_multiplier = 1.0; // extra re-scaling factor (2.5 for flux-style)
    ScalePair scale;
};

enum class AttnScaleMode { off, entropy_matching };

struct ToolkitConfig {
    RopeConfig rope;
    double s_star_multiplier = 1.0;  // 1.5 for flux-style
    AttnScaleMode attention_scale_mode = AttnScaleMode::off;
    bool text_duplication = false;

    double s_star() const { return s_star_multiplier * rope.scale.s(); }
};

// Named presets from the paper's two model families.
ToolkitConfig toolkit_preset(const std::string& name, ScalePair scale);

// theta_d = base^(-4d/head_dim) for d = 1..head_dim/4, strictly decreasing.
std::vector<double> rope_frequencies(int head_dim, double base);

// b' = base_multiplier * base * s.
double ntk_scaled_base(const RopeConfig& cfg);

// First half of dimension pairs rotated by row*theta_d, second half by col*theta_d,
// using the effective (scaled) base.
std::vector<double> rope_rotate(int row, int col, const std::vector<double>& vec,
                                const RopeConfig& cfg);

double attn_scale(ScalePair scale, AttnScaleMode mode);

enum class TokenRole { text, image };

struct TokenDescriptor {
    TokenRole role = TokenRole::text;
    int copy_index = 0;
    int row = 0;
    int col = 0;
};

// s^2 copies of the text block, copy k anchored at the k-th cell of the s x s
// block grid over the image extent (row-major); copy 0 stays at (0,0).
std::vector<TokenDescriptor> duplicate_text(int text_len, ScalePair scale, int rows, int cols);

}  // namespace flowscale
