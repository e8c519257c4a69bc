#include "flowscale/toolkit.hpp"

#include <cmath>
#include <stdexcept>

namespace flowscale {

ToolkitConfig toolkit_preset(const std::string& name, ScalePair scale) {
    ToolkitConfig cfg;
    cfg.rope.scale = scale;
    cfg.attention_scale_mode = AttnScaleMode::entropy_matching;
    cfg.text_duplication = true;
    if (name == "lumina") {
        cfg.rope.base_multiplier = 1.0;
        cfg.s_star_multiplier = 1.0;
    } else if (name == "flux") {
        cfg.rope.base_multiplier = 2.5;
        cfg.s_star_multiplier = 1.5;
    } else {
        throw std::invalid_argument("unknown toolkit preset: " + name);
    }
    return cfg;
}

std::vector<double> rope_frequencies(int head_dim, double base) {
    if (head_dim <= 0 || head_dim % 4 != 0)
        throw std::invalid_argument("rope_frequencies: head_dim must be a positive multiple of 4");
    if (!(base > 1.0)) throw std::invalid_argument("rope_frequencies: base must exceed 1");
    std::vector<double> theta(head_dim / 4);
    for (int d = 1; d <= head_dim / 4; ++d) {
        theta[d - 1] = std::pow(base, -4.0 * d / head_dim);
    }
    return theta;
}

double ntk_scaled_base(const RopeConfig& cfg) {
    if (cfg.scale.s() < 1.0)
        throw std::invalid_argument("ntk_scaled_base: scale.s must be >= 1");
    return cfg.base_multiplier * cfg.base * cfg.scale.s();
}

std::vector<double> rope_rotate(int row, int col, const std::vector<double>& vec,
                                const RopeConfig& cfg) {
    if (static_cast<int>(vec.size()) != cfg.head_dim)
        throw std::invalid_argument("rope_rotate: vector length does not match head_dim");
    const std::vector<double> theta = rope_frequencies(cfg.head_dim, ntk_scaled_base(cfg));
    std::vector<double> out = vec;
    const int quarter = cfg.head_dim / 4;
    for (int d = 0; d < quarter; ++d) {
        // row-axis pairs occupy the first half, col-axis pairs the second half
        for (int axis = 0; axis < 2; ++axis) {
            const double angle = (axis == 0 ? row : col) * theta[d];
            const double c = std::cos(angle), s = std::sin(angle);
            const int i = axis * 2 * quarter + 2 * d;
            const double a = vec[i], b = vec[i + 1];
            out[i] = a * c - b * s;
            out[i + 1] = a * s + b * c;
        }
    }
    return out;
}

double attn_scale(ScalePair scale, AttnScaleMode mode) {
    if (mode == AttnScaleMode::off) return 1.0;
    if (scale.native_len < 2 || scale.extra_len < scale.native_len)
        throw std::invalid_argument("attn_scale: need extra_len >= native_len >= 2");
    return std::sqrt(std::log(static_cast<double>(scale.extra_len)) /
                     std::log(static_cast<double>(scale.native_len)));
}

std::vector<TokenDescriptor> duplicate_text(int text_len, ScalePair scale, int rows, int cols) {
    if (text_len <= 0) throw std::invalid_argument("duplicate_text: text_len must be positive");
    const double s2_real = static_cast<double>(scale.extra_len) / scale.native_len;
    const long s2 = std::lround(s2_real);
    if (std::abs(s2_real - static_cast<double>(s2)) > 1e-9 || s2 < 1)
        throw std::invalid_argument("duplicate_text: scale.s^2 must be a positive integer");
    const long s = std::lround(std::sqrt(static_cast<double>(s2)));
    if (s * s != s2)
        throw std::invalid_argument("duplicate_text: scale.s must be an integer for duplication");
    if (rows % s != 0 || cols % s != 0)
        throw std::invalid_argument("duplicate_text: image grid must split into s x s blocks");
    std::vector<TokenDescriptor> out;
    out.reserve(static_cast<size_t>(s2) * text_len);
    for (long k = 0; k < s2; ++k) {
        const int row = static_cast<int>((k / s) * (rows / s));
        const int col = static_cast<int>((k % s) * (cols / s));
        for (int i = 0; i < text_len; ++i) {
            out.push_back(TokenDescriptor{TokenRole::text, static_cast<int>(k), row, col});
        }
    }
    return out;
}

}  // namespace flowscale
