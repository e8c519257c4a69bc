#include <cmath>
#include <limits>

#include "doctest.h"
#include "flowscale/mmdit.hpp"

using namespace flowscale;

namespace {

// identical features everywhere and all positions at the origin: attention is
// provably uniform, so the audited statistics have closed forms
TokenSequence uniform_sequence(int n_text, int n_image, int model_dim) {
    std::vector<double> f(model_dim);
    for (int i = 0; i < model_dim; ++i) f[i] = 0.1 * (i % 7) - 0.2;
    TokenSequence seq;
    for (int i = 0; i < n_text; ++i) seq.push_back(Token{TokenRole::text, 0, 0, f});
    for (int i = 0; i < n_image; ++i) seq.push_back(Token{TokenRole::image, 0, 0, f});
    return seq;
}

}  // namespace

TEST_CASE("make_sequence layout without duplication") {
    ToolkitConfig tk;  // duplication off
    TokenSequence seq = make_sequence(4, 3, 5, tk, 16, 1);
    REQUIRE(seq.size() == 4 + 15);
    for (int i = 0; i < 4; ++i) {
        CHECK(seq[i].role == TokenRole::text);
        CHECK(seq[i].row == 0);
        CHECK(seq[i].col == 0);
    }
    // image tokens cover the grid row-major
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 5; ++c) {
            const Token& t = seq[4 + r * 5 + c];
            CHECK(t.role == TokenRole::image);
            CHECK(t.row == r);
            CHECK(t.col == c);
            CHECK(static_cast<int>(t.features.size()) == 16);
        }
    }
    TokenSequence again = make_sequence(4, 3, 5, tk, 16, 1);
    for (size_t i = 0; i < seq.size(); ++i) CHECK(again[i].features == seq[i].features);
    TokenSequence other = make_sequence(4, 3, 5, tk, 16, 2);
    CHECK(other[0].features != seq[0].features);
    CHECK_THROWS_AS(make_sequence(0, 3, 5, tk, 16, 1), std::invalid_argument);
}

TEST_CASE("make_sequence with duplication repeats the text features") {
    ToolkitConfig tk;
    tk.text_duplication = true;
    tk.rope.scale = ScalePair{16, 64};  // s = 2 -> 4 copies
    TokenSequence seq = make_sequence(3, 4, 4, tk, 8, 5);
    REQUIRE(seq.size() == 4 * 3 + 16);
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 3; ++i) {
            const Token& t = seq[k * 3 + i];
            CHECK(t.role == TokenRole::text);
            CHECK(t.features == seq[i].features);  // copy k repeats copy 0
            CHECK(t.row == (k / 2) * 2);
            CHECK(t.col == (k % 2) * 2);
        }
    }
    // image features are unaffected by the text layout
    ToolkitConfig plain;
    TokenSequence base = make_sequence(3, 4, 4, plain, 8, 5);
    CHECK(seq.back().features == base.back().features);
}

TEST_CASE("build_model validates and is seeded") {
    MmditModel m = build_model(3, 32, 8, 4, 2);
    REQUIRE(m.layers.size() == 2);
    CHECK(m.layers[0].wq.size() == 32u * 32u);
    MmditModel m2 = build_model(3, 32, 8, 4, 2);
    CHECK(m2.layers[1].wv == m.layers[1].wv);
    MmditModel m3 = build_model(4, 32, 8, 4, 2);
    CHECK(m3.layers[0].wq != m.layers[0].wq);
    CHECK_THROWS_AS(build_model(1, 32, 8, 3, 2), std::invalid_argument);  // 8*3 != 32
    CHECK_THROWS_AS(build_model(1, 24, 6, 4, 2), std::invalid_argument);  // head_dim % 4
}

TEST_CASE("uniform attention has entropy ln L and proportional text mass") {
    const int n_text = 5, n_image = 11, dim = 32;
    MmditModel model = build_model(7, dim, 8, 4, 2);
    TokenSequence seq = uniform_sequence(n_text, n_image, dim);
    ToolkitConfig tk;  // scale off, identity RoPE positions
    auto stats = forward_audit(model, seq, tk);
    REQUIRE(stats.size() == 2);
    const double lnL = std::log(static_cast<double>(n_text + n_image));
    for (const AttnStats& st : stats) {
        REQUIRE(st.per_head_entropy.size() == 4);
        for (double h : st.per_head_entropy) CHECK(h == doctest::Approx(lnL).epsilon(1e-12));
        REQUIRE(st.text_mass_per_image_token.size() == static_cast<size_t>(n_image));
        const double expect = static_cast<double>(n_text) / (n_text + n_image);
        for (double m : st.text_mass_per_image_token)
            CHECK(m == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("entropy is bounded and positions sharpen attention") {
    const int dim = 32;
    MmditModel model = build_model(11, dim, 8, 4, 1);
    ToolkitConfig tk;
    TokenSequence seq = make_sequence(4, 4, 4, tk, dim, 21);
    auto stats = forward_audit(model, seq, tk);
    REQUIRE(stats.size() == 1);
    const double lnL = std::log(static_cast<double>(seq.size()));
    double mean_entropy = 0.0;
    for (double h : stats[0].per_head_entropy) {
        CHECK(h > 0.0);
        CHECK(h <= lnL + 1e-12);
        mean_entropy += h / stats[0].per_head_entropy.size();
    }
    CHECK(mean_entropy < lnL);  // random features: strictly below uniform
    for (double m : stats[0].text_mass_per_image_token) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
    }
    CHECK(std::isfinite(stats[0].max_logit));
}

TEST_CASE("forward_audit is deterministic and validates input") {
    const int dim = 32;
    MmditModel model = build_model(13, dim, 8, 4, 2);
    ToolkitConfig tk;
    TokenSequence seq = make_sequence(3, 3, 3, tk, dim, 8);
    auto a = forward_audit(model, seq, tk);
    auto b = forward_audit(model, seq, tk);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].per_head_entropy == b[i].per_head_entropy);
        CHECK(a[i].text_mass_per_image_token == b[i].text_mass_per_image_token);
        CHECK(a[i].max_logit == b[i].max_logit);
    }
    CHECK_THROWS_AS(forward_audit(model, TokenSequence{}, tk), std::invalid_argument);
    TokenSequence bad = seq;
    bad[0].features.resize(dim - 1);
    CHECK_THROWS_AS(forward_audit(model, bad, tk), std::invalid_argument);
    TokenSequence inf_seq = seq;
    inf_seq[1].features[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(forward_audit(model, inf_seq, tk), doctest::Contains("layer 0"),
                         std::runtime_error);
}

TEST_CASE("attention scaling lowers the entropy of sharp heads") {
    // entropy matching multiplies logits by a factor > 1, which can only
    // concentrate each softmax row
    const int dim = 32;
    MmditModel model = build_model(17, dim, 8, 4, 1);
    ToolkitConfig off;
    TokenSequence seq = make_sequence(2, 4, 4, off, dim, 31);
    auto base = forward_audit(model, seq, off);
    ToolkitConfig scaled = off;
    scaled.attention_scale_mode = AttnScaleMode::entropy_matching;
    scaled.rope.scale = ScalePair{16, 4096};  // large ratio, scale ~ 1.73
    auto sharp = forward_audit(model, seq, scaled);
    double mean_base = 0.0, mean_sharp = 0.0;
    for (int h = 0; h < 4; ++h) {
        mean_base += base[0].per_head_entropy[h];
        mean_sharp += sharp[0].per_head_entropy[h];
    }
    CHECK(mean_sharp < mean_base);
}

TEST_CASE("rope angle audit preserves the lowest frequency") {
    RopeConfig cfg;
    cfg.head_dim = 64;
    cfg.base = 10000.0;
    auto rows = rope_angle_audit(cfg, 16, 64);
    REQUIRE(rows.size() == 16);
    auto theta = rope_frequencies(64, 10000.0);
    for (size_t d = 0; d < rows.size(); ++d) {
        CHECK(rows[d].dim == static_cast<int>(d) + 1);
        CHECK(rows[d].max_native_angle == doctest::Approx(16.0 * theta[d]).epsilon(1e-14));
        CHECK(rows[d].max_extra_angle_unscaled == doctest::Approx(64.0 * theta[d]).epsilon(1e-14));
        CHECK(rows[d].max_extra_angle_scaled <= rows[d].max_extra_angle_unscaled + 1e-15);
    }
    // lowest frequency (last row): the scaled extra angle matches the native one
    CHECK(rows.back().max_extra_angle_scaled ==
          doctest::Approx(rows.back().max_native_angle).epsilon(1e-12));
    CHECK_THROWS_AS(rope_angle_audit(cfg, 32, 16), std::invalid_argument);
}

TEST_CASE("flux-style multiplier shrinks every angle further") {
    RopeConfig plain;
    plain.head_dim = 32;
    RopeConfig flux = plain;
    flux.base_multiplier = 2.5;
    auto a = rope_angle_audit(plain, 16, 32);
    auto b = rope_angle_audit(flux, 16, 32);
    for (size_t d = 0; d < a.size(); ++d) {
        CHECK(b[d].max_extra_angle_scaled < a[d].max_extra_angle_scaled);
        CHECK(b[d].max_native_angle == a[d].max_native_angle);  // multiplier only hits scaling
    }
}
