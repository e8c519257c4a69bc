#include "flowscale/mmdit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flowscale/rng.hpp"

namespace flowscale {

namespace {

// out[n x dim] = in[n x dim] * w[dim x dim]
std::vector<double> matmul(const std::vector<double>& in, const std::vector<double>& w,
                           size_t n, size_t dim) {
    std::vector<double> out(n * dim, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double* row = in.data() + i * dim;
        double* orow = out.data() + i * dim;
        for (size_t k = 0; k < dim; ++k) {
            const double a = row[k];
            const double* wrow = w.data() + k * dim;
            for (size_t j = 0; j < dim; ++j) orow[j] += a * wrow[j];
        }
    }
    return out;
}

}  // namespace

TokenSequence make_sequence(int text_len, int rows, int cols, const ToolkitConfig& toolkit,
                            int model_dim, std::uint64_t seed) {
    if (text_len <= 0 || rows <= 0 || cols <= 0 || model_dim <= 0)
        throw std::invalid_argument("make_sequence: dimensions must be positive");
    GaussianStream text_stream(derive_seed(seed, 0));
    std::vector<std::vector<double>> text_features(text_len, std::vector<double>(model_dim));
    for (auto& f : text_features)
        for (double& v : f) v = text_stream.next();

    TokenSequence seq;
    if (toolkit.text_duplication) {
        for (const TokenDescriptor& d :
             duplicate_text(text_len, toolkit.rope.scale, rows, cols)) {
            Token tok;
            tok.role = TokenRole::text;
            tok.row = d.row;
            tok.col = d.col;
            // every copy repeats the same text features
            tok.features = text_features[seq.size() % text_len];
            seq.push_back(std::move(tok));
        }
    } else {
        for (int i = 0; i < text_len; ++i) {
            seq.push_back(Token{TokenRole::text, 0, 0, text_features[i]});
        }
    }

    GaussianStream image_stream(derive_seed(seed, 1));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            Token tok;
            tok.role = TokenRole::image;
            tok.row = r;
            tok.col = c;
            tok.features.resize(model_dim);
            for (double& v : tok.features) v = image_stream.next();
            seq.push_back(std::move(tok));
        }
    }
    return seq;
}

MmditModel build_model(std::uint64_t seed, int model_dim, int head_dim, int n_heads,
                       int n_layers) {
    if (model_dim != head_dim * n_heads)
        throw std::invalid_argument("build_model: model_dim must equal head_dim * n_heads");
    if (head_dim % 4 != 0)
        throw std::invalid_argument("build_model: head_dim must be divisible by 4");
    if (n_layers < 0) throw std::invalid_argument("build_model: n_layers must be >= 0");
    MmditModel model;
    model.model_dim = model_dim;
    model.head_dim = head_dim;
    model.n_heads = n_heads;
    model.n_layers = n_layers;
    const double scale = 1.0 / std::sqrt(static_cast<double>(model_dim));
    GaussianStream stream(seed);
    auto draw = [&](std::vector<double>& w) {
        w.resize(static_cast<size_t>(model_dim) * model_dim);
        for (double& v : w) v = scale * stream.next();
    };
    model.layers.resize(n_layers);
    for (auto& layer : model.layers) {
        draw(layer.wq);
        draw(layer.wk);
        draw(layer.wv);
        draw(layer.wo);
    }
    return model;
}

std::vector<AttnStats> forward_audit(const MmditModel& model, const TokenSequence& seq,
                                     const ToolkitConfig& toolkit) {
    if (seq.empty()) throw std::invalid_argument("forward_audit: empty sequence");
    const size_t n = seq.size();
    const size_t dim = static_cast<size_t>(model.model_dim);
    const int hd = model.head_dim;
    const int quarter = hd / 4;

    std::vector<double> x(n * dim);
    std::vector<size_t> image_index;
    for (size_t i = 0; i < n; ++i) {
        if (static_cast<int>(seq[i].features.size()) != model.model_dim)
            throw std::invalid_argument("forward_audit: feature length mismatch");
        std::copy(seq[i].features.begin(), seq[i].features.end(), x.begin() + i * dim);
        if (seq[i].role == TokenRole::image) image_index.push_back(i);
    }

    // Rotation tables per (token, frequency): RoPE depends only on position.
    const std::vector<double> theta =
        rope_frequencies(model.head_dim, ntk_scaled_base(toolkit.rope));
    std::vector<double> rot_cos(n * 2 * quarter), rot_sin(n * 2 * quarter);
    for (size_t i = 0; i < n; ++i) {
        for (int axis = 0; axis < 2; ++axis) {
            const double pos = axis == 0 ? seq[i].row : seq[i].col;
            for (int d = 0; d < quarter; ++d) {
                const double a = pos * theta[d];
                rot_cos[(i * 2 + axis) * quarter + d] = std::cos(a);
                rot_sin[(i * 2 + axis) * quarter + d] = std::sin(a);
            }
        }
    }
    auto rotate_all = [&](std::vector<double>& q) {
        for (size_t i = 0; i < n; ++i) {
            for (int h = 0; h < model.n_heads; ++h) {
                double* head = q.data() + i * dim + static_cast<size_t>(h) * hd;
                for (int axis = 0; axis < 2; ++axis) {
                    for (int d = 0; d < quarter; ++d) {
                        const double c = rot_cos[(i * 2 + axis) * quarter + d];
                        const double s = rot_sin[(i * 2 + axis) * quarter + d];
                        double& a = head[axis * 2 * quarter + 2 * d];
                        double& b = head[axis * 2 * quarter + 2 * d + 1];
                        const double a0 = a, b0 = b;
                        a = a0 * c - b0 * s;
                        b = a0 * s + b0 * c;
                    }
                }
            }
        }
    };

    const double logit_scale = attn_scale(toolkit.rope.scale, toolkit.attention_scale_mode) /
                               std::sqrt(static_cast<double>(hd));

    std::vector<AttnStats> stats;
    stats.reserve(model.layers.size());
    std::vector<double> logits(n), weights(n);
    for (size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        std::vector<double> q = matmul(x, layer.wq, n, dim);
        std::vector<double> k = matmul(x, layer.wk, n, dim);
        std::vector<double> v = matmul(x, layer.wv, n, dim);
        rotate_all(q);
        rotate_all(k);

        AttnStats st;
        st.per_head_entropy.assign(model.n_heads, 0.0);
        st.text_mass_per_image_token.assign(image_index.size(), 0.0);
        st.max_logit = -std::numeric_limits<double>::infinity();
        std::vector<double> attn_out(n * dim, 0.0);
        std::vector<size_t> image_rank(n, SIZE_MAX);
        for (size_t r = 0; r < image_index.size(); ++r) image_rank[image_index[r]] = r;

        for (int h = 0; h < model.n_heads; ++h) {
            const size_t off = static_cast<size_t>(h) * hd;
            double entropy_sum = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double* qi = q.data() + i * dim + off;
                double mx = -std::numeric_limits<double>::infinity();
                for (size_t j = 0; j < n; ++j) {
                    const double* kj = k.data() + j * dim + off;
                    double dotv = 0.0;
                    for (int d = 0; d < hd; ++d) dotv += qi[d] * kj[d];
                    logits[j] = dotv * logit_scale;
                    if (logits[j] > mx) mx = logits[j];
                }
                if (!std::isfinite(mx))
                    throw std::runtime_error("forward_audit: non-finite logits at layer " +
                                             std::to_string(li));
                if (mx > st.max_logit) st.max_logit = mx;
                double total = 0.0;
                for (size_t j = 0; j < n; ++j) {
                    weights[j] = std::exp(logits[j] - mx);
                    total += weights[j];
                }
                double entropy = 0.0, text_mass = 0.0;
                double* orow = attn_out.data() + i * dim + off;
                for (size_t j = 0; j < n; ++j) {
                    const double w = weights[j] / total;
                    if (w > 0.0) entropy -= w * std::log(w);
                    if (seq[j].role == TokenRole::text) text_mass += w;
                    const double* vj = v.data() + j * dim + off;
                    for (int d = 0; d < hd; ++d) orow[d] += w * vj[d];
                }
                entropy_sum += entropy;
                if (image_rank[i] != SIZE_MAX) {
                    st.text_mass_per_image_token[image_rank[i]] +=
                        text_mass / model.n_heads;
                }
            }
            st.per_head_entropy[h] = entropy_sum / static_cast<double>(n);
        }

        std::vector<double> proj = matmul(attn_out, layer.wo, n, dim);
        for (size_t i = 0; i < x.size(); ++i) {
            x[i] += proj[i];
            if (!std::isfinite(x[i]))
                throw std::runtime_error("forward_audit: non-finite features at layer " +
                                         std::to_string(li));
        }
        stats.push_back(std::move(st));
    }
    return stats;
}

std::vector<RopeAngleRow> rope_angle_audit(const RopeConfig& cfg, int native_grid,
                                           int extra_grid) {
    if (native_grid <= 0 || extra_grid < native_grid)
        throw std::invalid_argument("rope_angle_audit: need extra_grid >= native_grid >= 1");
    RopeConfig scaled = cfg;
    scaled.scale.native_len = static_cast<long>(native_grid) * native_grid;
    scaled.scale.extra_len = static_cast<long>(extra_grid) * extra_grid;
    const std::vector<double> base_theta = rope_frequencies(cfg.head_dim, cfg.base);
    const std::vector<double> scaled_theta =
        rope_frequencies(cfg.head_dim, ntk_scaled_base(scaled));
    std::vector<RopeAngleRow> rows(base_theta.size());
    for (size_t d = 0; d < base_theta.size(); ++d) {
        rows[d].dim = static_cast<int>(d) + 1;
        rows[d].max_native_angle = native_grid * base_theta[d];
        rows[d].max_extra_angle_scaled = extra_grid * scaled_theta[d];
        rows[d].max_extra_angle_unscaled = extra_grid * base_theta[d];
    }
    return rows;
}

}  // namespace flowscale
