#include "flowscale/projection.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "flowscale/fft.hpp"

namespace flowscale {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

// Per-axis filter weights indexed by DFT bin.
std::vector<double> axis_weights(int n, const ProjectionConfig& cfg) {
    std::vector<double> w(n, 0.0);
    double edge = cfg.cutoff_fraction * n / 2.0;
    for (int k = 0; k < n; ++k) {
        double f = std::abs(k <= n / 2 ? k : k - n);
        if (cfg.filter_kind == FilterKind::ideal || cfg.transition_width <= 0.0) {
            w[k] = (f <= edge) ? 1.0 : 0.0;
        } else {
            double lo = edge * (1.0 - cfg.transition_width);
            double hi = edge * (1.0 + cfg.transition_width);
            if (f <= lo) {
                w[k] = 1.0;
            } else if (f >= hi) {
                w[k] = 0.0;
            } else {
                w[k] = 0.5 * (1.0 + std::cos(kPi * (f - lo) / (hi - lo)));
            }
        }
    }
    return w;
}

// Average-pooling response at (signed) extra-grid frequency q:
// a(q) = (1/f) * sum_j exp(+2*pi*i*q*j/Ne)
std::complex<double> pool_response(double q, int factor, int extra_n) {
    std::complex<double> s(0.0, 0.0);
    for (int j = 0; j < factor; ++j) {
        double ang = 2.0 * kPi * q * j / extra_n;
        s += std::complex<double>(std::cos(ang), std::sin(ang));
    }
    return s / static_cast<double>(factor);
}

}  // namespace

Grid lowpass(const Grid& x, const ProjectionConfig& cfg) {
    if (cfg.cutoff_fraction <= 0.0 || cfg.cutoff_fraction > 1.0) {
        throw std::invalid_argument("lowpass: cutoff_fraction must be in (0,1]");
    }
    auto wy = axis_weights(x.height, cfg);
    auto wx = axis_weights(x.width, cfg);
    Grid out(x.channels, x.height, x.width);
    cvec buf(x.plane());
    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.data.data() + c * x.plane();
        for (size_t i = 0; i < x.plane(); ++i) buf[i] = {src[i], 0.0};
        fft2(buf, x.height, x.width, false);
        for (int ky = 0; ky < x.height; ++ky) {
            for (int kx = 0; kx < x.width; ++kx) {
                buf[static_cast<size_t>(ky) * x.width + kx] *= wy[ky] * wx[kx];
            }
        }
        fft2(buf, x.height, x.width, true);
        double* dst = out.data.data() + c * x.plane();
        for (size_t i = 0; i < x.plane(); ++i) dst[i] = buf[i].real();
    }
    return out;
}

Grid upsample_bandlimited(const Grid& x, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    if (factor == 1) return x;
    const int hn = x.height, wn = x.width;
    const int he = hn * factor, we = wn * factor;
    Grid out(x.channels, he, we);

    cvec buf(static_cast<size_t>(hn) * wn);
    cvec pad(static_cast<size_t>(he) * we);
    const double norm = static_cast<double>(factor) * factor;

    // (signed frequency, split weight) targets for one native bin
    auto targets = [&](int k, int n) {
        std::vector<std::pair<double, double>> t;
        if (n % 2 == 0 && k == n / 2) {
            t.push_back({n / 2.0, 0.5});
            t.push_back({-n / 2.0, 0.5});
        } else {
            t.push_back({static_cast<double>(k <= n / 2 ? k : k - n), 1.0});
        }
        return t;
    };

    for (int c = 0; c < x.channels; ++c) {
        const double* src = x.data.data() + c * x.plane();
        for (size_t i = 0; i < x.plane(); ++i) buf[i] = {src[i], 0.0};
        fft2(buf, hn, wn, false);
        std::fill(pad.begin(), pad.end(), std::complex<double>(0.0, 0.0));
        for (int ky = 0; ky < hn; ++ky) {
            for (int kx = 0; kx < wn; ++kx) {
                std::complex<double> coef =
                    buf[static_cast<size_t>(ky) * wn + kx] * norm;
                for (auto [qy, sy] : targets(ky, hn)) {
                    for (auto [qx, sx] : targets(kx, wn)) {
                        std::complex<double> comp =
                            pool_response(qy, factor, he) *
                            pool_response(qx, factor, we);
                        int iy = (static_cast<int>(qy) % he + he) % he;
                        int ix = (static_cast<int>(qx) % we + we) % we;
                        pad[static_cast<size_t>(iy) * we + ix] +=
                            coef * sy * sx / comp;
                    }
                }
            }
        }
        fft2(pad, he, we, true);
        double* dst = out.data.data() + c * out.plane();
        for (size_t i = 0; i < out.plane(); ++i) dst[i] = pad[i].real();
    }
    return out;
}

Grid downsample(const Grid& x, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
    if (factor == 1) return x;
    if (x.height % factor != 0 || x.width % factor != 0) {
        throw std::invalid_argument("downsample: dimensions not divisible by factor");
    }
    const int h = x.height / factor, w = x.width / factor;
    Grid out(x.channels, h, w);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int c = 0; c < x.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                double s = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) {
                        s += x.at(c, y * factor + dy, xx * factor + dx);
                    }
                }
                out.at(c, y, xx) = s * inv;
            }
        }
    }
    return out;
}

}  // namespace flowscale
