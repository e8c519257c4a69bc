#include "flowscale/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace flowscale {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(cvec& a, bool inverse) {
    const size_t n = a.size();
    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = kTwoPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein chirp-z for arbitrary n, built on the radix-2 kernel.
void fft_bluestein(cvec& a, bool inverse) {
    const size_t n = a.size();
    size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;

    cvec w(n);
    for (size_t k = 0; k < n; ++k) {
        // exponent k^2 mod 2n keeps the angle argument small
        size_t e = (k * k) % (2 * n);
        double ang = kTwoPi * static_cast<double>(e) / (2.0 * n);
        if (!inverse) ang = -ang;
        w[k] = {std::cos(ang), std::sin(ang)};
    }

    cvec x(m, {0.0, 0.0}), y(m, {0.0, 0.0});
    for (size_t k = 0; k < n; ++k) x[k] = a[k] * w[k];
    for (size_t k = 0; k < n; ++k) {
        y[k] = std::conj(w[k]);
        if (k != 0) y[m - k] = std::conj(w[k]);
    }
    fft_radix2(x, false);
    fft_radix2(y, false);
    for (size_t k = 0; k < m; ++k) x[k] *= y[k];
    fft_radix2(x, true);
    double inv_m = 1.0 / static_cast<double>(m);
    for (size_t k = 0; k < n; ++k) a[k] = x[k] * inv_m * w[k];
}

}  // namespace

void fft(cvec& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0) throw std::invalid_argument("fft: empty input");
    if (n > 1) {
        if (is_pow2(n)) {
            fft_radix2(a, inverse);
        } else {
            fft_bluestein(a, inverse);
        }
    }
    if (inverse) {
        double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv_n;
    }
}

void fft2(cvec& a, int h, int w, bool inverse) {
    if (a.size() != static_cast<size_t>(h) * w) {
        throw std::invalid_argument("fft2: size mismatch");
    }
    cvec row(w), col(h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) row[x] = a[static_cast<size_t>(y) * w + x];
        fft(row, inverse);
        for (int x = 0; x < w; ++x) a[static_cast<size_t>(y) * w + x] = row[x];
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = a[static_cast<size_t>(y) * w + x];
        fft(col, inverse);
        for (int y = 0; y < h; ++y) a[static_cast<size_t>(y) * w + x] = col[y];
    }
}

}  // namespace flowscale
