#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowscale {

// Dense channels x height x width field of doubles, row-major per channel.
// Carrier for noise, images, intermediate flow states and velocities.
struct Grid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w) {
        if (c <= 0 || h <= 0 || w <= 0) {
            throw std::invalid_argument("Grid: dimensions must be positive");
        }
        data.assign(static_cast<size_t>(c) * h * w, fill);
    }

    size_t size() const { return data.size(); }
    size_t plane() const { return static_cast<size_t>(height) * width; }

    double& at(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Grid& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    std::string shape_str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" +
               std::to_string(width);
    }
};

void require_same_shape(const Grid& a, const Grid& b, const char* where);
bool all_finite(const Grid& g);

// Elementwise helpers. All throw on shape mismatch.
Grid operator+(const Grid& a, const Grid& b);
Grid operator-(const Grid& a, const Grid& b);
Grid operator*(double s, const Grid& g);
Grid& operator+=(Grid& a, const Grid& b);

void axpy(Grid& y, double a, const Grid& x);  // y += a*x

double dot(const Grid& a, const Grid& b);
double sum_sq(const Grid& g);
double rms(const Grid& g);  // sqrt(mean of squares), per element

}  // namespace flowscale
