#include "flowscale/grid.hpp"

#include <cmath>

namespace flowscale {

void require_same_shape(const Grid& a, const Grid& b, const char* where) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(where) + ": shape mismatch " +
                                    a.shape_str() + " vs " + b.shape_str());
    }
}

bool all_finite(const Grid& g) {
    for (double v : g.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Grid operator+(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "Grid::operator+");
    Grid r = a;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
    return r;
}

Grid operator-(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "Grid::operator-");
    Grid r = a;
    for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
    return r;
}

Grid operator*(double s, const Grid& g) {
    Grid r = g;
    for (double& v : r.data) v *= s;
    return r;
}

Grid& operator+=(Grid& a, const Grid& b) {
    require_same_shape(a, b, "Grid::operator+=");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
    return a;
}

void axpy(Grid& y, double a, const Grid& x) {
    require_same_shape(y, x, "axpy");
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

double dot(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double sum_sq(const Grid& g) {
    double s = 0.0;
    for (double v : g.data) s += v * v;
    return s;
}

double rms(const Grid& g) { return std::sqrt(sum_sq(g) / g.data.size()); }

}  // namespace flowscale
