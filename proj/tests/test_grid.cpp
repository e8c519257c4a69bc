#include <cmath>

#include "doctest.h"
#include "flowscale/grid.hpp"
#include "flowscale/rng.hpp"

using namespace flowscale;

TEST_CASE("grid construction and indexing") {
    Grid g(2, 3, 4, 1.5);
    CHECK(g.size() == 24);
    CHECK(g.plane() == 12);
    g.at(1, 2, 3) = 7.0;
    CHECK(g.at(1, 2, 3) == 7.0);
    CHECK(g.at(0, 0, 0) == 1.5);
    CHECK(g.shape_str() == "2x3x4");
    CHECK_THROWS_AS(Grid(0, 1, 1), std::invalid_argument);
}

TEST_CASE("elementwise helpers") {
    Grid a(1, 2, 2, 1.0), b(1, 2, 2, 2.0);
    Grid c = a + b;
    CHECK(c.data[0] == 3.0);
    Grid d = b - a;
    CHECK(d.data[3] == 1.0);
    Grid e = 2.0 * b;
    CHECK(e.data[1] == 4.0);
    axpy(a, 3.0, b);
    CHECK(a.data[2] == 7.0);
    CHECK(dot(b, b) == doctest::Approx(16.0));
    CHECK(sum_sq(b) == doctest::Approx(16.0));
    CHECK(rms(b) == doctest::Approx(2.0));
    Grid wrong(1, 2, 3);
    CHECK_THROWS_AS(a + wrong, std::invalid_argument);
}

TEST_CASE("all_finite") {
    Grid g(1, 1, 2);
    CHECK(all_finite(g));
    g.data[1] = std::nan("");
    CHECK_FALSE(all_finite(g));
}

TEST_CASE("gaussian stream determinism and moments") {
    GaussianStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    GaussianStream s(7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = s.next();
        sum += v;
        sum2 += v * v;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("derive_seed decorrelates indices") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    // identical grids from identical seeds
    Grid g1 = gaussian_grid(1, 4, 4, derive_seed(9, 3));
    Grid g2 = gaussian_grid(1, 4, 4, derive_seed(9, 3));
    CHECK(g1.data == g2.data);
}
