#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ckam/grid.hpp"

using namespace ckam;

namespace {

GridFunction sample(const PeriodicGrid& g, double (*f)(double)) {
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.node(i)[0]);
    return out;
}

} // namespace

TEST_CASE("torus wrapping and distances") {
    CHECK(wrap_coord(two_pi + 0.5) == Catch::Approx(0.5));
    CHECK(wrap_coord(-0.5) == Catch::Approx(two_pi - 0.5));
    CHECK(torus_delta_coord(0.1, two_pi - 0.1) == Catch::Approx(0.2));
    CHECK(torus_dist(vec1(0.1), vec1(two_pi - 0.1), 1) == Catch::Approx(0.2));
}

TEST_CASE("interpolate is exact at nodes and near-exact at midpoints") {
    PeriodicGrid g{1, 256};
    GridFunction f = sample(g, [](double x) { return std::sin(x); });
    for (std::size_t k : {std::size_t(0), std::size_t(31), std::size_t(255)})
        CHECK(interpolate(f, g.node(k)) == Catch::Approx(f[k]).margin(1e-15));
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        double x = g.node(k)[0] + 0.5 * g.spacing();
        worst = std::max(worst, std::abs(interpolate(f, vec1(x)) - std::sin(x)));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("interpolate of a constant is the constant") {
    PeriodicGrid g{1, 32};
    GridFunction f(g);
    for (auto& v : f.values) v = 3.25;
    for (double x : {0.0, 0.37, 5.9, 6.2831})
        CHECK(interpolate(f, vec1(x)) == Catch::Approx(3.25));
}

TEST_CASE("interpolate reproduces piecewise-affine data inside cells") {
    PeriodicGrid g{1, 64};
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        f[i] = 2.0 * std::min(g.node(i)[0], two_pi - g.node(i)[0]);
    double x = g.node(10)[0] + 0.3 * g.spacing();
    CHECK(interpolate(f, vec1(x)) == Catch::Approx(2.0 * x).margin(1e-12));
}

TEST_CASE("numeric gradient examples") {
    PeriodicGrid g{1, 512};
    GridFunction f = sample(g, [](double x) { return std::sin(x); });
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        worst = std::max(worst, std::abs(numeric_gradient(f, g.node(k))[0] -
                                         std::cos(g.node(k)[0])));
    CHECK(worst <= 1e-4);

    GridFunction c(g);
    for (auto& v : c.values) v = 7.0;
    CHECK(numeric_gradient(c, vec1(1.0))[0] == 0.0);
}

TEST_CASE("tent function is flagged nonsmooth at its kink") {
    PeriodicGrid g{1, 256};
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        f[i] = std::abs(g.node(i)[0] - std::numbers::pi);
    std::size_t apex = g.nearest_node(vec1(std::numbers::pi));
    double slope = gradient_at_node(f, apex)[0];
    CHECK(slope >= -1.0);
    CHECK(slope <= 1.0);
    CHECK_FALSE(is_smooth_node(f, apex));
    CHECK(is_smooth_node(f, apex + 10));
}

TEST_CASE("sup_norm_diff examples and grid mismatch") {
    PeriodicGrid g{1, 256};
    GridFunction one(g), zero(g);
    for (auto& v : one.values) v = 1.0;
    CHECK(sup_norm_diff(one, zero) == 1.0);
    CHECK(sup_norm_diff(one, one) == 0.0);

    GridFunction s = sample(g, [](double x) { return std::sin(x); });
    GridFunction sh(g);
    for (std::size_t i = 0; i < g.size(); ++i) sh[i] = s[(i + 1) % g.size()];
    CHECK(std::abs(sup_norm_diff(s, sh) - g.spacing()) <= 1e-4);

    PeriodicGrid g2{1, 128};
    GridFunction other(g2);
    CHECK_THROWS_AS(sup_norm_diff(one, other), GridMismatch);
}

TEST_CASE("numeric gradient converges at second order") {
    double err_n = 0.0, err_2n = 0.0;
    for (int n : {128, 256}) {
        PeriodicGrid g{1, n};
        GridFunction f = sample(g, [](double x) { return std::sin(x); });
        double worst = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            worst = std::max(worst, std::abs(numeric_gradient(f, g.node(k))[0] -
                                             std::cos(g.node(k)[0])));
        (n == 128 ? err_n : err_2n) = worst;
    }
    double ratio = err_n / err_2n;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("2d interpolation and gradients") {
    PeriodicGrid g{2, 32};
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        Vec x = g.node(i);
        f[i] = std::sin(x[0]) * std::cos(x[1]);
    }
    Vec q = {1.234, 4.321};
    CHECK(interpolate(f, q) ==
          Catch::Approx(std::sin(q[0]) * std::cos(q[1])).margin(2e-2));
    std::size_t idx = g.index(5, 9);
    Vec grad = gradient_at_node(f, idx);
    Vec x = g.node(idx);
    CHECK(grad[0] == Catch::Approx(std::cos(x[0]) * std::cos(x[1])).margin(2e-2));
    CHECK(grad[1] == Catch::Approx(-std::sin(x[0]) * std::sin(x[1])).margin(2e-2));
}

TEST_CASE("csv serialization carries grid header") {
    PeriodicGrid g{1, 8};
    GridFunction f(g);
    std::ostringstream os;
    write_csv(f, os);
    CHECK(os.str().find("n=8") != std::string::npos);
    CHECK(os.str().find("dim=1") != std::string::npos);
}
