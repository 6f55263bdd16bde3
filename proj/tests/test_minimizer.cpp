#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ckam/action.hpp"
#include "ckam/flow.hpp"
#include "ckam/minimizer.hpp"
#include "ckam/model.hpp"

using namespace ckam;

namespace {

EvolveSettings curve_settings(double delta = 0.02) {
    EvolveSettings s;
    s.delta = delta;
    return s;
}

} // namespace

TEST_CASE("backtracked curve through a rest point is constant") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = curve_settings();
    ActionTable tab =
        implicit_action(lin, vec1(1.0), 0.0, 1.0, s, Direction::Backward, 64);
    Vec target = tab.grid.node(tab.grid.nearest_node(vec1(1.0)));
    DiscreteCurve c = backtrack_minimizer(lin, tab, target, 1.0);
    REQUIRE(c.xs.size() == std::size_t(tab.steps) + 1);
    CHECK(c.times.front() == Catch::Approx(0.0));
    CHECK(c.times.back() == Catch::Approx(1.0));
    // endpoint contract
    CHECK(torus_dist(c.xs.back(), target, 1) <= 1e-12);
    for (std::size_t k = 0; k < c.xs.size(); ++k)
        CHECK(torus_dist(c.xs[k], target, 1) <= 2e-2);
    for (double u : c.us) CHECK(std::abs(u) <= 2e-2);
    // the first few momentum samples inherit the point-source cone bias;
    // past t ~ 0.2 the curve is clean
    for (std::size_t k = 0; k < c.ps.size(); ++k)
        if (c.times[k] >= 0.2) CHECK(norm(c.ps[k]) <= 5e-2);
}

TEST_CASE("backtracked curve at the pendulum hyperbolic point") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = curve_settings();
    ActionTable tab =
        implicit_action(pend, vec1(0.0), 0.0, 2.0, s, Direction::Backward, 128);
    DiscreteCurve c = backtrack_minimizer(pend, tab, vec1(0.0), 2.0);
    for (std::size_t k = 0; k < c.xs.size(); ++k)
        CHECK(torus_dist(c.xs[k], vec1(0.0), 1) <= 1e-2);
    for (double u : c.us) CHECK(std::abs(u) <= 1e-2);
}

TEST_CASE("backtracking rejects forward tables and long horizons") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = curve_settings();
    ActionTable fwd =
        implicit_action(lin, vec1(1.0), 0.0, 0.5, s, Direction::Forward, 64);
    CHECK_THROWS_AS(backtrack_minimizer(lin, fwd, vec1(1.0), 0.5), Unsupported);
    ActionTable bwd =
        implicit_action(lin, vec1(1.0), 0.0, 0.5, s, Direction::Backward, 64);
    CHECK_THROWS_AS(backtrack_minimizer(lin, bwd, vec1(1.0), 1.0), Error);
}

TEST_CASE("initial momentum vanishes at rest points") {
    EvolveSettings s = curve_settings();
    std::vector<double> horizons = {4.0, 8.0, 16.0};

    auto [p_lin, lin] =
        initial_momentum(make_linear_discount(), vec1(2.0), 0.0, horizons, s, 64);
    CHECK(lin.cauchy_ok);
    CHECK(std::abs(p_lin[0]) <= 2e-2);

    auto [p_pend, pend] =
        initial_momentum(make_pendulum(), vec1(0.0), 0.0, horizons, s, 128);
    CHECK(pend.cauchy_ok);
    CHECK(std::abs(p_pend[0]) <= 2e-2);
}

TEST_CASE("initial momentum rejects malformed horizon lists") {
    EvolveSettings s = curve_settings();
    ContactModel lin = make_linear_discount();
    CHECK_THROWS_AS(initial_momentum(lin, vec1(1.0), 0.0, {4.0, 8.0}, s, 64), Error);
    CHECK_THROWS_AS(initial_momentum(lin, vec1(1.0), 0.0, {4.0, 8.0, 6.0}, s, 64),
                    Error);
}

TEST_CASE("initial momentum agrees with the shooting construction") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    EvolveSettings s = curve_settings();
    std::vector<double> horizons = {4.0, 8.0, 16.0};
    for (double x0 : {0.5, 2.0}) {
        auto [p0, diag] = initial_momentum(pend, vec1(x0), 0.0, horizons, s, 128);
        REQUIRE(diag.cauchy_ok);
        std::vector<double> p_shoot = shoot_p0(branches, vec1(x0));
        double best = 1e18;
        for (double p : p_shoot) best = std::min(best, std::abs(p - p0[0]));
        CHECK(best <= 5e-2);
    }
}

TEST_CASE("saddle data of the pendulum") {
    ContactModel pend = make_pendulum();
    SaddleInfo info = saddle_eigen(pend);
    CHECK(std::abs(info.point[0]) <= 1e-8);
    CHECK(std::abs(info.point[1]) <= 1e-8);
    const double lu = (-1.0 + std::sqrt(5.0)) / 2.0;
    const double ls = (-1.0 - std::sqrt(5.0)) / 2.0;
    CHECK(info.lambda_unstable == Catch::Approx(lu).margin(1e-6));
    CHECK(info.lambda_stable == Catch::Approx(ls).margin(1e-6));
    // eigenvector slopes p/x equal the eigenvalues for this field
    CHECK(info.v_unstable[1] / info.v_unstable[0] == Catch::Approx(lu).margin(1e-6));
    CHECK(info.v_stable[1] / info.v_stable[0] == Catch::Approx(ls).margin(1e-6));
}

TEST_CASE("planar reduction failures are detected") {
    // no saddle: the linearization of the discount model is degenerate
    CHECK_THROWS_AS(saddle_eigen(make_linear_discount()), NotASaddle);
    // x-dependent coupling makes the momentum equation depend on u
    ContactModel ugly = make_model("custom", {{"dim", 1.0}},
                                   {{"potential", "cos(x)"}, {"coupling", "cos(x)"}});
    CHECK_THROWS_AS(saddle_stable_manifold(ugly), PlanarReductionFailed);
}

TEST_CASE("stable branches are symmetric under the phase flip") {
    ContactModel pend = make_pendulum();
    auto [a, b] = saddle_stable_manifold(pend);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k][0] == Catch::Approx(-b.samples[k][0]).margin(1e-9));
        CHECK(a.samples[k][1] == Catch::Approx(-b.samples[k][1]).margin(1e-9));
    }
}

TEST_CASE("branch points flow forward into the saddle") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    for (const ManifoldCurve* br : {&branches.first, &branches.second}) {
        std::array<double, 2> y = br->samples[br->samples.size() / 2];
        double best = 1e18;
        const double dt = 1e-3;
        for (int k = 0; k < 50000; ++k) {
            y = detail::planar_rk4(pend, y, dt);
            best = std::min(best, std::hypot(std::remainder(y[0], two_pi), y[1]));
        }
        CHECK(best <= 1e-3);
    }
}

TEST_CASE("shooting the hyperbolic point returns the trivial momentum") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    std::vector<double> ps = shoot_p0(branches, vec1(0.0));
    double best = 1e18;
    for (double p : ps) best = std::min(best, std::abs(p));
    CHECK(best <= 1e-9);
}

TEST_CASE("shooting values at x0 = 1 match the reference crossings") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    std::vector<double> ps = shoot_p0(branches, vec1(1.0));
    REQUIRE(ps.size() >= 2);
    double b1 = 1e18, b2 = 1e18;
    for (double p : ps) {
        b1 = std::min(b1, std::abs(p - (-1.5882103958026197)));
        b2 = std::min(b2, std::abs(p - 6.180408));
    }
    CHECK(b1 <= 1e-3);
    CHECK(b2 <= 1e-2);
}

TEST_CASE("off-manifold shots spiral into the focus") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    double p0 = shoot_p0(branches, vec1(1.0)).front() + 0.1;
    Orbit orb = integrate_orbit(pend, {vec1(1.0), vec1(p0), 0.0}, 200.0, 1e-2);
    PointSet pts = omega_limit(orb, 0.25, 1e-2, 1);
    REQUIRE(pts.size() == 1);
    CHECK(torus_dist(pts[0].x, vec1(std::numbers::pi), 1) <= 1e-2);
}

TEST_CASE("shooting with no crossings raises") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend, 1e-4, 0.01);
    CHECK_THROWS_AS(shoot_p0(branches, vec1(2.0)), NoIntersection);
}

TEST_CASE("bisection refinement lands on the manifold") {
    ContactModel pend = make_pendulum();
    auto branches = saddle_stable_manifold(pend);
    for (double x0 : {0.5, 1.0, 1.5}) {
        for (double p_guess : shoot_p0(branches, vec1(x0))) {
            if (std::abs(p_guess) > 4.0) continue; // wrapped crossings excluded
            double pr = refine_stable_momentum(pend, x0, p_guess);
            CHECK(std::abs(pr - p_guess) <= 5e-3);
            Orbit orb = integrate_orbit(pend, {vec1(x0), vec1(pr), 0.0}, 30.0, 1e-3);
            double best = 1e18;
            for (const State& s : orb.states)
                best = std::min(best,
                                std::hypot(torus_dist(s.x, vec1(0.0), 1), norm(s.p)));
            CHECK(best <= 1e-4);
        }
    }
}

TEST_CASE("rest orbits of the linear model are semistatic") {
    ContactModel lin = make_linear_discount();
    Orbit orb = integrate_orbit(lin, {vec1(2.0), vec1(0.0), 0.0}, 5.0, 1e-2);
    EvolveSettings s = curve_settings();
    double defect =
        check_semistatic(lin, orb, s, {0.5, 1.0, 2.0}, {{0.5, 1.5}, {1.0, 3.0}}, 64);
    CHECK(defect <= 2e-2);
}

TEST_CASE("the rest orbit at the hyperbolic point is globally minimizing") {
    ContactModel pend = make_pendulum();
    Orbit orb = integrate_orbit(pend, {vec1(0.0), vec1(0.0), 0.0}, 5.0, 1e-2);
    EvolveSettings s = curve_settings();
    double defect =
        check_globally_minimizing(pend, orb, s, {{0.0, 2.0}, {1.0, 4.0}}, 128);
    CHECK(defect <= 2e-2);
}
