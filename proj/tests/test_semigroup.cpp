#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"

using namespace ckam;

namespace {

GridFunction constant(const PeriodicGrid& g, double c) {
    GridFunction f(g);
    for (auto& v : f.values) v = c;
    return f;
}

} // namespace

TEST_CASE("one-step hand examples on the linear model") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 64};
    EvolveSettings s;
    s.delta = 0.1;
    GridFunction one = constant(g, 1.0);
    GridFunction back = step_backward(lin, one, s);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(back[i] == Catch::Approx(0.9).margin(1e-9));

    GridFunction two = constant(g, 2.0);
    GridFunction fwd = step_forward(lin, two, s);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(fwd[i] == Catch::Approx(2.2).margin(1e-9));
}

TEST_CASE("settings violations throw") {
    ContactModel pend = make_pendulum();
    PeriodicGrid g{1, 64};
    GridFunction w = constant(g, 0.0);
    EvolveSettings s;
    s.delta = 0.6; // kappa = 1 so delta*kappa > 1/2
    CHECK_THROWS_AS(step_backward(pend, w, s), ContractionViolation);

    EvolveSettings lf;
    lf.backend = Backend::LaxFriedrichs;
    lf.delta = 0.05;
    PeriodicGrid g2{1, 256};
    GridFunction steep(g2);
    for (std::size_t i = 0; i < g2.size(); ++i)
        steep[i] = 3.0 * std::sin(g2.node(i)[0]);
    CHECK_THROWS_AS(evolve(pend, steep, 0.5, lf), CflViolation);

    EvolveSettings v;
    v.backend = Backend::LaxFriedrichs;
    v.delta = 1e-3;
    CHECK_THROWS_AS(step_forward(pend, w, v), Unsupported);
}

TEST_CASE("evolve matches the scalar exponential on the linear model") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 256};
    EvolveSettings s;
    s.delta = 1e-3;
    GridFunction w = evolve(lin, constant(g, 1.0), 1.0, s);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(w[i] - std::exp(-1.0)));
    CHECK(worst <= 5e-3);
}

TEST_CASE("no-solution model grows linearly") {
    ContactModel nosol = make_no_solution();
    PeriodicGrid g{1, 64};
    EvolveSettings s;
    s.delta = 1e-2;
    GridFunction w = evolve(nosol, constant(g, 0.0), 10.0, s);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(w[i] == Catch::Approx(10.0).margin(1e-6));
}

TEST_CASE("forward evolution of a constant diverges eventually") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 64};
    EvolveSettings s;
    s.delta = 1e-2;
    CHECK_THROWS_AS(evolve(lin, constant(g, 1.0), 20.0, s, Direction::Forward),
                    DivergedError);
}

TEST_CASE("monotonicity of both one-step operators") {
    ContactModel pend = make_pendulum();
    PeriodicGrid g{1, 64};
    EvolveSettings s;
    s.delta = 1e-2;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        GridFunction psi(g), phi(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double x = g.node(i)[0];
            psi[i] = un(rng) * std::sin(x) + un(rng) * std::cos(2 * x);
            phi[i] = psi[i] - 0.05 - std::abs(un(rng));
        }
        GridFunction b1 = step_backward(pend, phi, s), b2 = step_backward(pend, psi, s);
        GridFunction f1 = step_forward(pend, phi, s), f2 = step_forward(pend, psi, s);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(b1[i] <= b2[i] + 1e-9);
            CHECK(f1[i] <= f2[i] + 1e-9);
        }
    }
}

TEST_CASE("monotonicity holds for the finite-difference backend too") {
    ContactModel pend = make_pendulum();
    PeriodicGrid g{1, 128};
    EvolveSettings s;
    s.backend = Backend::LaxFriedrichs;
    s.delta = 1e-3;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        // the finite-difference backend needs smooth data for its CFL bound
        double a1 = un(rng), a2 = un(rng), gap = 0.05 + std::abs(un(rng));
        GridFunction psi(g), phi(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double x = g.node(i)[0];
            psi[i] = a1 * std::sin(x) + a2 * std::cos(2 * x);
            phi[i] = psi[i] - gap;
        }
        GridFunction b1 = evolve(pend, phi, 0.1, s), b2 = evolve(pend, psi, 0.1, s);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(b1[i] <= b2[i] + 1e-9);
    }
}

TEST_CASE("composition over steps equals one long evolution") {
    ContactModel pend = make_pendulum();
    PeriodicGrid g{1, 128};
    EvolveSettings s;
    s.delta = 1e-3;
    GridFunction phi(g);
    for (std::size_t i = 0; i < g.size(); ++i) phi[i] = std::sin(g.node(i)[0]);
    GridFunction direct = evolve(pend, phi, 1.5, s);
    GridFunction split = evolve(pend, evolve(pend, phi, 0.5, s), 1.0, s);
    CHECK(sup_norm_diff(direct, split) <= 1e-9);
}

TEST_CASE("backends agree trivially at t = 0 and within bound at t = 1") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 256};
    EvolveSettings sv, slf;
    sv.delta = slf.delta = 1e-3;
    GridFunction one = constant(g, 1.0);
    CHECK(backends_agree(lin, one, 0.0, sv, slf) == 0.0);
    CHECK(backends_agree(lin, one, 1.0, sv, slf) <= 1e-2);
}

TEST_CASE("extra Picard refinement stays consistent") {
    // the refined scheme is still first-order consistent: on the linear model
    // it must track the scalar exponential as the unrefined one does
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 128};
    EvolveSettings s;
    s.delta = 1e-3;
    s.picard_iters = 3;
    GridFunction one(g, 1.0);
    GridFunction w = evolve(lin, one, 1.0, s);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(w[i] - std::exp(-1.0)));
    CHECK(worst <= 5e-3);
}

TEST_CASE("snapshot hook fires on schedule") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 64};
    EvolveSettings s;
    s.delta = 1e-2;
    int calls = 0;
    double last_t = 0.0;
    evolve(lin, constant(g, 1.0), 1.0, s, Direction::Backward,
           [&](int, double t, const GridFunction&) {
               ++calls;
               last_t = t;
           },
           25);
    CHECK(calls == 4);
    CHECK(last_t == Catch::Approx(1.0));
}
